//! The triangular self-contact plot: every strut with a positive multiplier
//! becomes a box at its pair of global arclength coordinates `(s, t)`,
//! drawn below the diagonal of the square `[0, L] × [0, L]`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{ContactMapError, StyleError};
use crate::geom::{arclength_coordinates, PolyLink};
use crate::thickness::Strut;

/// Environment variable naming a default style file.
pub const STYLE_ENV: &str = "ROPEWALK_STYLE";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactBox {
    pub s: f64,
    pub t: f64,
    pub size: f64,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub value: f64,
    pub label: String,
    /// Component breaks are labelled away from the axis so they stand out
    /// from the uniform ticks.
    pub lifted: bool,
}

/// The rectangle `[s0, s1] × [t0, t1]` of a component pair, cut along the
/// diagonal when both ranges coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
    pub shade: usize,
    pub on_diagonal: bool,
}

/// A stretch of the diagonal belonging to one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub start: f64,
    pub end: f64,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactPlot {
    pub total_length: f64,
    pub component_offsets: Vec<f64>,
    pub boxes: Vec<ContactBox>,
    pub ticks: Vec<Tick>,
    pub regions: Vec<Region>,
    pub bands: Vec<Band>,
}

fn tick_label(x: f64) -> String {
    format!("{x:.2}")
}

/// Lays out the contact plot of `link` for the struts with positive
/// multipliers; struts without a multiplier or with λ = 0 are skipped.
pub fn build_contact_plot(link: &PolyLink, struts: &[Strut]) -> Result<ContactPlot, ContactMapError> {
    let index = arclength_coordinates(link);
    let total = index.total_length();
    let size = link.average_edge_length();
    let mut boxes = Vec::new();
    for strut in struts {
        for end in [&strut.a, &strut.b] {
            if end.comp >= link.num_components() || end.edge >= link.component_len(end.comp) {
                return Err(ContactMapError::OutOfRange { comp: end.comp, edge: end.edge });
            }
            if !(0.0..=1.0).contains(&end.param) {
                return Err(ContactMapError::BadParameter(end.param));
            }
        }
        let weight = match strut.lambda {
            Some(l) if l > 0.0 => l,
            _ => continue,
        };
        let x = index.coordinate(link, strut.a.comp, strut.a.edge, strut.a.param);
        let y = index.coordinate(link, strut.b.comp, strut.b.edge, strut.b.param);
        let (s, t) = if x <= y { (x, y) } else { (y, x) };
        boxes.push(ContactBox { s, t, size, weight: Some(weight) });
    }
    boxes.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.t.total_cmp(&b.t)));

    let offsets = index.component_offsets().to_vec();
    let mut ends = offsets.clone();
    ends.push(total);
    let mut ticks: Vec<Tick> =
        (0..=10).map(|k| total * k as f64 / 10.0).map(|v| Tick { value: v, label: tick_label(v), lifted: false }).collect();
    for &b in &offsets[1..] {
        ticks.push(Tick { value: b, label: tick_label(b), lifted: true });
    }
    ticks.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.lifted.cmp(&b.lifted)));

    let n = offsets.len();
    let mut regions = Vec::new();
    for i in 0..n {
        for j in i..n {
            regions.push(Region {
                s0: ends[i],
                s1: ends[i + 1],
                t0: ends[j],
                t1: ends[j + 1],
                shade: (i + j) % 2,
                on_diagonal: i == j,
            });
        }
    }
    let bands = (0..n).map(|c| Band { start: ends[c], end: ends[c + 1], component: c }).collect();
    Ok(ContactPlot { total_length: total, component_offsets: offsets, boxes, ticks, regions, bands })
}

/// Rendering parameters. Colors are any SVG color strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub width: u32,
    pub height: u32,
    pub margin: f64,
    pub background: String,
    pub checker: [String; 2],
    pub band_colors: Vec<String>,
    pub band_width: f64,
    pub box_fill: String,
    pub box_stroke: String,
    pub stroke_width: f64,
    pub axis_color: String,
    pub font_size: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            width: 1000,
            height: 1000,
            margin: 70.0,
            background: "#ffffff".into(),
            checker: ["#f4f4f4".into(), "#e2e2e2".into()],
            band_colors: vec!["#9e9e9e".into(), "#f28c28".into(), "#3a9d23".into()],
            band_width: 8.0,
            box_fill: "#0b5d1e".into(),
            box_stroke: "none".into(),
            stroke_width: 1.0,
            axis_color: "#000000".into(),
            font_size: 14.0,
        }
    }
}

impl Style {
    /// Reads `key = value` lines over the defaults. Lines starting with `#`
    /// are comments; `band_colors` takes a comma-separated list.
    pub fn parse(text: &str) -> Result<Style, StyleError> {
        let mut style = Style::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| StyleError::Parse { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, found {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0).ok_or_else(|| bad(format!("invalid number {value:?}")));
            let px = || value.parse::<u32>().ok().filter(|&x| x > 0).ok_or_else(|| bad(format!("invalid size {value:?}")));
            match key {
                "width" => style.width = px()?,
                "height" => style.height = px()?,
                "margin" => style.margin = num()?,
                "background" => style.background = value.into(),
                "checker_light" => style.checker[0] = value.into(),
                "checker_dark" => style.checker[1] = value.into(),
                "band_colors" => {
                    style.band_colors = value.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect();
                    if style.band_colors.is_empty() {
                        return Err(bad("band_colors needs at least one color".into()));
                    }
                }
                "band_width" => style.band_width = num()?,
                "box_fill" => style.box_fill = value.into(),
                "box_stroke" => style.box_stroke = value.into(),
                "stroke_width" => style.stroke_width = num()?,
                "axis_color" => style.axis_color = value.into(),
                "font_size" => style.font_size = num()?,
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        Ok(style)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Style, StyleError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| StyleError::Io { path: path.to_path_buf(), source })?;
        Style::parse(&text)
    }

    /// The style at `path`, else the file named by [`STYLE_ENV`], else the defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Style, StyleError> {
        match path {
            Some(p) => Style::from_file(p),
            None => match std::env::var_os(STYLE_ENV) {
                Some(p) if !p.is_empty() => Style::from_file(p),
                _ => Ok(Style::default()),
            },
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the plot as a standalone SVG 1.1 document. The horizontal axis
/// carries the larger coordinate `t` and the vertical axis `s`, so every
/// box falls below the diagonal.
pub fn emit_svg(plot: &ContactPlot, style: &Style) -> Vec<u8> {
    let (w, h) = (style.width as f64, style.height as f64);
    let side = (w.min(h) - 2.0 * style.margin).max(1.0);
    let total = if plot.total_length > 0.0 { plot.total_length } else { 1.0 };
    let scale = side / total;
    let x0 = style.margin;
    let y0 = style.margin + side;
    let px = |t: f64| x0 + t * scale;
    let py = |s: f64| y0 - s * scale;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="{}"/>"#, style.width, style.height, esc(&style.background));

    let _ = writeln!(out, r#"<g id="regions" stroke="none">"#);
    for r in &plot.regions {
        let fill = esc(&style.checker[r.shade % 2]);
        if r.on_diagonal {
            let _ = writeln!(
                out,
                r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="{fill}"/>"#,
                px(r.t0),
                py(r.s0),
                px(r.t1),
                py(r.s0),
                px(r.t1),
                py(r.s1)
            );
        } else {
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                px(r.t0),
                py(r.s1),
                (r.t1 - r.t0) * scale,
                (r.s1 - r.s0) * scale
            );
        }
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g id="bands" fill="none" stroke-linecap="butt">"#);
    for b in &plot.bands {
        let color = esc(&style.band_colors[b.component % style.band_colors.len()]);
        let _ = writeln!(
            out,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="{:.3}"/>"#,
            px(b.start),
            py(b.start),
            px(b.end),
            py(b.end),
            style.band_width
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(
        out,
        r#"<g id="boxes" fill="{}" stroke="{}" stroke-width="{:.3}">"#,
        esc(&style.box_fill),
        esc(&style.box_stroke),
        style.stroke_width
    );
    for b in &plot.boxes {
        let half = 0.5 * b.size * scale;
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
            px(b.t) - half,
            py(b.s) - half,
            2.0 * half,
            2.0 * half
        );
    }
    let _ = writeln!(out, "</g>");

    let axis = esc(&style.axis_color);
    let fs = style.font_size;
    let _ = writeln!(out, r#"<g id="axes" stroke="{axis}" stroke-width="{:.3}" fill="none">"#, style.stroke_width);
    let _ = writeln!(out, r#"<rect x="{:.3}" y="{:.3}" width="{side:.3}" height="{side:.3}"/>"#, x0, style.margin);
    for t in &plot.ticks {
        let len = if t.lifted { 12.0 } else { 6.0 };
        let _ = writeln!(out, r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, px(t.value), y0, px(t.value), y0 + len);
        let _ = writeln!(out, r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, x0 - len, py(t.value), x0, py(t.value));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g id="labels" fill="{axis}" font-family="sans-serif" font-size="{fs:.3}">"#);
    for t in &plot.ticks {
        let lift = if t.lifted { 1.5 * fs } else { 0.0 };
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            px(t.value),
            y0 + 8.0 + fs + lift,
            esc(&t.label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            x0 - 10.0 - 3.0 * lift,
            py(t.value) + 0.35 * fs,
            esc(&t.label)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out.into_bytes()
}
