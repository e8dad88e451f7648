//! Text formats: the `POLYLINK 1` link file, strut and step-log CSV, and a
//! read-only Geomview VECT importer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::FormatError;
use crate::geom::{PolyLink, Vec3};
use crate::solver::StepReport;
use crate::thickness::Strut;

pub const LINK_HEADER: &str = "POLYLINK 1";
pub const STRUT_CSV_HEADER: &str = "compA,edgeA,u,compB,edgeB,v,chord,lambda";
pub const STEP_LOG_HEADER: &str = "step_index,length_before,length_after,pthi_before,pthi_after,\
n_active_struts,n_active_kinks,projected_grad_norm,step_size,accepted";

fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn keyword_count(line: (usize, &str), keyword: &str) -> Result<usize, FormatError> {
    let (no, text) = line;
    let mut words = text.split_whitespace();
    if words.next() != Some(keyword) {
        return Err(parse_err(no, format!("expected \"{keyword} <count>\", found {text:?}")));
    }
    let count = words
        .next()
        .and_then(|w| w.parse::<usize>().ok())
        .ok_or_else(|| parse_err(no, format!("expected a count after \"{keyword}\"")))?;
    if words.next().is_some() {
        return Err(parse_err(no, "trailing text"));
    }
    Ok(count)
}

fn parse_point(line: (usize, &str)) -> Result<Vec3, FormatError> {
    let (no, text) = line;
    let coords: Vec<&str> = text.split_whitespace().collect();
    if coords.len() != 3 {
        return Err(parse_err(no, format!("expected 3 coordinates, found {}", coords.len())));
    }
    let mut p = [0.0; 3];
    for (slot, word) in p.iter_mut().zip(&coords) {
        let x: f64 = word.parse().map_err(|_| parse_err(no, format!("invalid number {word:?}")))?;
        if !x.is_finite() {
            return Err(parse_err(no, format!("non-finite coordinate {word:?}")));
        }
        *slot = x;
    }
    Ok(Vec3::new(p[0], p[1], p[2]))
}

/// Parses a `POLYLINK 1` document.
pub fn parse_link(text: &str) -> Result<PolyLink, FormatError> {
    let mut lines = content_lines(text);
    let last_line = text.lines().count().max(1);
    let mut next = |what: &str| lines.next().ok_or_else(|| parse_err(last_line, format!("unexpected end of file, expected {what}")));
    let (no, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["POLYLINK", "1"] {
        return Err(parse_err(no, format!("expected header \"{LINK_HEADER}\", found {header:?}")));
    }
    let n_comps = keyword_count(next("component count")?, "components")?;
    if n_comps == 0 {
        return Err(parse_err(no, "link needs at least one component"));
    }
    let mut comps = Vec::with_capacity(n_comps);
    for _ in 0..n_comps {
        let line = next("vertex count")?;
        let m = keyword_count(line, "vertices")?;
        if m < 3 {
            return Err(parse_err(line.0, format!("component needs ≥ 3 vertices, got {m}")));
        }
        let verts = (0..m).map(|_| parse_point(next("a vertex")?)).collect::<Result<Vec<_>, _>>()?;
        comps.push(verts);
    }
    if let Some((no, extra)) = lines.next() {
        return Err(parse_err(no, format!("unexpected content after last component: {extra:?}")));
    }
    Ok(PolyLink::new(comps)?)
}

/// Shortest decimal that parses back to exactly `x`.
fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

pub fn link_to_string(link: &PolyLink) -> String {
    let mut out = format!("{LINK_HEADER}\ncomponents {}\n", link.num_components());
    for comp in link.components() {
        let _ = writeln!(out, "vertices {}", comp.len());
        for p in comp {
            let _ = writeln!(out, "{} {} {}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z));
        }
    }
    out
}

pub fn read_link(path: impl AsRef<Path>) -> Result<PolyLink, FormatError> {
    parse_link(&read_text(path.as_ref())?)
}

pub fn write_link(path: impl AsRef<Path>, link: &PolyLink) -> Result<(), FormatError> {
    write_text(path.as_ref(), &link_to_string(link))
}

/// Struts as CSV rows in key order; an absent multiplier is an empty field.
pub fn struts_to_csv(struts: &[Strut]) -> String {
    let mut sorted = struts.to_vec();
    sorted.sort_by_key(|s| s.key());
    let mut out = format!("{STRUT_CSV_HEADER}\n");
    for s in &sorted {
        let lambda = s.lambda.map(fmt_real).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.a.comp,
            s.a.edge,
            fmt_real(s.a.param),
            s.b.comp,
            s.b.edge,
            fmt_real(s.b.param),
            fmt_real(s.chord),
            lambda
        );
    }
    out
}

pub fn write_struts_csv(path: impl AsRef<Path>, struts: &[Strut]) -> Result<(), FormatError> {
    write_text(path.as_ref(), &struts_to_csv(struts))
}

/// One CSV row of a step log, without the trailing newline.
pub fn step_log_row(r: &StepReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.step_index,
        fmt_real(r.length_before),
        fmt_real(r.length_after),
        fmt_real(r.pthi_before),
        fmt_real(r.pthi_after),
        r.n_active_struts,
        r.n_active_kinks,
        fmt_real(r.projected_grad_norm),
        fmt_real(r.step_size),
        r.accepted
    )
}

pub fn step_log_to_csv(steps: &[StepReport]) -> String {
    let mut out = format!("{STEP_LOG_HEADER}\n");
    for r in steps {
        out.push_str(&step_log_row(r));
        out.push('\n');
    }
    out
}

pub fn write_step_log(path: impl AsRef<Path>, steps: &[StepReport]) -> Result<(), FormatError> {
    write_text(path.as_ref(), &step_log_to_csv(steps))
}

pub fn parse_step_log(text: &str) -> Result<Vec<StepReport>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == STEP_LOG_HEADER => {}
        _ => return Err(parse_err(1, "missing step-log header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(parse_err(no, format!("expected 10 fields, found {}", f.len())));
        }
        let int = |k: usize| f[k].parse::<usize>().map_err(|_| parse_err(no, format!("invalid integer {:?}", f[k])));
        let real = |k: usize| f[k].parse::<f64>().map_err(|_| parse_err(no, format!("invalid number {:?}", f[k])));
        out.push(StepReport {
            step_index: int(0)?,
            length_before: real(1)?,
            length_after: real(2)?,
            pthi_before: real(3)?,
            pthi_after: real(4)?,
            n_active_struts: int(5)?,
            n_active_kinks: int(6)?,
            projected_grad_norm: real(7)?,
            step_size: real(8)?,
            accepted: f[9].parse().map_err(|_| parse_err(no, format!("invalid flag {:?}", f[9])))?,
        });
    }
    Ok(out)
}

pub fn read_step_log(path: impl AsRef<Path>) -> Result<Vec<StepReport>, FormatError> {
    parse_step_log(&read_text(path.as_ref())?)
}

/// Imports the polylines of a Geomview VECT file as closed components,
/// ignoring colors. A closing vertex that repeats the first is dropped.
pub fn parse_vect(text: &str) -> Result<PolyLink, FormatError> {
    let mut tokens = text.lines().enumerate().flat_map(|(i, raw)| {
        raw.split('#').next().unwrap_or("").split_whitespace().map(move |w| (i + 1, w))
    });
    let last_line = text.lines().count().max(1);
    let mut next = || tokens.next().ok_or_else(|| parse_err(last_line, "unexpected end of VECT data"));
    let (no, head) = next()?;
    if head != "VECT" {
        return Err(parse_err(no, format!("expected VECT header, found {head:?}")));
    }
    let mut int = || -> Result<(usize, i64), FormatError> {
        let (no, w) = next()?;
        w.parse::<i64>().map(|x| (no, x)).map_err(|_| parse_err(no, format!("invalid integer {w:?}")))
    };
    let (no, n_lines) = int()?;
    let (_, n_verts) = int()?;
    let (_, _n_colors) = int()?;
    if n_lines <= 0 || n_verts < 0 {
        return Err(parse_err(no, "invalid polyline or vertex count"));
    }
    let mut counts = Vec::with_capacity(n_lines as usize);
    for _ in 0..n_lines {
        let (no, c) = int()?;
        if c == 0 {
            return Err(parse_err(no, "empty polyline"));
        }
        counts.push((no, c.unsigned_abs() as usize));
    }
    for _ in 0..n_lines {
        int()?;
    }
    let total: usize = counts.iter().map(|c| c.1).sum();
    if total != n_verts as usize {
        return Err(parse_err(no, format!("polyline sizes sum to {total}, header says {n_verts}")));
    }
    let mut comps = Vec::with_capacity(counts.len());
    for &(count_line, m) in &counts {
        let mut verts = Vec::with_capacity(m);
        for _ in 0..m {
            let mut p = [0.0; 3];
            for slot in &mut p {
                let (no, w) = next()?;
                let x: f64 = w.parse().map_err(|_| parse_err(no, format!("invalid number {w:?}")))?;
                if !x.is_finite() {
                    return Err(parse_err(no, format!("non-finite coordinate {w:?}")));
                }
                *slot = x;
            }
            verts.push(Vec3::new(p[0], p[1], p[2]));
        }
        if verts.len() > 1 && verts.first() == verts.last() {
            verts.pop();
        }
        if verts.len() < 3 {
            return Err(parse_err(count_line, format!("component needs ≥ 3 vertices, got {}", verts.len())));
        }
        comps.push(verts);
    }
    Ok(PolyLink::new(comps)?)
}

pub fn read_vect(path: impl AsRef<Path>) -> Result<PolyLink, FormatError> {
    parse_vect(&read_text(path.as_ref())?)
}

/// Closed polylines as a VECT document, one white polyline per component.
pub fn vect_to_string(components: &[Vec<Vec3>]) -> String {
    let total: usize = components.iter().map(Vec::len).sum();
    let mut out = format!("VECT\n{} {} {}\n", components.len(), total, components.len());
    let counts: Vec<String> = components.iter().map(|c| format!("-{}", c.len())).collect();
    let _ = writeln!(out, "{}", counts.join(" "));
    let _ = writeln!(out, "{}", vec!["1"; components.len()].join(" "));
    for comp in components {
        for p in comp {
            let _ = writeln!(out, "{} {} {}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z));
        }
    }
    for _ in components {
        out.push_str("1 1 1 1\n");
    }
    out
}
