//! Corner rounding: each polygon corner is replaced by a circular arc of a
//! common radius tangent to both incident edges, giving a C¹ curve whose
//! ropelength bounds the ropelength of the smooth knot type from above.

use std::f64::consts::PI;

use crate::error::SmoothingError;
use crate::geom::{vertex_geometry, PolyLink, Vec3};
use crate::thickness::{enumerate_dcsd_separated, thickness};

/// Fewest sample points per piece accepted by [`smooth_thickness`].
pub const MIN_DENSITY: usize = 8;
/// Relative change between successive densities regarded as converged.
pub const REFINE_TOL: f64 = 1e-6;
/// Number of density doublings attempted before giving up.
pub const MAX_DOUBLINGS: usize = 4;

const RADIUS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: Vec3,
    pub end: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub center: Vec3,
    pub radius: f64,
    /// Tangency point on the incoming edge.
    pub start: Vec3,
    /// Tangency point on the outgoing edge.
    pub end: Vec3,
    /// Subtended angle, equal to the turning angle of the corner.
    pub angle: f64,
    /// Unit tangent at `start`.
    pub start_tangent: Vec3,
    /// The polygon vertex this arc replaces.
    pub vertex: usize,
}

impl Arc {
    /// Position, unit tangent and curvature vector at arclength `r` from `start`.
    fn frame(&self, r: f64) -> (Vec3, Vec3, Vec3) {
        let phi = r / self.radius;
        let e1 = (self.start - self.center) / self.radius;
        let (s, c) = phi.sin_cos();
        let radial = e1 * c + self.start_tangent * s;
        (self.center + radial * self.radius, self.start_tangent * c - e1 * s, -radial / self.radius)
    }

    pub fn point_at(&self, r: f64) -> Vec3 {
        self.frame(r).0
    }

    pub fn tangent_at(&self, r: f64) -> Vec3 {
        self.frame(r).1
    }

    pub fn length(&self) -> f64 {
        self.radius * self.angle
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Segment(Segment),
    Arc(Arc),
}

impl Piece {
    pub fn length(&self) -> f64 {
        match self {
            Piece::Segment(s) => (s.end - s.start).norm(),
            Piece::Arc(a) => a.length(),
        }
    }

    pub fn start(&self) -> Vec3 {
        match self {
            Piece::Segment(s) => s.start,
            Piece::Arc(a) => a.start,
        }
    }

    pub fn end(&self) -> Vec3 {
        match self {
            Piece::Segment(s) => s.end,
            Piece::Arc(a) => a.end,
        }
    }

    fn frame(&self, r: f64) -> (Vec3, Vec3, Vec3) {
        match self {
            Piece::Segment(s) => {
                let d = s.end - s.start;
                let len = d.norm();
                let t = if len > 0.0 { d / len } else { Vec3::zeros() };
                (s.start + t * r, t, Vec3::zeros())
            }
            Piece::Arc(a) => a.frame(r),
        }
    }
}

/// One closed component: arcs and segments in traversal order, starting
/// with the arc (if any) at vertex 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedComponent {
    pub pieces: Vec<Piece>,
    offsets: Vec<f64>,
}

impl RoundedComponent {
    fn new(pieces: Vec<Piece>) -> Self {
        let mut offsets = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        offsets.push(0.0);
        for p in &pieces {
            acc += p.length();
            offsets.push(acc);
        }
        RoundedComponent { pieces, offsets }
    }

    pub fn length(&self) -> f64 {
        *self.offsets.last().unwrap_or(&0.0)
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Arc(a) => Some(a),
            Piece::Segment(_) => None,
        })
    }

    /// Position, unit tangent and curvature vector at arclength `s` (taken
    /// modulo the component length).
    fn frame(&self, s: f64) -> (Vec3, Vec3, Vec3) {
        let len = self.length();
        let s = s.rem_euclid(len);
        let k = match self.offsets.binary_search_by(|o| o.total_cmp(&s)) {
            Ok(k) => k.min(self.pieces.len() - 1),
            Err(k) => k - 1,
        };
        let k = (k..self.pieces.len()).find(|&j| self.pieces[j].length() > 0.0).unwrap_or(k);
        self.pieces[k].frame((s - self.offsets[k]).max(0.0))
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        self.frame(s).0
    }

    /// Sample points with their arclength positions, `density` per piece of
    /// non-negligible length.
    fn samples(&self, density: usize) -> (Vec<Vec3>, Vec<f64>) {
        let mut pts = Vec::new();
        let mut arc = Vec::new();
        let negligible = 1e-12 * self.length();
        for (p, &off) in self.pieces.iter().zip(&self.offsets) {
            let len = p.length();
            if len <= negligible {
                continue;
            }
            for k in 0..density {
                let r = len * k as f64 / density as f64;
                pts.push(p.frame(r).0);
                arc.push(off + r);
            }
        }
        (pts, arc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundedCurve {
    pub components: Vec<RoundedComponent>,
    pub radius: f64,
}

impl RoundedCurve {
    /// Dense closed polylines, `density` points per piece.
    pub fn dense_polyline(&self, density: usize) -> Vec<Vec<Vec3>> {
        self.components.iter().map(|c| c.samples(density.max(1)).0).collect()
    }

    /// Smallest arc radius, infinite when the curve has no arcs.
    pub fn min_arc_radius(&self) -> f64 {
        self.components.iter().flat_map(|c| c.arcs()).map(|a| a.radius).fold(f64::INFINITY, f64::min)
    }
}

/// Rounds every corner of `link` with an arc of radius `rho`.
pub fn round_corners(link: &PolyLink, rho: f64) -> Result<RoundedCurve, SmoothingError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(SmoothingError::InvalidRadius(rho));
    }
    let mut components = Vec::with_capacity(link.num_components());
    for c in 0..link.num_components() {
        let n = link.component_len(c);
        // (entry point, exit point, arc) per vertex
        let mut corners = Vec::with_capacity(n);
        for i in 0..n {
            let geo = vertex_geometry(link, c, i)?;
            let v = link.vertex(c, i);
            let t_in = link.edge_vector(c, link.prev(c, i)).normalize();
            let t_out = link.edge_vector(c, i).normalize();
            if geo.turning_angle == 0.0 || geo.minrad.is_infinite() {
                corners.push((v, v, None));
                continue;
            }
            if rho > geo.minrad * (1.0 + RADIUS_SLACK) {
                return Err(SmoothingError::RadiusTooLarge { comp: c, vertex: i, rho, limit: geo.minrad });
            }
            let half = 0.5 * geo.turning_angle;
            let trim = (rho * half.tan()).min(0.5 * geo.prev_edge_len.min(geo.next_edge_len));
            let start = v - t_in * trim;
            let end = v + t_out * trim;
            let bisector = (t_out - t_in).normalize();
            let center = v + bisector * (rho / half.cos());
            let arc = Arc { center, radius: rho, start, end, angle: geo.turning_angle, start_tangent: t_in, vertex: i };
            corners.push((start, end, Some(arc)));
        }
        let mut pieces = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (_, exit, arc) = &corners[i];
            if let Some(a) = arc {
                pieces.push(Piece::Arc(a.clone()));
            }
            let entry_next = corners[(i + 1) % n].0;
            pieces.push(Piece::Segment(Segment { start: *exit, end: entry_next }));
        }
        components.push(RoundedComponent::new(pieces));
    }
    Ok(RoundedCurve { components, radius: rho })
}

/// Total length: straight pieces plus `ρ·θ` for every arc.
pub fn smooth_length(curve: &RoundedCurve) -> f64 {
    curve.components.iter().map(RoundedComponent::length).sum()
}

/// Moves a sampled pair `(s, t)` to the nearby doubly-critical pair of the
/// rounded curve, where the chord is normal to both tangents, by
/// Gauss–Newton steps on the distance gradient. Returns the chord length,
/// or `None` when the iteration stalls or wanders more than `window` from
/// its start.
fn refine_pair(a: &RoundedComponent, b: &RoundedComponent, s0: f64, t0: f64, window: f64) -> Option<f64> {
    let system = |s: f64, t: f64| {
        let (p, ts, ks) = a.frame(s);
        let (q, tt, kt) = b.frame(t);
        let d = p - q;
        let g = [d.dot(&ts), -d.dot(&tt)];
        let h = [[ts.dot(&ts) + d.dot(&ks), -ts.dot(&tt)], [-ts.dot(&tt), tt.dot(&tt) - d.dot(&kt)]];
        (d.norm(), g, h)
    };
    let (s_start, t_start) = (s0, t0);
    let (mut s, mut t) = (s0, t0);
    let (mut dist, mut g, mut h) = system(s, t);
    let gtol = 1e-13 * dist.max(1e-300);
    for _ in 0..50 {
        let gnorm = g[0].hypot(g[1]);
        if gnorm <= gtol {
            return Some(dist);
        }
        // (HᵀH + μI) Δ = −Hᵀg tolerates singular and indefinite Hessians
        let hth = [
            [h[0][0] * h[0][0] + h[1][0] * h[1][0], h[0][0] * h[0][1] + h[1][0] * h[1][1]],
            [h[0][0] * h[0][1] + h[1][0] * h[1][1], h[0][1] * h[0][1] + h[1][1] * h[1][1]],
        ];
        let htg = [h[0][0] * g[0] + h[1][0] * g[1], h[0][1] * g[0] + h[1][1] * g[1]];
        let mu = 1e-14 * (hth[0][0] + hth[1][1]);
        let (m11, m22, m12) = (hth[0][0] + mu, hth[1][1] + mu, hth[0][1]);
        let det = m11 * m22 - m12 * m12;
        if !(det > 0.0) {
            return None;
        }
        let mut ds = -(m22 * htg[0] - m12 * htg[1]) / det;
        let mut dt = -(m11 * htg[1] - m12 * htg[0]) / det;
        let mut moved = false;
        for _ in 0..40 {
            let trial = system(s + ds, t + dt);
            if trial.1[0].hypot(trial.1[1]) < gnorm {
                s += ds;
                t += dt;
                (dist, g, h) = trial;
                moved = true;
                break;
            }
            ds *= 0.5;
            dt *= 0.5;
        }
        if !moved || (s - s_start).abs() > window || (t - t_start).abs() > window {
            return None;
        }
    }
    (g[0].hypot(g[1]) <= 1e-9 * dist).then_some(dist)
}

/// Half the smallest doubly-critical distance of the curve, estimated on
/// `density` samples per piece and refined on the exact curve.
///
/// With curvature at most `1/rho`, the tangent at one end of an arc shorter
/// than `π rho` has positive projection on the chord, so sample pairs that
/// close along one component are never tested.
fn strut_halfdist(curve: &RoundedCurve, density: usize, reach: f64, rho: f64) -> Result<f64, SmoothingError> {
    let sampled: Vec<(Vec<Vec3>, Vec<f64>)> = curve.components.iter().map(|c| c.samples(density)).collect();
    let poly = PolyLink::new(sampled.iter().map(|(p, _)| p.clone()).collect())?;
    let spacing = poly.components().enumerate().fold(0.0f64, |m, (c, _)| {
        (0..poly.component_len(c)).map(|e| poly.edge_length(c, e)).fold(m, f64::max)
    });
    let window = 4.0 * spacing;
    // sampled chords differ from the curve's by at most the sagitta of a sample
    let cutoff = reach * (1.0 + 1e-9) + spacing * spacing / rho;
    let mut best = f64::INFINITY;
    for strut in enumerate_dcsd_separated(&poly, cutoff, 0.9 * PI * rho) {
        let pos = |end: &crate::thickness::StrutEnd| {
            let (_, arc) = &sampled[end.comp];
            let comp = &curve.components[end.comp];
            let lo = arc[end.edge];
            let hi = if end.edge + 1 < arc.len() { arc[end.edge + 1] } else { comp.length() };
            lo + end.param * (hi - lo)
        };
        let (s, t) = (pos(&strut.a), pos(&strut.b));
        let (ca, cb) = (&curve.components[strut.a.comp], &curve.components[strut.b.comp]);
        let dist = refine_pair(ca, cb, s, t, window).unwrap_or(strut.chord);
        best = best.min(0.5 * dist);
    }
    Ok(best)
}

/// Thickness of a rounded curve: the smaller of the arc radius and half
/// the smallest doubly-critical distance. The distance term is computed on
/// a sampled polygon and the density doubled until two successive values
/// agree to [`REFINE_TOL`].
pub fn smooth_thickness(curve: &RoundedCurve, density: usize) -> Result<f64, SmoothingError> {
    if density < MIN_DENSITY {
        return Err(SmoothingError::DensityTooLow(density));
    }
    let rho = curve.min_arc_radius();
    let reach = 2.0 * rho.min(smooth_length(curve) / PI);
    let mut density = density;
    let mut prev = strut_halfdist(curve, density, reach, rho)?.min(rho);
    for _ in 0..MAX_DOUBLINGS {
        density *= 2;
        let cur = strut_halfdist(curve, density, reach, rho)?.min(rho);
        if (cur - prev).abs() <= REFINE_TOL * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    let current = strut_halfdist(curve, 2 * density, reach, rho)?.min(rho);
    if (current - prev).abs() <= REFINE_TOL * current.abs() {
        return Ok(current);
    }
    Err(SmoothingError::NoConvergence { density, previous: prev, current })
}

/// Ropelength of `link` with every corner rounded at radius `pthi(link)`.
pub fn smooth_ropelength_bound(link: &PolyLink) -> Result<f64, SmoothingError> {
    let pthi = thickness(link)?.pthi;
    let curve = round_corners(link, pthi)?;
    Ok(smooth_length(&curve) / smooth_thickness(&curve, 16)?)
}
