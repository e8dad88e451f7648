//! Doubly-critical self-distances, polygonal thickness and strut sets.
//!
//! The self-distance function of a polygon restricted to one pair of edges
//! is convex in the two edge parameters, so a pair's closest points form a
//! local minimum of the self-distance on the whole polygon exactly when no
//! neighbouring edge pair containing the same point pair does better. Only
//! the neighbours in the directions where a parameter is clamped to an
//! endpoint contain that point pair, and when one of them shares a vertex
//! (distance zero at the shared vertex) the candidate is not a local
//! minimum.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{GeomError, ThicknessError};
use crate::geom::{min_minrad, total_length, PolyLink, Vec3};

/// Chords at or below this length are treated as self-intersections.
pub const INTERSECTION_TOL: f64 = 1e-14;
/// Default active tolerance on chord lengths.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-5;

/// Relative gap under which kink and strut are reported as tied.
const TIE_TOL: f64 = 1e-12;
/// Sine-squared of the angle below which two segments are treated as parallel.
const PARALLEL_SIN2: f64 = 1e-14;

/// Closest points of two segments: `a0 + u (a1 - a0)` and `b0 + v (b1 - b0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentClosest {
    pub u: f64,
    pub v: f64,
    pub dist: f64,
}

fn clamp01(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x
    }
}

/// Minimum distance between two segments with clamped closest-point
/// parameters. Parallel segments whose projections overlap report the
/// midpoint of the overlap.
pub fn segment_min_distance(a0: Vec3, a1: Vec3, b0: Vec3, b1: Vec3) -> Result<SegmentClosest, GeomError> {
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    if a == 0.0 || e == 0.0 {
        return Err(GeomError::DegenerateSegment);
    }
    Ok(closest_nondegenerate(a0, d1, a, b0, d2, e))
}

#[inline]
fn closest_nondegenerate(a0: Vec3, d1: Vec3, a: f64, b0: Vec3, d2: Vec3, e: f64) -> SegmentClosest {
    let r = a0 - b0;
    let b = d1.dot(&d2);
    let c = d1.dot(&r);
    let f = d2.dot(&r);
    let denom = a * e - b * b;

    let (u, v) = if denom <= PARALLEL_SIN2 * a * e {
        // projections of b0, b1 onto the line through segment a
        let t0 = -c / a;
        let t1 = (b - c) / a;
        let (tlo, thi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let lo = tlo.max(0.0);
        let hi = thi.min(1.0);
        if lo <= hi {
            let u = if lo == hi { lo } else { 0.5 * (lo + hi) };
            let p = a0 + d1 * u;
            (u, clamp01((p - b0).dot(&d2) / e))
        } else {
            let u = if thi < 0.0 { 0.0 } else { 1.0 };
            let p = a0 + d1 * u;
            let v = clamp01((p - b0).dot(&d2) / e);
            let q = b0 + d2 * v;
            (clamp01((q - a0).dot(&d1) / a), v)
        }
    } else {
        let mut u = clamp01((b * f - c * e) / denom);
        let mut v = (b * u + f) / e;
        if v < 0.0 {
            v = 0.0;
            u = clamp01(-c / a);
        } else if v > 1.0 {
            v = 1.0;
            u = clamp01((b - c) / a);
        }
        (u, v)
    };
    let p = a0 + d1 * u;
    let q = b0 + d2 * v;
    SegmentClosest { u, v, dist: (p - q).norm() }
}

/// One end of a strut: a point at parameter `param` on an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrutEnd {
    pub comp: usize,
    pub edge: usize,
    pub param: f64,
}

impl StrutEnd {
    pub fn point(&self, link: &PolyLink) -> Vec3 {
        let (a, b) = link.edge(self.comp, self.edge);
        a + (b - a) * self.param
    }
}

/// A doubly-critical self-distance pair, `a` ordered before `b` by (component, edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strut {
    pub a: StrutEnd,
    pub b: StrutEnd,
    pub chord: f64,
    pub lambda: Option<f64>,
}

impl Strut {
    /// Sort key (compA, edgeA, compB, edgeB).
    pub fn key(&self) -> (usize, usize, usize, usize) {
        (self.a.comp, self.a.edge, self.b.comp, self.b.edge)
    }

    /// Same contact with the endpoints exchanged.
    pub fn swapped(&self) -> Strut {
        Strut { a: self.b, b: self.a, ..*self }
    }

    /// Chord recomputed from the current link at the stored parameters.
    pub fn realized_chord(&self, link: &PolyLink) -> f64 {
        (self.a.point(link) - self.b.point(link)).norm()
    }

    pub fn is_intra_component(&self) -> bool {
        self.a.comp == self.b.comp
    }
}

/// Whether two edges (by flat index) may form a dcsd pair: distinct and not
/// sharing a vertex.
fn admissible(link: &PolyLink, i: usize, j: usize) -> bool {
    if i == j {
        return false;
    }
    let (ci, ei) = link.split_index(i);
    let (cj, ej) = link.split_index(j);
    if ci != cj {
        return true;
    }
    link.next(ci, ei) != ej && link.next(cj, ej) != ei
}

/// Precomputed edge data, indexed by flat edge index.
struct EdgeTable<'a> {
    link: &'a PolyLink,
    start: Vec<Vec3>,
    dir: Vec<Vec3>,
    len2: Vec<f64>,
    comp: Vec<usize>,
    local: Vec<usize>,
}

impl<'a> EdgeTable<'a> {
    fn new(link: &'a PolyLink) -> Self {
        let n = link.num_edges();
        let mut t = EdgeTable {
            link,
            start: Vec::with_capacity(n),
            dir: Vec::with_capacity(n),
            len2: Vec::with_capacity(n),
            comp: Vec::with_capacity(n),
            local: Vec::with_capacity(n),
        };
        for c in 0..link.num_components() {
            for i in 0..link.component_len(c) {
                let (a, b) = link.edge(c, i);
                t.start.push(a);
                t.dir.push(b - a);
                t.len2.push((b - a).norm_squared());
                t.comp.push(c);
                t.local.push(i);
            }
        }
        t
    }

    fn closest(&self, i: usize, j: usize) -> SegmentClosest {
        closest_nondegenerate(self.start[i], self.dir[i], self.len2[i], self.start[j], self.dir[j], self.len2[j])
    }

    /// Flat index of the edge `step` positions along from flat edge `i`.
    fn shifted(&self, i: usize, step: isize) -> usize {
        let c = self.comp[i];
        let n = self.link.component_len(c) as isize;
        let local = (self.local[i] as isize + step).rem_euclid(n) as usize;
        self.link.flat_index(c, local)
    }

    /// Evaluates an admissible pair `i < j` and returns it if it is a local
    /// minimum of the self-distance with chord at most `cutoff`.
    fn evaluate(&self, i: usize, j: usize, cutoff: f64) -> Option<Strut> {
        let sc = self.closest(i, j);
        if sc.dist > cutoff {
            return None;
        }
        let du: &[isize] = match sc.u {
            x if x == 0.0 => &[0, -1],
            x if x == 1.0 => &[0, 1],
            _ => &[0],
        };
        let dv: &[isize] = match sc.v {
            x if x == 0.0 => &[0, -1],
            x if x == 1.0 => &[0, 1],
            _ => &[0],
        };
        let tol = 1e-12 * sc.dist + 1e-15;
        for &si in du {
            for &sj in dv {
                if si == 0 && sj == 0 {
                    continue;
                }
                let ni = self.shifted(i, si);
                let nj = self.shifted(j, sj);
                if !admissible(self.link, ni, nj) {
                    return None;
                }
                if self.closest(ni, nj).dist < sc.dist - tol {
                    return None;
                }
            }
        }
        Some(Strut {
            a: StrutEnd { comp: self.comp[i], edge: self.local[i], param: sc.u },
            b: StrutEnd { comp: self.comp[j], edge: self.local[j], param: sc.v },
            chord: sc.dist,
            lambda: None,
        })
    }
}

/// All dcsd pairs, by exhaustive scan over every admissible edge pair.
pub fn enumerate_dcsd_bruteforce(link: &PolyLink) -> Vec<Strut> {
    enumerate_dcsd_bruteforce_within(link, f64::INFINITY)
}

/// Exhaustive scan restricted to chords `≤ cutoff`. O(E²).
pub fn enumerate_dcsd_bruteforce_within(link: &PolyLink, cutoff: f64) -> Vec<Strut> {
    let table = EdgeTable::new(link);
    let n = link.num_edges();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if admissible(link, i, j) {
                if let Some(s) = table.evaluate(i, j, cutoff) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// All dcsd pairs; grid-accelerated equivalent of [`enumerate_dcsd_bruteforce`].
pub fn enumerate_dcsd(link: &PolyLink) -> Vec<Strut> {
    enumerate_dcsd_within(link, f64::INFINITY)
}

/// dcsd pairs with chord `≤ cutoff`, found through a uniform hash grid.
///
/// Each edge is registered in every cell touched by its bounding box grown
/// by `cutoff / 2`, so two edges closer than `cutoff` always share a cell.
pub fn enumerate_dcsd_within(link: &PolyLink, cutoff: f64) -> Vec<Strut> {
    enumerate_dcsd_separated(link, cutoff, 0.0)
}

/// Like [`enumerate_dcsd_within`], skipping every pair of edges on one
/// component whose points are all closer than `min_separation` in
/// arclength along that component.
pub fn enumerate_dcsd_separated(link: &PolyLink, cutoff: f64, min_separation: f64) -> Vec<Strut> {
    let table = EdgeTable::new(link);
    let finder = PairFinder::new(link, cutoff, min_separation);
    let mut out: Vec<Strut> = finder
        .block_pairs()
        .into_par_iter()
        .flat_map_iter(|(a, b)| {
            let mut found = Vec::new();
            finder.edge_pairs(a, b, |i, j| found.extend(table.evaluate(i, j, cutoff)));
            found
        })
        .collect();
    out.sort_unstable_by_key(|s| s.key());
    out
}

/// Runs of consecutive edges of one component, grouped so that the grid
/// works on a few hundred boxes however fine the polygon is.
const TARGET_BLOCKS: usize = 512;

struct Block {
    edges: std::ops::Range<usize>,
    comp: usize,
    min: Vec3,
    max: Vec3,
    /// Arclength of the block midpoint and half the block length.
    mid: f64,
    half: f64,
}

fn box_gap(amin: &Vec3, amax: &Vec3, bmin: &Vec3, bmax: &Vec3) -> f64 {
    (amin - bmax).sup(&(bmin - amax)).sup(&Vec3::zeros()).norm()
}

/// Candidate edge pairs for a cutoff: a hash grid over blocks of edges,
/// then bounding-box and arclength tests on the edges of nearby blocks.
struct PairFinder<'a> {
    link: &'a PolyLink,
    cutoff: f64,
    min_separation: f64,
    reach: f64,
    boxes: Vec<(Vec3, Vec3)>,
    arc_start: Vec<f64>,
    arc_len: Vec<f64>,
    comp_len: Vec<f64>,
    blocks: Vec<Block>,
}

impl<'a> PairFinder<'a> {
    fn new(link: &'a PolyLink, cutoff: f64, min_separation: f64) -> Self {
        let n = link.num_edges();
        let pts = link.points();
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max();
        let reach = if cutoff.is_finite() { cutoff.min(2.0 * extent + 1.0) } else { 2.0 * extent + 1.0 };

        let mut boxes = Vec::with_capacity(n);
        let mut arc_start = Vec::with_capacity(n);
        let mut arc_len = Vec::with_capacity(n);
        let mut comp_len = Vec::with_capacity(link.num_components());
        for c in 0..link.num_components() {
            let mut acc = 0.0;
            for e in 0..link.component_len(c) {
                let (a, b) = link.edge(c, e);
                boxes.push((a.inf(&b), a.sup(&b)));
                arc_start.push(acc);
                arc_len.push(link.edge_length(c, e));
                acc += link.edge_length(c, e);
            }
            comp_len.push(acc);
        }
        let block_len = n.div_ceil(TARGET_BLOCKS).max(1);
        let mut blocks = Vec::new();
        for c in 0..link.num_components() {
            let first = link.flat_index(c, 0);
            let end = first + link.component_len(c);
            let mut s = first;
            while s < end {
                let e = (s + block_len).min(end);
                let (mut min, mut max) = boxes[s];
                for (bmin, bmax) in &boxes[s + 1..e] {
                    min = min.inf(bmin);
                    max = max.sup(bmax);
                }
                let (a0, a1) = (arc_start[s], arc_start[e - 1] + arc_len[e - 1]);
                blocks.push(Block { edges: s..e, comp: c, min, max, mid: 0.5 * (a0 + a1), half: 0.5 * (a1 - a0) });
                s = e;
            }
        }
        PairFinder { link, cutoff, min_separation, reach, boxes, arc_start, arc_len, comp_len, blocks }
    }

    /// Whether every point of one piece lies within `min_separation` of
    /// every point of the other, measured along their common component.
    fn too_close(&self, comp: (usize, usize), mid: (f64, f64), half: (f64, f64)) -> bool {
        if comp.0 != comp.1 {
            return false;
        }
        let d = (mid.0 - mid.1).abs();
        d.min(self.comp_len[comp.0] - d) + half.0 + half.1 < self.min_separation
    }

    /// Block pairs `(a, b)` with `a ≤ b` that may contain a candidate pair.
    fn block_pairs(&self) -> Vec<(usize, usize)> {
        let pts = self.link.points();
        let lo = pts.iter().fold(pts[0], |m, p| m.inf(p));
        let widest = self.blocks.iter().map(|b| (b.max - b.min).max()).fold(0.0, f64::max);
        let cell = self.reach.max(widest).max(f64::MIN_POSITIVE);
        let inflate = 0.5 * self.reach;
        let cell_of = |x: f64, o: f64| ((x - o) / cell).floor() as i64;

        let mut first_cell = Vec::with_capacity(self.blocks.len());
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (id, b) in self.blocks.iter().enumerate() {
            let (gmin, gmax) = (b.min.add_scalar(-inflate), b.max.add_scalar(inflate));
            let lower = [cell_of(gmin.x, lo.x), cell_of(gmin.y, lo.y), cell_of(gmin.z, lo.z)];
            for x in lower[0]..=cell_of(gmax.x, lo.x) {
                for y in lower[1]..=cell_of(gmax.y, lo.y) {
                    for z in lower[2]..=cell_of(gmax.z, lo.z) {
                        grid.entry([x, y, z]).or_default().push(id);
                    }
                }
            }
            first_cell.push(lower);
        }
        let mut cells: Vec<_> = grid.into_iter().collect();
        cells.sort_unstable_by_key(|(k, _)| *k);
        let mut pairs = Vec::new();
        for (key, members) in &cells {
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k..] {
                    // a block pair sharing several cells is handled in the lowest one
                    let owner = [0, 1, 2].map(|d| first_cell[a][d].max(first_cell[b][d]));
                    let (ba, bb) = (&self.blocks[a], &self.blocks[b]);
                    if owner == *key
                        && box_gap(&ba.min, &ba.max, &bb.min, &bb.max) <= self.cutoff
                        && !self.too_close((ba.comp, bb.comp), (ba.mid, bb.mid), (ba.half, bb.half))
                    {
                        pairs.push((a.min(b), a.max(b)));
                    }
                }
            }
        }
        pairs
    }

    /// Calls `f(i, j)` with `i < j` for every admissible edge pair drawn from
    /// blocks `a` and `b` that passes the box and arclength tests.
    fn edge_pairs(&self, a: usize, b: usize, mut f: impl FnMut(usize, usize)) {
        let (ba, bb) = (&self.blocks[a], &self.blocks[b]);
        let near = |edges: &std::ops::Range<usize>, other: &Block| -> Vec<usize> {
            edges
                .clone()
                .filter(|&i| box_gap(&self.boxes[i].0, &self.boxes[i].1, &other.min, &other.max) <= self.cutoff)
                .collect()
        };
        let (ea, eb) = (near(&ba.edges, bb), near(&bb.edges, ba));
        let half = |i: usize| 0.5 * self.arc_len[i];
        for (k, &i) in ea.iter().enumerate() {
            let js = if a == b { &eb[k + 1..] } else { &eb[..] };
            for &j in js {
                let (p, q) = if i < j { (i, j) } else { (j, i) };
                let (bp, bq) = (&self.boxes[p], &self.boxes[q]);
                if box_gap(&bp.0, &bp.1, &bq.0, &bq.1) > self.cutoff || !admissible(self.link, p, q) {
                    continue;
                }
                let mid = (self.arc_start[p] + half(p), self.arc_start[q] + half(q));
                if !self.too_close((ba.comp, bb.comp), mid, (half(p), half(q))) {
                    f(p, q);
                }
            }
        }
    }
}

/// What attains the thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Governing {
    Kink { comp: usize, vertex: usize },
    Strut(Strut),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThicknessReport {
    pub pthi: f64,
    pub governing: Governing,
    pub total_length: f64,
    pub prop: f64,
    pub min_minrad: f64,
    /// Half of the shortest dcsd chord; `+inf` when no dcsd pair is short
    /// enough to compete with the smallest MinRad.
    pub min_strut_halfdist: f64,
}

/// Polygonal thickness: the smaller of the least MinRad and half the
/// shortest doubly-critical chord. Ties go to the kink.
pub fn thickness(link: &PolyLink) -> Result<ThicknessReport, ThicknessError> {
    let (min_minrad, kc, kv) = min_minrad(link)?;
    // dcsd chords longer than twice the smallest MinRad cannot govern
    let cutoff = if min_minrad.is_finite() { 2.0 * min_minrad * (1.0 + 1e-9) } else { f64::INFINITY };
    let pairs = enumerate_dcsd_within(link, cutoff);
    let shortest = pairs.iter().min_by(|x, y| x.chord.total_cmp(&y.chord).then(x.key().cmp(&y.key())));
    if let Some(s) = shortest {
        if s.chord <= INTERSECTION_TOL {
            return Err(ThicknessError::SelfIntersection {
                comp_a: s.a.comp,
                edge_a: s.a.edge,
                comp_b: s.b.comp,
                edge_b: s.b.edge,
                distance: s.chord,
            });
        }
    }
    let half = shortest.map_or(f64::INFINITY, |s| 0.5 * s.chord);
    let (pthi, governing) = match shortest {
        Some(s) if half < min_minrad * (1.0 - TIE_TOL) => (half, Governing::Strut(*s)),
        _ => (min_minrad.min(half), Governing::Kink { comp: kc, vertex: kv }),
    };
    let length = total_length(link);
    Ok(ThicknessReport {
        pthi,
        governing,
        total_length: length,
        prop: length / pthi,
        min_minrad,
        min_strut_halfdist: half,
    })
}

/// Polygonal ropelength, length over thickness.
pub fn ropelength(link: &PolyLink) -> Result<f64, ThicknessError> {
    thickness(link).map(|r| r.prop)
}

/// dcsd pairs with chord `≤ 2·pthi + delta`, sorted by (compA, edgeA, compB, edgeB).
pub fn strut_set(link: &PolyLink, report: &ThicknessReport, delta: f64) -> Vec<Strut> {
    let limit = 2.0 * report.pthi + delta;
    let mut out: Vec<Strut> = enumerate_dcsd_within(link, limit).into_iter().filter(|s| s.chord <= limit).collect();
    out.sort_by_key(|s| s.key());
    out
}
