//! Hand-derived gradients of length, strut chords and MinRad with respect to
//! vertex positions.

use crate::error::GeomError;
use crate::geom::{vertex_geometry, PolyLink, Vec3, STRAIGHT_ANGLE_TOL};
use crate::thickness::Strut;

/// Relative edge-length difference under which MinRad branches are averaged.
pub const MINRAD_TIE_TOL: f64 = 1e-12;

/// One 3-vector per vertex, in the link's flat vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField(pub Vec<Vec3>);

impl GradientField {
    pub fn zeros(n: usize) -> Self {
        GradientField(vec![Vec3::zeros(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn scaled(&self, s: f64) -> GradientField {
        GradientField(self.0.iter().map(|v| v * s).collect())
    }

    /// Flattened `[x0, y0, z0, x1, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        GradientField(flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }

    /// Indices of vertices carrying a nonzero vector.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] != Vec3::zeros()).collect()
    }
}

/// A gradient stored as (flat vertex index, vector) entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGradient {
    pub entries: Vec<(usize, Vec3)>,
}

impl SparseGradient {
    pub fn to_dense(&self, n: usize) -> GradientField {
        let mut g = GradientField::zeros(n);
        for &(i, v) in &self.entries {
            g.0[i] += v;
        }
        g
    }

    pub fn dot_dense(&self, field: &[Vec3]) -> f64 {
        self.entries.iter().map(|(i, v)| v.dot(&field[*i])).sum()
    }

    pub fn dot(&self, other: &SparseGradient) -> f64 {
        let mut acc = 0.0;
        for (i, a) in &self.entries {
            for (j, b) in &other.entries {
                if i == j {
                    acc += a.dot(b);
                }
            }
        }
        acc
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn negated(&self) -> SparseGradient {
        SparseGradient { entries: self.entries.iter().map(|&(i, v)| (i, -v)).collect() }
    }

    /// `field += s * self`.
    pub fn add_to(&self, field: &mut [Vec3], s: f64) {
        for &(i, v) in &self.entries {
            field[i] += v * s;
        }
    }
}

/// Gradient of total length: at each vertex the sum of the unit vectors
/// pointing away from its two neighbours.
pub fn length_gradient(link: &PolyLink) -> Result<GradientField, GeomError> {
    let mut g = GradientField::zeros(link.num_vertices());
    for c in 0..link.num_components() {
        let n = link.component_len(c);
        let base = link.flat_index(c, 0);
        for e in 0..n {
            let d = link.edge_vector(c, e);
            let len = d.norm();
            if len == 0.0 {
                return Err(GeomError::DegenerateEdge { component: c, edge: e });
            }
            let t = d / len;
            g.0[base + e] -= t;
            g.0[base + link.next(c, e)] += t;
        }
    }
    Ok(g)
}

/// Gradient of a strut's chord length with its edge parameters frozen.
pub fn strut_gradient_sparse(link: &PolyLink, strut: &Strut) -> Result<SparseGradient, GeomError> {
    let p = strut.a.point(link);
    let q = strut.b.point(link);
    let chord = (p - q).norm();
    if chord == 0.0 {
        return Err(GeomError::DegenerateSegment);
    }
    let n = (p - q) / chord;
    let (u, v) = (strut.a.param, strut.b.param);
    let ia0 = link.flat_index(strut.a.comp, strut.a.edge);
    let ia1 = link.flat_index(strut.a.comp, link.next(strut.a.comp, strut.a.edge));
    let ib0 = link.flat_index(strut.b.comp, strut.b.edge);
    let ib1 = link.flat_index(strut.b.comp, link.next(strut.b.comp, strut.b.edge));
    Ok(SparseGradient { entries: vec![(ia0, n * (1.0 - u)), (ia1, n * u), (ib0, -n * (1.0 - v)), (ib1, -n * v)] })
}

pub fn strut_gradient(link: &PolyLink, strut: &Strut) -> Result<GradientField, GeomError> {
    Ok(strut_gradient_sparse(link, strut)?.to_dense(link.num_vertices()))
}

/// Gradient of MinRad at one vertex, or `None` when the vertex is straight
/// (MinRad infinite, the constraint is inactive).
pub fn minrad_gradient_sparse(link: &PolyLink, comp: usize, vert: usize) -> Result<Option<SparseGradient>, GeomError> {
    minrad_gradient_weighted(link, comp, vert, |la, lb| {
        if (la - lb).abs() <= MINRAD_TIE_TOL * la.max(lb) {
            (0.5, 0.5)
        } else if la < lb {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    })
}

/// Gradient of one branch `ℓ/(2 tan(θ/2))` of MinRad, with `ℓ` the incoming
/// edge length when `outgoing` is false and the outgoing one otherwise.
/// MinRad is the smaller branch, so bounding both branches bounds MinRad
/// with smooth constraints.
pub fn minrad_branch_gradient_sparse(
    link: &PolyLink,
    comp: usize,
    vert: usize,
    outgoing: bool,
) -> Result<Option<SparseGradient>, GeomError> {
    minrad_gradient_weighted(link, comp, vert, |_, _| if outgoing { (0.0, 1.0) } else { (1.0, 0.0) })
}

fn minrad_gradient_weighted(
    link: &PolyLink,
    comp: usize,
    vert: usize,
    weights: impl FnOnce(f64, f64) -> (f64, f64),
) -> Result<Option<SparseGradient>, GeomError> {
    let geo = vertex_geometry(link, comp, vert)?;
    let theta = geo.turning_angle;
    if theta <= STRAIGHT_ANGLE_TOL {
        return Ok(None);
    }
    let prev = link.prev(comp, vert);
    let next = link.next(comp, vert);
    let a = link.vertex(comp, vert) - link.vertex(comp, prev);
    let b = link.vertex(comp, next) - link.vertex(comp, vert);
    let (la, lb) = (geo.prev_edge_len, geo.next_edge_len);
    let (ah, bh) = (a / la, b / lb);
    let cos = ah.dot(&bh);

    // angle between a and b decreases as a turns toward b
    let dtheta_da = -(bh - ah * cos).normalize() / la;
    let dtheta_db = -(ah - bh * cos).normalize() / lb;

    let half_tan = (0.5 * theta).tan();
    let half_sin = (0.5 * theta).sin();
    let (wa, wb) = weights(la, lb);
    let m = wa * la + wb * lb;
    let dr_dm = 1.0 / (2.0 * half_tan);
    let dr_dtheta = -m / (4.0 * half_sin * half_sin);

    let dr_da = ah * (dr_dm * wa) + dtheta_da * dr_dtheta;
    let dr_db = bh * (dr_dm * wb) + dtheta_db * dr_dtheta;

    Ok(Some(SparseGradient {
        entries: vec![
            (link.flat_index(comp, prev), -dr_da),
            (link.flat_index(comp, vert), dr_da - dr_db),
            (link.flat_index(comp, next), dr_db),
        ],
    }))
}

pub fn minrad_gradient(link: &PolyLink, comp: usize, vert: usize) -> Result<Option<GradientField>, GeomError> {
    Ok(minrad_gradient_sparse(link, comp, vert)?.map(|g| g.to_dense(link.num_vertices())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{minrad, minrad_formula, total_length};
    use crate::seeds::circle;
    use crate::thickness::{StrutEnd, Strut};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central differences of `f` over every vertex coordinate.
    fn finite_difference(link: &PolyLink, h: f64, f: impl Fn(&PolyLink) -> f64) -> GradientField {
        let mut g = GradientField::zeros(link.num_vertices());
        for k in 0..link.num_vertices() {
            for axis in 0..3 {
                let bump = |s: f64| {
                    let mut pts = link.points().to_vec();
                    pts[k][axis] += s * h;
                    f(&link.with_points(pts).unwrap())
                };
                g.0[k][axis] = (bump(1.0) - bump(-1.0)) / (2.0 * h);
            }
        }
        g
    }

    fn rel_err(a: &GradientField, b: &GradientField) -> f64 {
        let diff = GradientField(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect());
        diff.norm() / b.norm().max(1e-300)
    }

    fn wobbly(rng: &mut ChaCha8Rng, n: usize) -> PolyLink {
        PolyLink::single(
            (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    Vec3::new(t.cos(), t.sin(), 0.0)
                        + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn length_gradient_examples() {
        let link = PolyLink::single(vec![
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
        ])
        .unwrap();
        let g = length_gradient(&link).unwrap();
        assert_eq!(g.0[1], Vec3::new(1.0, 1.0, 0.0));
        // vertex 3 sits between collinear neighbours
        assert_relative_eq!(g.0[3].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn length_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let link = wobbly(&mut rng, 20);
            let g = length_gradient(&link).unwrap();
            let fd = finite_difference(&link, 1e-6 * link.average_edge_length(), total_length);
            assert!(rel_err(&g, &fd) <= 1e-6);
            let sum: Vec3 = g.0.iter().sum();
            assert!(sum.norm() < 1e-10);
        }
    }

    #[test]
    fn strut_gradient_examples() {
        let sq = circle(4, 0.5f64.sqrt()).unwrap();
        let s = Strut {
            a: StrutEnd { comp: 0, edge: 0, param: 0.5 },
            b: StrutEnd { comp: 0, edge: 2, param: 0.5 },
            chord: 1.0,
            lambda: None,
        };
        let g = strut_gradient(&sq, &s).unwrap();
        for v in &g.0 {
            assert_relative_eq!(v.norm(), 0.5, epsilon = 1e-15);
        }
        let e = Strut { a: StrutEnd { param: 1.0, ..s.a }, b: StrutEnd { param: 0.0, ..s.b }, ..s };
        let g = strut_gradient(&sq, &e).unwrap();
        assert_eq!(g.support(), vec![1, 2]);
        assert_relative_eq!(g.0[1].norm(), 1.0, epsilon = 1e-15);
        // swapping endpoints gives the same field
        assert_eq!(strut_gradient(&sq, &s.swapped()).unwrap(), strut_gradient(&sq, &s).unwrap());
    }

    #[test]
    fn strut_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let link = wobbly(&mut rng, 16);
            let s = Strut {
                a: StrutEnd { comp: 0, edge: rng.gen_range(0..4), param: rng.gen_range(0.0..1.0) },
                b: StrutEnd { comp: 0, edge: rng.gen_range(8..12), param: rng.gen_range(0.0..1.0) },
                chord: 0.0,
                lambda: None,
            };
            let g = strut_gradient(&link, &s).unwrap();
            let fd = finite_difference(&link, 1e-6 * link.average_edge_length(), |l| s.realized_chord(l));
            assert!(rel_err(&g, &fd) <= 1e-6);
        }
    }

    #[test]
    fn minrad_gradient_matches_finite_differences() {
        let tri = PolyLink::single(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
        ])
        .unwrap();
        // asymmetric edges so no tie
        let skew = tri.map_points(|p| Vec3::new(p.x * 1.1, p.y, 0.2 * p.x)).unwrap();
        let g = minrad_gradient(&skew, 0, 1).unwrap().unwrap();
        let fd = finite_difference(&skew, 1e-7, |l| minrad(l, 0, 1).unwrap());
        assert!(rel_err(&g, &fd) <= 1e-6, "{}", rel_err(&g, &fd));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let link = wobbly(&mut rng, 12);
            let v = rng.gen_range(0..12);
            let g = minrad_gradient(&link, 0, v).unwrap().unwrap();
            let fd = finite_difference(&link, 1e-6 * link.average_edge_length(), |l| minrad(l, 0, v).unwrap());
            assert!(rel_err(&g, &fd) <= 1e-6);
        }
    }

    #[test]
    fn branch_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let link = wobbly(&mut rng, 12);
            let v = rng.gen_range(0..12);
            for outgoing in [false, true] {
                let branch = |l: &PolyLink| {
                    let geo = crate::geom::vertex_geometry(l, 0, v).unwrap();
                    let len = if outgoing { geo.next_edge_len } else { geo.prev_edge_len };
                    minrad_formula(len, geo.turning_angle)
                };
                let g = minrad_branch_gradient_sparse(&link, 0, v, outgoing).unwrap().unwrap().to_dense(12);
                let fd = finite_difference(&link, 1e-6 * link.average_edge_length(), branch);
                assert!(rel_err(&g, &fd) <= 1e-6);
            }
        }
    }

    #[test]
    fn opening_the_corner_increases_minrad() {
        // isoceles corner at the origin, arms along ±x rotated toward +y
        let link = PolyLink::single(vec![
            Vec3::new(-1.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 3.0, 0.0),
        ])
        .unwrap();
        // pushing the apex along the bisector (toward the arms) opens the angle
        let g = minrad_gradient(&link, 0, 1).unwrap().unwrap();
        assert!(g.0[1].y > 0.0);
        let h = 1e-6;
        let mut pts = link.points().to_vec();
        pts[1].y += h;
        let up = minrad(&link.with_points(pts).unwrap(), 0, 1).unwrap();
        assert!(up > minrad(&link, 0, 1).unwrap());
    }

    #[test]
    fn minrad_tie_averages_branches() {
        let link = PolyLink::single(vec![
            Vec3::new(-1.0, 1.0, 0.3),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, -0.3),
            Vec3::new(0.0, 3.0, 0.0),
        ])
        .unwrap();
        let g = minrad_gradient(&link, 0, 1).unwrap().unwrap();
        // formula with one branch of the min forced
        let branch = |use_prev: bool| {
            move |l: &PolyLink| {
                let geo = vertex_geometry(l, 0, 1).unwrap();
                let m = if use_prev { geo.prev_edge_len } else { geo.next_edge_len };
                minrad_formula(m, geo.turning_angle)
            }
        };
        let fa = finite_difference(&link, 1e-7, branch(true));
        let fb = finite_difference(&link, 1e-7, branch(false));
        let mean = GradientField(fa.0.iter().zip(&fb.0).map(|(a, b)| (a + b) * 0.5).collect());
        assert!(rel_err(&g, &mean) <= 1e-6);
    }

    #[test]
    fn straight_vertex_is_inactive() {
        let link = PolyLink::single(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(minrad_gradient(&link, 0, 1).unwrap(), None);
    }
}
