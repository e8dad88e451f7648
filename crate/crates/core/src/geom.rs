//! Closed polygonal links and their per-vertex geometry.
//!
//! A [`PolyLink`] stores every vertex of every component in one flat array,
//! with `starts[c]..starts[c + 1]` delimiting component `c`. Edge `i` of a
//! component joins vertex `i` to vertex `i + 1 (mod len)`, so edges and
//! vertices share the same flat index. Public operations always take
//! `(component, index)` pairs; the flat index is an implementation detail
//! exposed only for gradient fields.

use std::f64::consts::PI;

use crate::error::GeomError;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Turning angles below this are treated as a straight continuation.
pub const STRAIGHT_ANGLE_TOL: f64 = 1e-14;
/// Turning angles at or above `PI - DOUBLING_BACK_TOL` are rejected.
pub const DOUBLING_BACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyLink {
    points: Vec<Vec3>,
    starts: Vec<usize>,
}

impl PolyLink {
    /// Builds a link from per-component vertex lists, validating it.
    pub fn new(components: Vec<Vec<Vec3>>) -> Result<Self, GeomError> {
        let mut points = Vec::new();
        let mut starts = vec![0];
        for comp in components {
            points.extend(comp);
            starts.push(points.len());
        }
        Self::from_flat(points, starts)
    }

    /// Single closed component.
    pub fn single(vertices: Vec<Vec3>) -> Result<Self, GeomError> {
        Self::new(vec![vertices])
    }

    pub(crate) fn from_flat(points: Vec<Vec3>, starts: Vec<usize>) -> Result<Self, GeomError> {
        let link = PolyLink { points, starts };
        link.validate()?;
        Ok(link)
    }

    fn validate(&self) -> Result<(), GeomError> {
        if self.num_components() == 0 {
            return Err(GeomError::Empty);
        }
        for c in 0..self.num_components() {
            let n = self.component_len(c);
            if n < 3 {
                return Err(GeomError::TooFewVertices { component: c, count: n });
            }
            for i in 0..n {
                let p = self.vertex(c, i);
                if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                    return Err(GeomError::NonFinite { component: c, vertex: i });
                }
            }
            for i in 0..n {
                if self.edge_vector(c, i).norm_squared() == 0.0 {
                    return Err(GeomError::DegenerateEdge { component: c, edge: i });
                }
            }
        }
        Ok(())
    }

    pub fn num_components(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn component_len(&self, comp: usize) -> usize {
        self.starts[comp + 1] - self.starts[comp]
    }

    pub fn component(&self, comp: usize) -> &[Vec3] {
        &self.points[self.starts[comp]..self.starts[comp + 1]]
    }

    pub fn components(&self) -> impl Iterator<Item = &[Vec3]> + '_ {
        (0..self.num_components()).map(move |c| self.component(c))
    }

    /// Total number of vertices (equivalently, edges) over all components.
    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn num_edges(&self) -> usize {
        self.points.len()
    }

    /// Flat vertex array, component after component.
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn component_starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn flat_index(&self, comp: usize, idx: usize) -> usize {
        self.starts[comp] + idx
    }

    /// Inverse of [`PolyLink::flat_index`].
    pub fn split_index(&self, flat: usize) -> (usize, usize) {
        let c = self.starts.partition_point(|&s| s <= flat) - 1;
        (c, flat - self.starts[c])
    }

    pub fn vertex(&self, comp: usize, idx: usize) -> Vec3 {
        self.points[self.starts[comp] + idx]
    }

    /// Index of the vertex after `idx`, cyclically.
    pub fn next(&self, comp: usize, idx: usize) -> usize {
        let n = self.component_len(comp);
        if idx + 1 == n {
            0
        } else {
            idx + 1
        }
    }

    pub fn prev(&self, comp: usize, idx: usize) -> usize {
        let n = self.component_len(comp);
        if idx == 0 {
            n - 1
        } else {
            idx - 1
        }
    }

    /// Endpoints of edge `edge` of component `comp`.
    pub fn edge(&self, comp: usize, edge: usize) -> (Vec3, Vec3) {
        (self.vertex(comp, edge), self.vertex(comp, self.next(comp, edge)))
    }

    pub fn edge_vector(&self, comp: usize, edge: usize) -> Vec3 {
        let (a, b) = self.edge(comp, edge);
        b - a
    }

    pub fn edge_length(&self, comp: usize, edge: usize) -> f64 {
        self.edge_vector(comp, edge).norm()
    }

    pub fn component_length(&self, comp: usize) -> f64 {
        (0..self.component_len(comp)).map(|i| self.edge_length(comp, i)).sum()
    }

    pub fn average_edge_length(&self) -> f64 {
        total_length(self) / self.num_edges() as f64
    }

    /// Applies `f` to every vertex. The result is validated again.
    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<PolyLink, GeomError> {
        PolyLink::from_flat(self.points.iter().map(f).collect(), self.starts.clone())
    }

    pub fn scaled(&self, factor: f64) -> PolyLink {
        assert!(factor > 0.0 && factor.is_finite(), "scale factor must be positive");
        PolyLink { points: self.points.iter().map(|p| p * factor).collect(), starts: self.starts.clone() }
    }

    /// Same geometry with the vertices replaced (same component layout).
    pub fn with_points(&self, points: Vec<Vec3>) -> Result<PolyLink, GeomError> {
        assert_eq!(points.len(), self.points.len());
        PolyLink::from_flat(points, self.starts.clone())
    }

    /// Reverses the orientation of one component, keeping vertex 0 in place.
    pub fn reversed_component(&self, comp: usize) -> PolyLink {
        let mut points = self.points.clone();
        let s = self.starts[comp];
        let n = self.component_len(comp);
        for i in 0..n {
            points[s + i] = self.points[s + (n - i) % n];
        }
        PolyLink { points, starts: self.starts.clone() }
    }

    /// Inserts the midpoint of every edge, doubling the vertex count.
    pub fn subdivided(&self) -> PolyLink {
        let comps = (0..self.num_components())
            .map(|c| {
                (0..self.component_len(c))
                    .flat_map(|i| {
                        let (a, b) = self.edge(c, i);
                        [a, (a + b) * 0.5]
                    })
                    .collect()
            })
            .collect();
        PolyLink::new(comps).expect("midpoint subdivision of a valid link is valid")
    }

    /// Component vertex lists, cloned.
    pub fn to_components(&self) -> Vec<Vec<Vec3>> {
        self.components().map(|c| c.to_vec()).collect()
    }
}

/// Sum of all edge lengths over all components.
pub fn total_length(link: &PolyLink) -> f64 {
    (0..link.num_components()).map(|c| link.component_length(c)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexGeometry {
    pub turning_angle: f64,
    pub prev_edge_len: f64,
    pub next_edge_len: f64,
    pub minrad: f64,
}

/// Turning angle and MinRad at vertex `vert` of component `comp`.
pub fn vertex_geometry(link: &PolyLink, comp: usize, vert: usize) -> Result<VertexGeometry, GeomError> {
    let incoming = link.edge_vector(comp, link.prev(comp, vert));
    let outgoing = link.edge_vector(comp, vert);
    let prev_edge_len = incoming.norm();
    let next_edge_len = outgoing.norm();
    if prev_edge_len == 0.0 {
        return Err(GeomError::DegenerateEdge { component: comp, edge: link.prev(comp, vert) });
    }
    if next_edge_len == 0.0 {
        return Err(GeomError::DegenerateEdge { component: comp, edge: vert });
    }
    let theta = incoming.cross(&outgoing).norm().atan2(incoming.dot(&outgoing));
    if theta >= PI - DOUBLING_BACK_TOL {
        return Err(GeomError::DoublingBack { component: comp, vertex: vert });
    }
    let minrad = minrad_formula(prev_edge_len.min(next_edge_len), theta);
    Ok(VertexGeometry { turning_angle: theta, prev_edge_len, next_edge_len, minrad })
}

pub(crate) fn minrad_formula(shorter_edge: f64, theta: f64) -> f64 {
    if theta <= STRAIGHT_ANGLE_TOL {
        f64::INFINITY
    } else {
        shorter_edge / (2.0 * (0.5 * theta).tan())
    }
}

pub fn turning_angle(link: &PolyLink, comp: usize, vert: usize) -> Result<f64, GeomError> {
    vertex_geometry(link, comp, vert).map(|g| g.turning_angle)
}

/// Radius of the circle tangent to both edges at the vertex and passing
/// through the midpoint of the shorter one; `+inf` at straight vertices.
pub fn minrad(link: &PolyLink, comp: usize, vert: usize) -> Result<f64, GeomError> {
    vertex_geometry(link, comp, vert).map(|g| g.minrad)
}

/// Smallest MinRad over the link and where it occurs (first in index order).
pub fn min_minrad(link: &PolyLink) -> Result<(f64, usize, usize), GeomError> {
    let mut best = (f64::INFINITY, 0, 0);
    for c in 0..link.num_components() {
        for i in 0..link.component_len(c) {
            let r = minrad(link, c, i)?;
            if r < best.0 {
                best = (r, c, i);
            }
        }
    }
    Ok(best)
}

/// Cumulative arclength offsets of components and of edges within them.
#[derive(Debug, Clone, PartialEq)]
pub struct ArclengthIndex {
    component_offsets: Vec<f64>,
    edge_offsets: Vec<Vec<f64>>,
    component_lengths: Vec<f64>,
    total: f64,
}

impl ArclengthIndex {
    pub fn component_offsets(&self) -> &[f64] {
        &self.component_offsets
    }

    /// Offsets of each edge start within its component (first entry 0).
    pub fn edge_offsets(&self, comp: usize) -> &[f64] {
        &self.edge_offsets[comp]
    }

    pub fn component_length(&self, comp: usize) -> f64 {
        self.component_lengths[comp]
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    /// Global arclength coordinate of the point at parameter `u` on an edge.
    pub fn coordinate(&self, link: &PolyLink, comp: usize, edge: usize, u: f64) -> f64 {
        self.component_offsets[comp] + self.edge_offsets[comp][edge] + u * link.edge_length(comp, edge)
    }

    /// Component owning a global coordinate in `[0, total)`.
    pub fn component_at(&self, s: f64) -> usize {
        self.component_offsets.partition_point(|&o| o <= s).saturating_sub(1)
    }
}

pub fn arclength_coordinates(link: &PolyLink) -> ArclengthIndex {
    let mut component_offsets = Vec::with_capacity(link.num_components());
    let mut edge_offsets = Vec::with_capacity(link.num_components());
    let mut component_lengths = Vec::with_capacity(link.num_components());
    let mut acc = 0.0;
    for c in 0..link.num_components() {
        component_offsets.push(acc);
        let mut offs = Vec::with_capacity(link.component_len(c));
        let mut within = 0.0;
        for i in 0..link.component_len(c) {
            offs.push(within);
            within += link.edge_length(c, i);
        }
        edge_offsets.push(offs);
        component_lengths.push(within);
        acc += within;
    }
    ArclengthIndex { component_offsets, edge_offsets, component_lengths, total: acc }
}
