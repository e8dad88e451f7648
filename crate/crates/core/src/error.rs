use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("link has no components")]
    Empty,
    #[error("component {component} needs ≥ 3 vertices, got {count}")]
    TooFewVertices { component: usize, count: usize },
    #[error("non-finite coordinate at component {component}, vertex {vertex}")]
    NonFinite { component: usize, vertex: usize },
    #[error("zero-length edge {edge} in component {component}")]
    DegenerateEdge { component: usize, edge: usize },
    #[error("polygon doubles back on itself at component {component}, vertex {vertex}")]
    DoublingBack { component: usize, vertex: usize },
    #[error("degenerate segment")]
    DegenerateSegment,
    #[error("index out of range: component {component}, index {index}")]
    OutOfRange { component: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThicknessError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("link intersects itself: edges ({comp_a},{edge_a}) and ({comp_b},{edge_b}) are {distance:e} apart")]
    SelfIntersection { comp_a: usize, edge_a: usize, comp_b: usize, edge_b: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnlsError {
    #[error("NNLS did not converge after {iterations} iterations (residual {residual:e}, max dual {max_dual:e})")]
    NoConvergence { iterations: usize, residual: f64, max_dual: f64 },
    #[error("dimension mismatch: column of length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Thickness(#[from] ThicknessError),
    #[error(transparent)]
    Nnls(#[from] NnlsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("feasibility restoration failed after {iterations} iterations (max violation {violation:e})")]
    RestoreFailed { iterations: usize, violation: f64 },
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid link: {0}")]
    Geom(#[from] GeomError),
    #[error("invalid seed: {0}")]
    Seed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothingError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Thickness(#[from] ThicknessError),
    #[error("arc radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("arc radius {rho} exceeds MinRad {limit} at component {comp}, vertex {vertex}")]
    RadiusTooLarge { comp: usize, vertex: usize, rho: f64, limit: f64 },
    #[error("sampling density {0} is below the minimum of 8 points per piece")]
    DensityTooLow(usize),
    #[error("sampled thickness did not settle: {previous} at density {density}, then {current}")]
    NoConvergence { density: usize, previous: f64, current: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContactMapError {
    #[error("strut endpoint refers to edge {edge} of component {comp}, which does not exist")]
    OutOfRange { comp: usize, edge: usize },
    #[error("strut endpoint parameter {0} lies outside [0, 1]")]
    BadParameter(f64),
}

#[derive(Debug, Error)]
pub enum StyleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("style line {line}: {message}")]
    Parse { line: usize, message: String },
}
