//! Thickness, ropelength and self-contact sets of closed polygonal knots
//! and links, and a constrained gradient-descent tightener that minimizes
//! length at fixed thickness.

pub mod contactmap;
pub mod error;
pub mod formats;
pub mod geom;
pub mod gradients;
pub mod nnls;
pub mod seeds;
pub mod smoothing;
pub mod solver;
pub mod thickness;

pub use error::{
    ContactMapError, FormatError, GeomError, NnlsError, SmoothingError, SolverError, StyleError, ThicknessError,
};
pub use geom::{arclength_coordinates, minrad, total_length, turning_angle, ArclengthIndex, PolyLink, Vec3};
pub use solver::{tighten, TightenConfig, TightenResult};
pub use thickness::{strut_set, thickness, Strut, StrutEnd, ThicknessReport};
