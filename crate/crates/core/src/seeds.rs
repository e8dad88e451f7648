//! Standard starting configurations for tightening runs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::FormatError;
use crate::geom::{PolyLink, Vec3};

fn sample(n: usize, f: impl Fn(f64) -> Vec3) -> Vec<Vec3> {
    (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).collect()
}

fn build(components: Vec<Vec<Vec3>>) -> Result<PolyLink, FormatError> {
    Ok(PolyLink::new(components)?)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Regular `n`-gon of circumradius `radius` in the xy-plane.
pub fn circle(n: usize, radius: f64) -> Result<PolyLink, FormatError> {
    build(vec![sample(n, |t| Vec3::new(radius * t.cos(), radius * t.sin(), 0.0))])
}

/// `(p, q)` torus knot on the torus with core radius `big_r` and tube radius `small_r`.
pub fn torus_knot(p: u32, q: u32, big_r: f64, small_r: f64, n: usize) -> Result<PolyLink, FormatError> {
    if p == 0 || q == 0 || gcd(p, q) != 1 {
        return Err(FormatError::Seed(format!("torus knot needs coprime p, q > 0 (got {p}, {q})")));
    }
    let (pf, qf) = (p as f64, q as f64);
    build(vec![sample(n, |t| {
        let rr = big_r + small_r * (qf * t).cos();
        Vec3::new(rr * (pf * t).cos(), rr * (pf * t).sin(), small_r * (qf * t).sin())
    })])
}

/// Two unit circles in perpendicular planes, each through the other's center.
pub fn hopf(n_per_comp: usize) -> Result<PolyLink, FormatError> {
    build(vec![
        sample(n_per_comp, |t| Vec3::new(t.cos(), t.sin(), 0.0)),
        sample(n_per_comp, |t| Vec3::new(1.0 + t.cos(), 0.0, t.sin())),
    ])
}

/// Three-component chain: unit circles at both ends in the xy-plane, joined by a
/// circle of radius 1.5 in the xz-plane passing through both end centers. The
/// middle radius keeps the two end circles one unit apart.
pub fn chain(n_per_comp: usize) -> Result<PolyLink, FormatError> {
    build(vec![
        sample(n_per_comp, |t| Vec3::new(t.cos(), t.sin(), 0.0)),
        sample(n_per_comp, |t| Vec3::new(1.5 + 1.5 * t.cos(), 0.0, 1.5 * t.sin())),
        sample(n_per_comp, |t| Vec3::new(3.0 + t.cos(), t.sin(), 0.0)),
    ])
}

/// Three ellipses with semi-axes (2, 1) in the three coordinate planes.
pub fn borromean(n_per_comp: usize) -> Result<PolyLink, FormatError> {
    build(vec![
        sample(n_per_comp, |t| Vec3::new(2.0 * t.cos(), t.sin(), 0.0)),
        sample(n_per_comp, |t| Vec3::new(0.0, 2.0 * t.cos(), t.sin())),
        sample(n_per_comp, |t| Vec3::new(t.sin(), 0.0, 2.0 * t.cos())),
    ])
}

/// A seed description such as `hopf:108`, `circle:64`, `circle:64:2.5`,
/// `torus:2:3:400` or `torus:2:3:400:2:1`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    Circle { n: usize, radius: f64 },
    TorusKnot { p: u32, q: u32, n: usize, big_r: f64, small_r: f64 },
    Hopf { n_per_comp: usize },
    Chain { n_per_comp: usize },
    Borromean { n_per_comp: usize },
}

impl SeedSpec {
    pub fn build(&self) -> Result<PolyLink, FormatError> {
        match *self {
            SeedSpec::Circle { n, radius } => circle(n, radius),
            SeedSpec::TorusKnot { p, q, n, big_r, small_r } => torus_knot(p, q, big_r, small_r, n),
            SeedSpec::Hopf { n_per_comp } => hopf(n_per_comp),
            SeedSpec::Chain { n_per_comp } => chain(n_per_comp),
            SeedSpec::Borromean { n_per_comp } => borromean(n_per_comp),
        }
    }
}

impl FromStr for SeedSpec {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| FormatError::Seed(format!("{s:?}: {why}"));
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let int = |i: usize| -> Result<usize, FormatError> {
            args.get(i).ok_or_else(|| bad("missing argument"))?.parse().map_err(|_| bad("expected an integer"))
        };
        let real = |i: usize, default: f64| -> Result<f64, FormatError> {
            match args.get(i) {
                None => Ok(default),
                Some(a) => a.parse().map_err(|_| bad("expected a number")),
            }
        };
        let seed = match kind {
            "circle" => SeedSpec::Circle { n: int(0)?, radius: real(1, 1.0)? },
            "torus" | "torus_knot" => SeedSpec::TorusKnot {
                p: int(0)? as u32,
                q: int(1)? as u32,
                n: int(2)?,
                big_r: real(3, 2.0)?,
                small_r: real(4, 1.0)?,
            },
            "hopf" => SeedSpec::Hopf { n_per_comp: int(0)? },
            "chain" => SeedSpec::Chain { n_per_comp: int(0)? },
            "borromean" => SeedSpec::Borromean { n_per_comp: int(0)? },
            _ => return Err(bad("unknown seed kind")),
        };
        Ok(seed)
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Circle { n, radius } => write!(f, "circle:{n}:{radius}"),
            SeedSpec::TorusKnot { p, q, n, big_r, small_r } => write!(f, "torus:{p}:{q}:{n}:{big_r}:{small_r}"),
            SeedSpec::Hopf { n_per_comp } => write!(f, "hopf:{n_per_comp}"),
            SeedSpec::Chain { n_per_comp } => write!(f, "chain:{n_per_comp}"),
            SeedSpec::Borromean { n_per_comp } => write!(f, "borromean:{n_per_comp}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::total_length;
    use crate::thickness::thickness;

    #[test]
    fn circle_four_is_a_square() {
        let sq = circle(4, 1.0).unwrap();
        for i in 0..4 {
            assert!((sq.edge_length(0, i) - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn trefoil_seed_shape() {
        let k = torus_knot(2, 3, 2.0, 1.0, 400).unwrap();
        assert_eq!(k.num_components(), 1);
        assert_eq!(k.num_vertices(), 400);
        assert!(thickness(&k).is_ok());
        assert!(torus_knot(2, 4, 2.0, 1.0, 100).is_err());
    }

    #[test]
    fn link_seeds() {
        let h = hopf(108).unwrap();
        assert_eq!(h.num_components(), 2);
        assert_eq!(h.num_edges(), 216);
        // each circle passes through the other's center
        assert!((h.vertex(0, 0) - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((h.vertex(1, 54) - Vec3::zeros()).norm() < 1e-14);
        assert_eq!(chain(128).unwrap().num_edges(), 384);
        assert_eq!(borromean(210).unwrap().num_edges(), 630);
        for l in [h, chain(64).unwrap(), borromean(64).unwrap()] {
            assert!(thickness(&l).unwrap().pthi > 0.3);
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(borromean(50).unwrap(), borromean(50).unwrap());
        assert_eq!(total_length(&chain(40).unwrap()), total_length(&chain(40).unwrap()));
    }

    #[test]
    fn parse_seed_specs() {
        assert_eq!("hopf:108".parse::<SeedSpec>().unwrap(), SeedSpec::Hopf { n_per_comp: 108 });
        assert_eq!(
            "torus:2:3:400".parse::<SeedSpec>().unwrap(),
            SeedSpec::TorusKnot { p: 2, q: 3, n: 400, big_r: 2.0, small_r: 1.0 }
        );
        assert_eq!("circle:64".parse::<SeedSpec>().unwrap(), SeedSpec::Circle { n: 64, radius: 1.0 });
        assert!("knot:3".parse::<SeedSpec>().is_err());
        assert!("hopf".parse::<SeedSpec>().is_err());
        let s: SeedSpec = "torus:3:2:100:2.5:1".parse().unwrap();
        assert_eq!(s.to_string().parse::<SeedSpec>().unwrap(), s);
    }
}
