#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ropewalk::{PolyLink, Vec3};

/// A jittered round polygon in the plane spanned by `e1`, `e2`.
fn wobbly_loop(rng: &mut ChaCha8Rng, n: usize, center: Vec3, e1: Vec3, e2: Vec3) -> Vec<Vec3> {
    let normal = e1.cross(&e2);
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + rng.gen_range(-0.3..0.3)) / n as f64;
            let r = 1.0 + rng.gen_range(-0.1..0.1);
            center + e1 * (r * t.cos()) + e2 * (r * t.sin()) + normal * rng.gen_range(-0.1..0.1)
        })
        .collect()
}

/// Random embedded link with one or two components and `edges` edges in total.
pub fn random_link(seed: u64, edges: usize, two_components: bool) -> PolyLink {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Vec3::x();
    let y = Vec3::y();
    let z = Vec3::z();
    if two_components {
        let n0 = edges / 2;
        let a = wobbly_loop(&mut rng, n0, Vec3::zeros(), x, y);
        let b = wobbly_loop(&mut rng, edges - n0, x, x, z);
        PolyLink::new(vec![a, b]).unwrap()
    } else {
        PolyLink::single(wobbly_loop(&mut rng, edges, Vec3::zeros(), x, y)).unwrap()
    }
}

pub fn random_rigid_motion(seed: u64) -> impl Fn(&Vec3) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = Unit::new_normalize(Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0)));
    let rot = Rotation3::from_axis_angle(&axis, rng.gen_range(0.0..2.0 * PI));
    let shift = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    move |p| rot * p + shift
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
