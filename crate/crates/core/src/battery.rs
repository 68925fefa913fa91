//! Seeded batteries of test functions shared by the property suites.

use std::sync::Arc;

use rand::Rng;

use crate::mesh::{GridFunction, Mesh};
use crate::rng;

fn bounding_box(mesh: &Mesh) -> ([f64; 2], [f64; 2]) {
    let lo = mesh
        .coords()
        .iter()
        .fold([f64::INFINITY; 2], |m, x| [m[0].min(x[0]), m[1].min(x[1])]);
    let hi = mesh
        .coords()
        .iter()
        .fold([f64::NEG_INFINITY; 2], |m, x| [m[0].max(x[0]), m[1].max(x[1])]);
    (lo, hi)
}

/// A random combination of a few low sine modes of the bounding box,
/// zeroed on the boundary nodes.
pub fn sine_mode_function(mesh: &Arc<Mesh>, r: &mut impl Rng) -> GridFunction {
    let (lo, hi) = bounding_box(mesh);
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                r.random_range(1..4) as f64,
                r.random_range(1..4) as f64,
                r.random_range(-1.0..1.0),
            )
        })
        .collect();
    let pi = std::f64::consts::PI;
    let two_d = mesh.dim() == 2;
    let u = GridFunction::from_fn(mesh.clone(), |x| {
        let s = (x[0] - lo[0]) / (hi[0] - lo[0]);
        let t = if two_d { (x[1] - lo[1]) / (hi[1] - lo[1]) } else { 0.5 };
        modes
            .iter()
            .map(|&(k, l, a)| a * (k * pi * s).sin() * if two_d { (l * pi * t).sin() } else { 1.0 })
            .sum()
    })
    .expect("finite test function");
    u.with_zero_boundary()
}

/// `count` boundary-vanishing test functions from `seed`.
pub fn test_functions(mesh: &Arc<Mesh>, count: usize, seed: u64) -> Vec<GridFunction> {
    (0..count)
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            sine_mode_function(mesh, &mut r)
        })
        .collect()
}

/// Random positive nodal values in `[lo, hi]`.
pub fn positive_p1(mesh: &Arc<Mesh>, lo: f64, hi: f64, r: &mut impl Rng) -> GridFunction {
    let vals = (0..mesh.num_nodes()).map(|_| r.random_range(lo..hi)).collect();
    GridFunction::new(mesh.clone(), vals).expect("finite values")
}
