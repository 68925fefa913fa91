//! Lindqvist's vector inequality, its calibrated constant, and the integral
//! form comparing two positive solutions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::numeric::KahanSum;
use crate::rng;

use super::fields::{anorm, PotentialField, ProblemSpec, Sym2};
use super::functional::{dot, flux, same_mesh, spow};

/// `|a|_A^p - |b|_A^p - p |b|_A^{p-2} A b . (a - b)`.
pub fn lindqvist_lhs(a: [f64; 2], b: [f64; 2], m: &Sym2, p: f64) -> f64 {
    let fb = flux(b, m, p);
    anorm(a, m).powf(p) - anorm(b, m).powf(p) - p * dot(fb, [a[0] - b[0], a[1] - b[1]])
}

/// `|a - b|_A^p` for `p >= 2`, `|a - b|_A^2 (|a|_A + |b|_A)^{p-2}` otherwise
/// (zero when `a = b = 0`).
pub fn lindqvist_rhs(a: [f64; 2], b: [f64; 2], m: &Sym2, p: f64) -> f64 {
    let d = anorm([a[0] - b[0], a[1] - b[1]], m);
    if p >= 2.0 {
        d.powf(p)
    } else {
        let s = anorm(a, m) + anorm(b, m);
        if s == 0.0 {
            0.0
        } else {
            d * d * s.powf(p - 2.0)
        }
    }
}

/// `lhs - c * rhs`.
pub fn lindqvist_gap(a: [f64; 2], b: [f64; 2], m: &Sym2, p: f64, c: f64) -> f64 {
    lindqvist_lhs(a, b, m, p) - c * lindqvist_rhs(a, b, m, p)
}

/// Calibrated constant of the vector inequality for one `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindqvistConstant {
    pub p: f64,
    pub constant: f64,
    /// Minimizing pair in the reduced form `b = (1, 0)`, `a = rho (cos t, sin t)`.
    pub rho: f64,
    pub angle: f64,
}

/// Ratio in the reduced coordinates; the inequality is invariant under
/// `a, b -> A^{1/2} a, A^{1/2} b`, rotations and joint scaling, so this two
/// parameter family covers every `(a, b, A)` with `b != 0`. With `b = 0`
/// the ratio is 1.
fn reduced_ratio(p: f64, rho: f64, angle: f64) -> f64 {
    let a = [rho * angle.cos(), rho * angle.sin()];
    let b = [1.0, 0.0];
    // Near a = b both sides vanish and rounding dominates; that corner is
    // covered by `diagonal_limit`.
    if (a[0] - 1.0).hypot(a[1]) < 1e-3 {
        return f64::INFINITY;
    }
    let r = lindqvist_rhs(a, b, &Sym2::IDENTITY, p);
    if r <= 0.0 {
        return f64::INFINITY;
    }
    lindqvist_lhs(a, b, &Sym2::IDENTITY, p) / r
}

/// Limit of the ratio as `a -> b` along the worst direction (`a - b`
/// parallel to `b`); infinite for `p > 2`.
fn diagonal_limit(p: f64) -> f64 {
    if p > 2.0 {
        f64::INFINITY
    } else {
        0.5 * p * (p - 1.0) * 2f64.powf(2.0 - p)
    }
}

fn rho_of(s: f64) -> f64 {
    s / (1.0 - s)
}

/// Infimum of `lhs / rhs`: dense grid over `(rho, angle)`, seeded random
/// pairs, then pattern-search refinement of the best candidates. A relative
/// guard of `1e-13` absorbs rounding in the final minimum.
pub fn calibrate_lindqvist(p: f64, samples: usize, seed: u64) -> Result<LindqvistConstant> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::config(format!("p must be > 1, got {p}")));
    }
    const NS: usize = 600;
    const NT: usize = 600;
    let pi = std::f64::consts::PI;
    let mut cands: Vec<(f64, f64, f64)> = Vec::with_capacity(NS * NT + samples);
    for i in 0..NS {
        let s = (i as f64 + 0.5) / NS as f64;
        for j in 0..=NT {
            let t = pi * j as f64 / NT as f64;
            cands.push((reduced_ratio(p, rho_of(s), t), s, t));
        }
    }
    let mut r = rng::stream(seed, 0x11d);
    for _ in 0..samples {
        let s: f64 = r.random_range(0.0..1.0);
        let t: f64 = r.random_range(0.0..pi);
        cands.push((reduced_ratio(p, rho_of(s), t), s, t));
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = (diagonal_limit(p).min(1.0), 0.5, 0.0);
    for &(f0, s0, t0) in cands.iter().take(8) {
        let refined = pattern_search(p, f0, s0, t0);
        if refined.0 < best.0 {
            best = refined;
        }
    }
    let constant = best.0 * (1.0 - 1e-13);
    Ok(LindqvistConstant {
        p,
        constant,
        rho: rho_of(best.1),
        angle: best.2,
    })
}

fn pattern_search(p: f64, mut f: f64, mut s: f64, mut t: f64) -> (f64, f64, f64) {
    let pi = std::f64::consts::PI;
    let (mut hs, mut ht) = (1.0 / 600.0, pi / 600.0);
    while hs > 1e-15 {
        let mut moved = false;
        for (ds, dt) in [(hs, 0.0), (-hs, 0.0), (0.0, ht), (0.0, -ht)] {
            let (sn, tn) = ((s + ds).clamp(0.0, 1.0 - 1e-12), (t + dt).clamp(0.0, pi));
            let fnew = reduced_ratio(p, rho_of(sn), tn);
            if fnew < f {
                f = fnew;
                s = sn;
                t = tn;
                moved = true;
            }
        }
        if !moved {
            hs *= 0.5;
            ht *= 0.5;
        }
    }
    (f, s, t)
}

/// Both sides of the integral inequality for two positive functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindqvistIntegral {
    /// `I_h` evaluated from the supplied right-hand sides `g_i`.
    pub i_h: f64,
    /// The same quantity written through the gradients of `log w_{i,h}`;
    /// equals `I_h` when the `w_i` solve their equations exactly.
    pub i_h_flux: f64,
    /// The case-split right side (without the constant).
    pub rhs: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn lindqvist_integral(
    spec1: &ProblemSpec,
    spec2: &ProblemSpec,
    w1: &GridFunction,
    w2: &GridFunction,
    g1: Option<&PotentialField>,
    g2: Option<&PotentialField>,
    h: f64,
) -> Result<LindqvistIntegral> {
    if !same_mesh(&spec1.mesh, &spec2.mesh)
        || !same_mesh(&spec1.mesh, w1.mesh())
        || !same_mesh(&spec1.mesh, w2.mesh())
    {
        return Err(Error::MeshMismatch);
    }
    if spec1.p != spec2.p {
        return Err(Error::config("both problems must share p"));
    }
    if !(h >= 0.0) {
        return Err(Error::config("h must be nonnegative"));
    }
    if w1.min() < 0.0 || w2.min() < 0.0 {
        return Err(Error::domain("w1 and w2 must be nonnegative"));
    }
    if h == 0.0 && (w1.min() <= 0.0 || w2.min() <= 0.0) {
        return Err(Error::domain("h = 0 requires positive w1 and w2"));
    }
    let mesh = &spec1.mesh;
    let p = spec1.p;
    let (mut ig, mut ifl, mut rhs) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for e in 0..mesh.num_elements() {
        let dx = mesh.dx(e);
        let m1 = mesh.mid_value(w1.values(), e);
        let m2 = mesh.mid_value(w2.values(), e);
        let (m1h, m2h) = (m1 + h, m2 + h);
        let (p1, p2) = (m1h.powf(p), m2h.powf(p));
        let q1 = (g1.map_or(0.0, |g| g.get(e)) - spec1.v.get(e) * spow(m1, p - 1.0)) / m1h.powf(p - 1.0);
        let q2 = (g2.map_or(0.0, |g| g.get(e)) - spec2.v.get(e) * spow(m2, p - 1.0)) / m2h.powf(p - 1.0);
        ig.add((q1 - q2) * (p1 - p2) * dx);

        // gradients of log w_{i,h} on the element, from the P1 interpolant
        let wm1 = mesh.grad_on(w1.values(), e);
        let wm2 = mesh.grad_on(w2.values(), e);
        let a = [wm1[0] / m1h, wm1[1] / m1h];
        let b = [wm2[0] / m2h, wm2[1] / m2h];
        let ma = spec1.a.get(e);
        ifl.add((p1 * lindqvist_lhs(a, b, ma, p) + p2 * lindqvist_lhs(b, a, ma, p)) * dx);
        rhs.add((p1 + p2) * lindqvist_rhs(a, b, ma, p) * dx);
    }
    Ok(LindqvistIntegral {
        i_h: ig.value(),
        i_h_flux: ifl.value(),
        rhs: rhs.value(),
    })
}
