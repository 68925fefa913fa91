//! Principal eigenpair by shifted inverse power iteration, and the
//! simplicity and maximum-principle probes built on it.

mod probes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::numeric::BandMatrix;
use crate::qcore::{energy, relative_residual, spow, ProblemSpec};
use crate::solver::{minimize, Constraints, Layout, Objective, SolveOptions};

pub use probes::{
    maximum_principle_suite, simplicity_probe, MaxPrincipleReport, MaxPrincipleWitness,
    SimplicityReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    /// Bound on the relative eigen-residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Options of the inner convex solves.
    pub solve: SolveOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20_000,
            solve: SolveOptions {
                tol_grad: 1e-11,
                record_trace: false,
                ..SolveOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Positive, with `||v1||_p = 1`.
    pub v1: GridFunction,
    pub iterations: usize,
    /// `|Q[v1] - lambda1 ||v1||_p^p|`.
    pub rayleigh_residual: f64,
    /// Relative sup-norm of the eigen-equation residual.
    pub residual: f64,
    /// Starting positivity shift.
    pub sigma: f64,
}

/// Relative residual of `Q'_{V - lambda}[v] = 0` over interior nodes.
pub fn eigen_residual(spec: &ProblemSpec, v: &GridFunction, lambda: f64) -> Result<f64> {
    relative_residual(&spec.with_shift(-lambda), v, None)
}

fn normalize(u: &mut [f64], mesh_fn: &GridFunction, p: f64) -> Result<()> {
    let g = GridFunction::new(mesh_fn.mesh().clone(), u.to_vec())?;
    let n = g.lp_norm(p);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::domain("inverse iteration collapsed to zero"));
    }
    let sign = if u.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    u.iter_mut().for_each(|x| *x *= sign / n);
    Ok(())
}

fn quotient(spec: &ProblemSpec, u: &GridFunction) -> Result<f64> {
    Ok(energy(spec, u)? / u.lp_norm_pow(spec.p))
}

/// Positivity shift `sigma = max(0, -min V) + 1`.
pub fn positivity_shift(spec: &ProblemSpec) -> f64 {
    (-spec.v.min()).max(0.0) + 1.0
}

pub fn principal_eigenpair(spec: &ProblemSpec, opts: &EigenOptions) -> Result<EigenResult> {
    principal_eigenpair_from(spec, None, opts)
}

/// As [`principal_eigenpair`], started from `init` when given.
pub fn principal_eigenpair_from(
    spec: &ProblemSpec,
    init: Option<&GridFunction>,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let mesh = spec.mesh.clone();
    let cons = Constraints::homogeneous(&mesh);
    if cons.num_free() == 0 {
        return Err(Error::config("mesh has no interior nodes"));
    }
    let sigma = positivity_shift(spec);
    let zero = GridFunction::zeros(mesh.clone());
    let mut u: Vec<f64> = match init {
        Some(g) => {
            mesh.check_len(g.values())?;
            g.with_zero_boundary().into_values()
        }
        None => {
            // torsion function of the shifted problem: positive, vanishing on the boundary
            let shifted = spec.with_shift(sigma);
            let load = vec![1.0; mesh.num_elements()];
            minimize(&shifted, &load, &cons, None, &opts.solve)?.u.into_values()
        }
    };
    normalize(&mut u, &zero, spec.p)?;

    let (mut v, mut iters) = if spec.p == 2.0 {
        linear_iteration(spec, u, sigma, &cons, opts)?
    } else {
        nonlinear_iteration(spec, u, sigma, &cons, opts)?
    };
    // |v| is also a minimizer; polish from it
    v.iter_mut().for_each(|x| *x = x.abs());
    normalize(&mut v, &zero, spec.p)?;
    let (mut v, more) = if spec.p == 2.0 {
        linear_iteration(spec, v, sigma, &cons, opts)?
    } else {
        nonlinear_iteration(spec, v, sigma, &cons, opts)?
    };
    iters += more;
    normalize(&mut v, &zero, spec.p)?;
    let v1 = GridFunction::new(mesh.clone(), v)?;
    if !(v1.min_interior() > 0.0) {
        return Err(Error::domain(
            "principal eigenfunction has an interior zero: mesh too coarse for positivity",
        ));
    }
    let lambda1 = quotient(spec, &v1)?;
    let q = energy(spec, &v1)?;
    let residual = eigen_residual(spec, &v1, lambda1)?;
    Ok(EigenResult {
        lambda1,
        rayleigh_residual: (q - lambda1 * v1.lp_norm_pow(spec.p)).abs(),
        v1,
        iterations: iters,
        residual,
        sigma,
    })
}

fn nonlinear_iteration(
    spec: &ProblemSpec,
    mut u: Vec<f64>,
    sigma: f64,
    cons: &Constraints,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, usize)> {
    let mesh = &spec.mesh;
    let p = spec.p;
    let shifted = spec.with_shift(sigma);
    let mut last = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = GridFunction::new(mesh.clone(), u.clone())?;
        let rq = quotient(spec, &g)?;
        let res = eigen_residual(spec, &g, rq)?;
        if res <= opts.tol || (it > 0 && (rq - last).abs() <= 1e-15 * (1.0 + rq.abs()) && res <= 1e3 * opts.tol) {
            return Ok((u, it));
        }
        last = rq;
        let load: Vec<f64> = (0..mesh.num_elements())
            .map(|e| spow(mesh.mid_value(&u, e), p - 1.0))
            .collect();
        // fixed point of the step is u (rq + sigma)^{-1/(p-1)}
        let c = (rq + sigma).max(1e-300).powf(-1.0 / (p - 1.0));
        let init: Vec<f64> = u.iter().map(|x| c * x).collect();
        let w = minimize(&shifted, &load, cons, Some(&init), &opts.solve)?;
        u = w.u.into_values();
        let zero = GridFunction::zeros(mesh.clone());
        normalize(&mut u, &zero, p)?;
    }
    let g = GridFunction::new(mesh.clone(), u)?;
    let rq = quotient(spec, &g)?;
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        rel_grad: eigen_residual(spec, &g, rq)?,
        trace: Box::default(),
    })
}

/// `p = 2`: the step is a linear solve with `K + (V + s) M`. Once the
/// quotient settles the shift moves towards `-RQ` with a shrinking margin;
/// Cholesky success certifies that the shifted matrix stays positive
/// definite.
fn linear_iteration(
    spec: &ProblemSpec,
    mut u: Vec<f64>,
    sigma: f64,
    cons: &Constraints,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, usize)> {
    let mesh = &spec.mesh;
    let lay = Layout::new(spec, cons);
    let nf = lay.nodes.len();
    let k = mesh.nodes_per_element() as f64;
    let factor = |s: f64| -> Result<crate::numeric::BandCholesky> {
        let shifted = spec.with_shift(s);
        let load = vec![0.0; mesh.num_elements()];
        let obj = Objective {
            spec: &shifted,
            load: &load,
            eps: 0.0,
        };
        let h: BandMatrix = obj.hessian(&u_zero(mesh.num_nodes()), &lay.free, nf, lay.bw, false, 0.0);
        h.cholesky()
    };
    let mut shift = sigma;
    let mut chol = factor(shift)?;
    let mut last = f64::INFINITY;
    let mut delta: Option<f64> = None;
    let zero = GridFunction::zeros(mesh.clone());
    for it in 0..opts.max_iter {
        let g = GridFunction::new(mesh.clone(), u.clone())?;
        let rq = quotient(spec, &g)?;
        let res = eigen_residual(spec, &g, rq)?;
        if res <= opts.tol || (it > 0 && (rq - last).abs() <= 1e-15 * (1.0 + rq.abs()) && res <= 1e3 * opts.tol) {
            return Ok((u, it));
        }
        let settled = (rq - last).abs() <= 1e-3 * (1.0 + rq.abs());
        last = rq;
        if settled {
            // rq >= lambda_1, so any margin d > rq - lambda_1 keeps the matrix
            // definite; the margin shrinks while factorizations succeed
            let floor = 1e-6 * sigma;
            let d = delta.map_or(1e-3 * (rq.abs() + floor), |d| 0.25 * d);
            let target = -rq + d;
            if target < shift - 0.5 * d {
                match factor(target) {
                    Ok(c) => {
                        chol = c;
                        shift = target;
                        delta = Some(d);
                    }
                    Err(_) => delta = Some(8.0 * d),
                }
            } else {
                delta = Some(d);
            }
        }
        let mut rhs = vec![0.0; nf];
        for e in 0..mesh.num_elements() {
            let w = mesh.mid_value(&u, e) * mesh.dx(e) / k;
            for &n in mesh.element(e) {
                if lay.free[n] != usize::MAX {
                    rhs[lay.free[n]] += w;
                }
            }
        }
        let x = chol.solve(&rhs);
        let mut next = vec![0.0; mesh.num_nodes()];
        for (i, &n) in lay.nodes.iter().enumerate() {
            next[n] = x[i];
        }
        normalize(&mut next, &zero, 2.0)?;
        u = next;
    }
    let g = GridFunction::new(mesh.clone(), u)?;
    let rq = quotient(spec, &g)?;
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        rel_grad: eigen_residual(spec, &g, rq)?,
        trace: Box::default(),
    })
}

fn u_zero(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::qcore::PotentialField;
    use std::sync::Arc;

    fn line(p: f64, n: usize, c: f64) -> ProblemSpec {
        let m = Arc::new(Mesh::interval(0.0, 1.0, n, 1).unwrap());
        let v = PotentialField::constant(&m, c);
        ProblemSpec::isotropic(p, m, v).unwrap()
    }

    #[test]
    fn laplacian_on_unit_interval() {
        let r = principal_eigenpair(&line(2.0, 256, 0.0), &EigenOptions::default()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((r.lambda1 - pi2).abs() < 0.01 * pi2, "{}", r.lambda1);
        assert!((r.v1.lp_norm(2.0) - 1.0).abs() < 1e-10);
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn shift_equivariance() {
        for p in [1.5, 2.0, 3.0] {
            let a = principal_eigenpair(&line(p, 64, 0.0), &EigenOptions::default()).unwrap();
            let b = principal_eigenpair(&line(p, 64, 5.0), &EigenOptions::default()).unwrap();
            assert!((b.lambda1 - a.lambda1 - 5.0).abs() < 1e-8, "p={p}: {} {}", a.lambda1, b.lambda1);
        }
    }
}
