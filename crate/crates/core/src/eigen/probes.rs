use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::GridFunction;
use crate::qcore::{lindqvist_integral, relative_residual, residual_with_tol, spow, PotentialField, ProblemSpec};
use crate::solver::{minimize, solve_dirichlet, Constraints};
use crate::{par, rng};

use super::{principal_eigenpair, principal_eigenpair_from, EigenOptions, EigenResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub restarts: usize,
    pub collinear: usize,
    pub max_deviation: f64,
    pub max_lindqvist_rhs: f64,
    pub pass: bool,
    /// First pair (restart, restart) that failed.
    pub offending: Option<(usize, usize)>,
}

/// Re-runs the eigensolver from random initializers and compares the limits.
pub fn simplicity_probe(
    spec: &ProblemSpec,
    restarts: usize,
    seed: u64,
    opts: &EigenOptions,
) -> Result<SimplicityReport> {
    let base = principal_eigenpair(spec, opts)?;
    if restarts <= 1 {
        return Ok(SimplicityReport {
            restarts,
            collinear: restarts,
            max_deviation: 0.0,
            max_lindqvist_rhs: 0.0,
            pass: true,
            offending: None,
        });
    }
    let mesh = spec.mesh.clone();
    let runs: Vec<Result<EigenResult>> = par::map((0..restarts).collect(), |k| {
        let mut r = rng::stream(seed, k as u64);
        let vals: Vec<f64> = (0..mesh.num_nodes()).map(|_| r.random_range(-1.0..1.0)).collect();
        let init = GridFunction::new(mesh.clone(), vals)?;
        principal_eigenpair_from(spec, Some(&init), opts)
    });
    let runs: Vec<EigenResult> = runs.into_iter().collect::<Result<_>>()?;
    let mut limits: Vec<&GridFunction> = vec![&base.v1];
    limits.extend(runs.iter().map(|r| &r.v1));
    let h = 1e-8 * base.v1.max();
    let mut collinear = 0;
    let mut max_dev: f64 = 0.0;
    let mut max_rhs: f64 = 0.0;
    let mut offending = None;
    for (k, r) in runs.iter().enumerate() {
        let dev = r.v1.sup_distance(&base.v1);
        max_dev = max_dev.max(dev);
        if dev <= 1e-6 {
            collinear += 1;
        } else if offending.is_none() {
            offending = Some((0, k + 1));
        }
    }
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let li = lindqvist_integral(spec, spec, limits[i], limits[j], None, None, h)?;
            max_rhs = max_rhs.max(li.rhs);
            if li.rhs > 1e-8 && offending.is_none() {
                offending = Some((i, j));
            }
        }
    }
    Ok(SimplicityReport {
        restarts,
        collinear,
        max_deviation: max_dev,
        max_lindqvist_rhs: max_rhs,
        pass: offending.is_none(),
        offending,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleWitness {
    /// `min(-v1)`, negative.
    pub min_value: f64,
    /// Relative residual of `Q'[-v1] = -lambda1 v1^{p-1}`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub lambda1: f64,
    pub trials: usize,
    /// Weak maximum principle: every solution `>= -1e-8`.
    pub weak: usize,
    /// Strong maximum principle: zero for `g = 0`, positive otherwise.
    pub strong: usize,
    /// `v1` is a strict positive supersolution.
    pub strict_supersolution: bool,
    /// Two independent solves agree to `1e-6`.
    pub unique: usize,
    pub min_solution: f64,
    pub max_disagreement: f64,
    pub witness: Option<MaxPrincipleWitness>,
    pub pass: bool,
}

fn random_load(spec: &ProblemSpec, trial: usize, seed: u64) -> PotentialField {
    let mesh = &spec.mesh;
    let ne = mesh.num_elements();
    if trial == 0 {
        return PotentialField::zero(mesh);
    }
    let mut r = rng::stream(seed, 1000 + trial as u64);
    let amp: f64 = r.random_range(0.1..2.0);
    let localized = r.random_bool(0.5);
    let (c, rad) = (
        [r.random_range(0.0..1.0f64), r.random_range(0.0..1.0f64)],
        r.random_range(0.1..0.5),
    );
    let lo = mesh.coords().iter().fold([f64::INFINITY; 2], |m, x| [m[0].min(x[0]), m[1].min(x[1])]);
    let hi = mesh.coords().iter().fold([f64::NEG_INFINITY; 2], |m, x| [m[0].max(x[0]), m[1].max(x[1])]);
    let center = [lo[0] + c[0] * (hi[0] - lo[0]), lo[1] + c[1] * (hi[1] - lo[1])];
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let vals: Vec<f64> = (0..ne)
        .map(|e| {
            let m = mesh.midpoint(e);
            let d = ((m[0] - center[0]).powi(2) + (m[1] - center[1]).powi(2)).sqrt();
            let base = amp * r.random_range(0.0..1.0);
            if localized && d > rad * scale {
                0.0
            } else {
                base
            }
        })
        .collect();
    let mut f = PotentialField::from_elements(mesh, vals).expect("finite load");
    if f.max() <= 0.0 {
        f = PotentialField::constant(mesh, amp);
    }
    f
}

/// Maximum-principle equivalences: with `lambda1 > 0`, random `g >= 0`
/// solves must be nonnegative, positive unless `g = 0`, unique, and `v1`
/// is a strict supersolution; with `lambda1 <= 0`, `-v1` is a witness
/// against the weak maximum principle.
pub fn maximum_principle_suite(
    spec: &ProblemSpec,
    trials: usize,
    seed: u64,
    opts: &EigenOptions,
) -> Result<MaxPrincipleReport> {
    let eig = principal_eigenpair(spec, opts)?;
    let mesh = spec.mesh.clone();
    let p = spec.p;
    if eig.lambda1 <= 0.0 {
        let u = eig.v1.scaled(-1.0);
        let g: Vec<f64> = (0..mesh.num_elements())
            .map(|e| -eig.lambda1 * spow(mesh.mid_value(eig.v1.values(), e), p - 1.0))
            .collect();
        let g = PotentialField::from_elements(&mesh, g)?;
        let residual = relative_residual(spec, &u, Some(&g))?;
        let witness = MaxPrincipleWitness {
            min_value: u.min(),
            residual,
        };
        let pass = witness.min_value < 0.0 && g.min() >= 0.0 && residual <= 1e-6;
        return Ok(MaxPrincipleReport {
            lambda1: eig.lambda1,
            trials: 0,
            weak: 0,
            strong: 0,
            strict_supersolution: false,
            unique: 0,
            min_solution: u.min(),
            max_disagreement: 0.0,
            witness: Some(witness),
            pass,
        });
    }

    let (rv, tv) = residual_with_tol(spec, &eig.v1, None)?;
    let strict_supersolution = rv.min() >= -tv && rv.max() > tv;

    let zero = GridFunction::zeros(mesh.clone());
    let outcomes: Vec<Result<(bool, bool, bool, f64, f64)>> = par::map((0..trials).collect(), |k| {
        let g = random_load(spec, k, seed);
        let a = solve_dirichlet(spec, Some(&g), &zero, &opts.solve)?.u;
        let mut r = rng::stream(seed, 5000 + k as u64);
        let init: Vec<f64> = (0..mesh.num_nodes()).map(|_| r.random_range(0.0..1.0)).collect();
        let cons = Constraints::homogeneous(&mesh);
        let b = minimize(spec, g.values(), &cons, Some(&init), &opts.solve)?.u;
        let weak = a.min() >= -1e-8;
        let scale = a.max_abs();
        let strong = if g.max() == 0.0 {
            scale <= 1e-8
        } else {
            a.min_interior() > 0.0
        };
        let dis = a.sup_distance(&b);
        Ok((weak, strong, dis <= 1e-6, a.min(), dis))
    });
    let mut rep = MaxPrincipleReport {
        lambda1: eig.lambda1,
        trials,
        weak: 0,
        strong: 0,
        strict_supersolution,
        unique: 0,
        min_solution: f64::INFINITY,
        max_disagreement: 0.0,
        witness: None,
        pass: false,
    };
    for o in outcomes {
        let (w, s, u, m, d) = o?;
        rep.weak += w as usize;
        rep.strong += s as usize;
        rep.unique += u as usize;
        rep.min_solution = rep.min_solution.min(m);
        rep.max_disagreement = rep.max_disagreement.max(d);
    }
    rep.pass = rep.weak == trials && rep.strong == trials && rep.unique == trials && strict_supersolution;
    Ok(rep)
}
