//! Descent minimizers for the regularized objective.

use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::qcore::ProblemSpec;

use super::objective::Objective;
use super::{Constraints, IterationTrace, Method, Solution, SolveOptions};

/// Free-node numbering and the bandwidth of the free-node Hessian.
pub(crate) struct Layout {
    pub free: Vec<usize>,
    pub nodes: Vec<usize>,
    pub bw: usize,
}

impl Layout {
    pub fn new(spec: &ProblemSpec, cons: &Constraints) -> Self {
        let mesh = &spec.mesh;
        let mut free = vec![usize::MAX; mesh.num_nodes()];
        let mut nodes = Vec::new();
        for i in 0..mesh.num_nodes() {
            if !cons.fixed[i] {
                free[i] = nodes.len();
                nodes.push(i);
            }
        }
        let mut bw = 0;
        for e in 0..mesh.num_elements() {
            let cell = mesh.element(e);
            for &a in cell {
                for &b in cell {
                    if free[a] != usize::MAX && free[b] != usize::MAX {
                        bw = bw.max(free[a].abs_diff(free[b]));
                    }
                }
            }
        }
        Self { free, nodes, bw }
    }
}

fn rel_grad(lay: &Layout, grad: &[f64], scale: &[f64]) -> f64 {
    let (mut g, mut s) = (0.0f64, 0.0f64);
    for &n in &lay.nodes {
        g = g.max(grad[n].abs());
        s = s.max(scale[n]);
    }
    if g == 0.0 {
        0.0
    } else {
        g / s.max(f64::MIN_POSITIVE)
    }
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Outcome of one fixed-`eps` run.
struct Run {
    iterations: usize,
    rel_grad: f64,
    converged: bool,
}

fn newton_direction(
    obj: &Objective,
    u: &[f64],
    lay: &Layout,
    grad: &[f64],
) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = lay.nodes.iter().map(|&n| -grad[n]).collect();
    let attempts = [(false, 0.0), (true, 0.0), (true, 1e-8), (true, 1e-4), (true, 1e-1)];
    for &(positive_only, shift) in &attempts {
        let h = obj.hessian(u, &lay.free, lay.nodes.len(), lay.bw, positive_only, shift);
        if let Ok(ch) = h.cholesky() {
            let d = ch.solve(&rhs);
            if d.iter().all(|x| x.is_finite()) {
                return Ok(d);
            }
        }
    }
    Err(Error::NotPositiveDefinite)
}

fn run(
    obj: &Objective,
    u: &mut [f64],
    lay: &Layout,
    opts: &SolveOptions,
    tol: f64,
    trace: &mut IterationTrace,
    budget: usize,
    homogeneous: bool,
) -> Result<Run> {
    let n = u.len();
    let start = max_abs(u);
    let (mut grad, mut scale) = (vec![0.0; n], vec![0.0; n]);
    let mut j = obj.value(u);
    let mut prev_step: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut bb_alpha = 1.0;
    let mut trial = u.to_vec();
    let mut rel = f64::INFINITY;
    let mut last_energy: Option<f64> = None;
    for it in 0..budget {
        // with zero data the iterate may collapse onto the exact solution 0,
        // where a relative gradient is meaningless
        if homogeneous && max_abs(u) <= 1e-13 * start {
            u.iter_mut().for_each(|x| *x = 0.0);
            return Ok(Run {
                iterations: it,
                rel_grad: 0.0,
                converged: true,
            });
        }
        obj.gradient(u, &mut grad, &mut scale);
        rel = rel_grad(lay, &grad, &scale);
        if opts.record_trace && trace.energy.len() < opts.max_iter {
            let mono = last_energy.is_none_or(|e| j <= e + 1e-12 * e.abs().max(1.0));
            last_energy = Some(j);
            trace.energy.push(j);
            trace.grad_norm.push(rel);
            trace.monotone.push(mono);
        }
        if rel <= tol {
            return Ok(Run {
                iterations: it,
                rel_grad: rel,
                converged: true,
            });
        }
        if max_abs(u) > 1e12 || !j.is_finite() {
            return Err(Error::Supercritical(format!(
                "iterate reached {:.3e} after {it} steps",
                max_abs(u)
            )));
        }
        let gfree: Vec<f64> = lay.nodes.iter().map(|&k| grad[k]).collect();
        let mut d = match opts.method {
            Method::Newton => newton_direction(obj, u, lay, &grad)?,
            Method::BarzilaiBorwein => {
                if let Some((s, y)) = &prev_step {
                    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
                    let ss: f64 = s.iter().map(|a| a * a).sum();
                    if sy > 0.0 {
                        bb_alpha = ss / sy;
                    }
                }
                gfree.iter().map(|g| -bb_alpha * g).collect()
            }
        };
        let mut slope: f64 = d.iter().zip(&gfree).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            d = gfree.iter().map(|g| -g).collect();
            slope = -gfree.iter().map(|g| g * g).sum::<f64>();
        }
        let ls = &opts.line_search;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..ls.max_backtracks {
            trial.copy_from_slice(u);
            for (k, &node) in lay.nodes.iter().enumerate() {
                trial[node] += t * d[k];
            }
            let jt = obj.value(&trial);
            if jt.is_finite() {
                if jt <= j + ls.armijo * t * slope {
                    accepted = Some(jt);
                    break;
                }
                // rounding regime: energies indistinguishable, judge by the gradient
                if (jt - j).abs() <= 1e-13 * j.abs().max(f64::MIN_POSITIVE) {
                    let (mut g2, mut s2) = (vec![0.0; n], vec![0.0; n]);
                    obj.gradient(&trial, &mut g2, &mut s2);
                    if rel_grad(lay, &g2, &s2) < rel {
                        accepted = Some(jt);
                        break;
                    }
                }
            }
            t *= ls.shrink;
        }
        let Some(jt) = accepted else {
            return Ok(Run {
                iterations: it,
                rel_grad: rel,
                converged: false,
            });
        };
        let change = t * max_abs(&d);
        if matches!(opts.method, Method::BarzilaiBorwein) {
            let s: Vec<f64> = d.iter().map(|x| t * x).collect();
            let mut g2 = vec![0.0; n];
            let mut s2 = vec![0.0; n];
            obj.gradient(&trial, &mut g2, &mut s2);
            let y: Vec<f64> = lay.nodes.iter().map(|&k| g2[k] - grad[k]).collect();
            prev_step = Some((s, y));
        }
        u.copy_from_slice(&trial);
        j = jt;
        if opts.record_trace {
            trace.change.push(change);
        }
        if change <= opts.tol_change * max_abs(u).max(f64::MIN_POSITIVE) && rel <= 100.0 * tol {
            obj.gradient(u, &mut grad, &mut scale);
            let r = rel_grad(lay, &grad, &scale);
            return Ok(Run {
                iterations: it + 1,
                rel_grad: r,
                converged: r <= 100.0 * tol,
            });
        }
    }
    Ok(Run {
        iterations: budget,
        rel_grad: rel,
        converged: false,
    })
}

/// Minimizes the objective with `load` over functions matching `cons`.
pub fn minimize(
    spec: &ProblemSpec,
    load: &[f64],
    cons: &Constraints,
    init: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<Solution> {
    opts.validate()?;
    let mesh = &spec.mesh;
    let nn = mesh.num_nodes();
    if load.len() != mesh.num_elements() {
        return Err(Error::SizeMismatch {
            what: "element load",
            expected: mesh.num_elements(),
            got: load.len(),
        });
    }
    if cons.fixed.len() != nn || cons.values.len() != nn {
        return Err(Error::MeshMismatch);
    }
    let mut u: Vec<f64> = match init {
        Some(v) => {
            mesh.check_len(v)?;
            v.to_vec()
        }
        None => vec![0.0; nn],
    };
    for i in 0..nn {
        if cons.fixed[i] {
            u[i] = cons.values[i];
        }
    }
    let lay = Layout::new(spec, cons);
    let homogeneous = load.iter().all(|&g| g == 0.0) && cons.values.iter().all(|&v| v == 0.0);
    let mut trace = IterationTrace::default();
    let mut total = 0;
    if spec.p < 2.0 && opts.continuation && opts.eps_regularization > 0.0 {
        let mut eps = 1e-1;
        while eps >= opts.eps_regularization * (1.0 - 1e-9) {
            let obj = Objective { spec, load, eps };
            let r = run(&obj, &mut u, &lay, opts, opts.tol_grad.max(1e-8), &mut trace, opts.max_iter - total, homogeneous)?;
            total += r.iterations;
            eps *= 0.01;
            if total >= opts.max_iter {
                break;
            }
        }
    }
    let obj = Objective { spec, load, eps: 0.0 };
    let remaining = opts.max_iter.saturating_sub(total).max(1);
    let r = run(&obj, &mut u, &lay, opts, opts.tol_grad, &mut trace, remaining, homogeneous)?;
    total += r.iterations;
    let energy = obj.value(&u);
    if !r.converged {
        return Err(Error::NonConvergence {
            iterations: total,
            rel_grad: r.rel_grad,
            trace: Box::new(trace),
        });
    }
    Ok(Solution {
        u: GridFunction::new(mesh.clone(), u)?,
        iterations: total,
        rel_grad: r.rel_grad,
        energy,
        trace,
    })
}
