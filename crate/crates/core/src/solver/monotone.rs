//! Monotone iteration `u_n = T(u_{n-1})` where `T(v)` solves
//! `Q'_{A,p,|V|}[u] = g + 2 V^- v^{p-1}` with the boundary data `f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::qcore::{residual_with_tol, spow, PotentialField, ProblemSpec};

use super::{minimize, Constraints, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotoneOptions {
    /// Stop when successive iterates differ by at most this in sup-norm.
    pub tol: f64,
    /// Allowed ordering violation.
    pub order_tol: f64,
    pub max_steps: usize,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            order_tol: 1e-8,
            max_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTrace {
    /// `||u_n - u_{n-1}||_inf` per step.
    pub sup_change: Vec<f64>,
    /// Ordering against the previous iterate held at every node.
    pub monotone: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct MonotoneResult {
    pub lower: GridFunction,
    pub upper: GridFunction,
    pub lower_trace: MonotoneTrace,
    pub upper_trace: MonotoneTrace,
}

/// Constant supersolution `M = (max g / min V)^{1/(p-1)}`, valid when `V > 0`.
pub fn constant_supersolution(spec: &ProblemSpec, g: &PotentialField) -> Result<GridFunction> {
    let vmin = spec.v.min();
    if !(vmin > 0.0) {
        return Err(Error::config(
            "a constant supersolution needs min V > 0; supply one explicitly",
        ));
    }
    let m = (g.max().max(0.0) / vmin).powf(1.0 / (spec.p - 1.0));
    GridFunction::new(spec.mesh.clone(), vec![m; spec.mesh.num_nodes()])
}

fn t_step(
    abs_spec: &ProblemSpec,
    vminus: &PotentialField,
    g: &PotentialField,
    cons: &Constraints,
    v: &GridFunction,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    let mesh = &abs_spec.mesh;
    let p = abs_spec.p;
    let load: Vec<f64> = (0..mesh.num_elements())
        .map(|e| g.get(e) + 2.0 * vminus.get(e) * spow(mesh.mid_value(v.values(), e), p - 1.0))
        .collect();
    Ok(minimize(abs_spec, &load, cons, Some(v.values()), opts)?.u)
}

fn first_violation(a: &GridFunction, b: &GridFunction, tol: f64) -> Option<usize> {
    // index of the first node with a > b + tol
    a.values()
        .iter()
        .zip(b.values())
        .position(|(x, y)| *x > *y + tol)
}

pub fn monotone_iteration(
    spec: &ProblemSpec,
    g: &PotentialField,
    f: &GridFunction,
    psi: &GridFunction,
    phi: &GridFunction,
    opts: &SolveOptions,
    mopts: &MonotoneOptions,
) -> Result<MonotoneResult> {
    let mesh = &spec.mesh;
    if g.min() < 0.0 {
        return Err(Error::config("g must be nonnegative"));
    }
    let tol = mopts.order_tol;
    if psi.min() < -tol {
        return Err(Error::domain("psi must be nonnegative"));
    }
    if let Some(i) = first_violation(psi, phi, tol) {
        return Err(Error::domain(format!("psi > phi at node {i}")));
    }
    for i in mesh.boundary_nodes() {
        let fv = f.value(i);
        if fv < -tol || psi.value(i) > fv + tol || fv > phi.value(i) + tol {
            return Err(Error::domain(format!("boundary ordering psi <= f <= phi fails at node {i}")));
        }
    }
    let (rl, tl) = residual_with_tol(spec, psi, Some(g))?;
    if let Some(i) = rl.values().iter().position(|&r| r > tl) {
        return Err(Error::domain(format!("psi is not a subsolution at node {i}")));
    }
    let (ru, tu) = residual_with_tol(spec, phi, Some(g))?;
    if let Some(i) = ru.values().iter().position(|&r| r < -tu) {
        return Err(Error::domain(format!("phi is not a supersolution at node {i}")));
    }

    let abs_spec = spec.with_potential(spec.v.abs())?;
    // the |V| functional is convex: its potential term is nonnegative
    debug_assert!(abs_spec.v.min() >= 0.0);
    let vminus = spec.v.negative_part();
    let cons = Constraints::dirichlet(mesh, f.values())?;

    let mut lower = psi.clone();
    let mut upper = phi.clone();
    let (mut lt, mut ut) = (MonotoneTrace::default(), MonotoneTrace::default());
    let mut lower_done = false;
    let mut upper_done = false;
    for _ in 0..mopts.max_steps {
        if !lower_done {
            let next = t_step(&abs_spec, &vminus, g, &cons, &lower, opts)?;
            let change = next.sup_distance(&lower);
            let bad = first_violation(&lower, &next, tol);
            lt.sup_change.push(change);
            lt.monotone.push(bad.is_none());
            if let Some(i) = bad {
                return Err(Error::domain(format!(
                    "lower sequence decreased at node {i} (step {})",
                    lt.sup_change.len()
                )));
            }
            lower = next;
            lower_done = change <= mopts.tol;
        }
        if !upper_done {
            let next = t_step(&abs_spec, &vminus, g, &cons, &upper, opts)?;
            let change = next.sup_distance(&upper);
            let bad = first_violation(&next, &upper, tol);
            ut.sup_change.push(change);
            ut.monotone.push(bad.is_none());
            if let Some(i) = bad {
                return Err(Error::domain(format!(
                    "upper sequence increased at node {i} (step {})",
                    ut.sup_change.len()
                )));
            }
            upper = next;
            upper_done = change <= mopts.tol;
        }
        if let Some(i) = first_violation(&lower, &upper, tol) {
            return Err(Error::domain(format!("lower iterate exceeds upper iterate at node {i}")));
        }
        if lower_done && upper_done {
            return Ok(MonotoneResult {
                lower,
                upper,
                lower_trace: lt,
                upper_trace: ut,
            });
        }
    }
    Err(Error::domain(format!(
        "monotone iteration did not settle in {} steps",
        mopts.max_steps
    )))
}
