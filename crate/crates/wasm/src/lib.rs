//! Browser bindings: principal eigenpair against `p`, a Dirichlet solve and a
//! Hardy criticality probe. Every export returns a JSON string.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use qcrit::criticality::{coupling_threshold, criticality_probe, CriticalityOptions, SpecFamily};
use qcrit::eigen::{principal_eigenpair, EigenOptions};
use qcrit::mesh::{make_exhaustion, ExhaustionKind, ExhaustionParams, RadiusScale};
use qcrit::qcore::{MatrixSpec, PotentialField, PotentialSpec, ProblemSpec};
use qcrit::solver::{solve_dirichlet, SolveOptions};
use qcrit::{GridFunction, Mesh};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_ELEMENTS: usize = 4096;

#[derive(Debug, Serialize)]
pub struct Eigenpair {
    pub p: f64,
    pub lambda1: f64,
    /// `(p - 1) pi_p^p` on the unit interval.
    pub exact: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct DirichletSolve {
    pub p: f64,
    pub iterations: usize,
    pub rel_grad: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct HardyProbe {
    pub beta: f64,
    pub verdict: String,
    pub radii: Vec<f64>,
    pub lambda_sequence: Vec<f64>,
    pub t_sequence: Vec<f64>,
    pub t_limit: Option<f64>,
    /// Coupling where the largest annulus stops being nonnegative.
    pub threshold: Option<f64>,
    /// Exact finite-annulus value of the same threshold.
    pub threshold_exact: f64,
}

fn unit_interval(p: f64, elements: usize, v: f64) -> qcrit::Result<ProblemSpec> {
    if !(2..=MAX_ELEMENTS).contains(&elements) {
        return Err(qcrit::Error::Config(format!("elements must lie in 2..={MAX_ELEMENTS}")));
    }
    let m = Arc::new(Mesh::interval(0.0, 1.0, elements, 1)?);
    let v = PotentialField::constant(&m, v);
    ProblemSpec::isotropic(p, m, v)
}

fn abscissae(u: &GridFunction) -> Vec<f64> {
    u.mesh().coords().iter().map(|c| c[0]).collect()
}

/// `(p - 1) pi_p^p` with `pi_p = 2 pi / (p sin(pi / p))`.
pub fn exact_eigenvalue(p: f64) -> f64 {
    let pi_p = 2.0 * PI / (p * (PI / p).sin());
    (p - 1.0) * pi_p.powf(p)
}

pub fn compute_eigenpair(p: f64, elements: usize) -> qcrit::Result<Eigenpair> {
    let r = principal_eigenpair(&unit_interval(p, elements, 0.0)?, &EigenOptions::default())?;
    Ok(Eigenpair {
        p,
        lambda1: r.lambda1,
        exact: exact_eigenvalue(p),
        x: abscissae(&r.v1),
        v: r.v1.values().to_vec(),
    })
}

pub fn compute_dirichlet(p: f64, v: f64, g: f64, elements: usize) -> qcrit::Result<DirichletSolve> {
    let spec = unit_interval(p, elements, v)?;
    let load = PotentialField::constant(&spec.mesh, g);
    let zero = GridFunction::zeros(spec.mesh.clone());
    let s = solve_dirichlet(&spec, Some(&load), &zero, &SolveOptions::default())?;
    Ok(DirichletSolve {
        p,
        iterations: s.iterations,
        rel_grad: s.rel_grad,
        x: abscissae(&s.u),
        u: s.u.values().to_vec(),
    })
}

/// Radial `n = 3` annuli `(e^{-2i}, e^{2i})`, `i = 1..=members`.
fn hardy_family(beta: f64, members: usize, elements: usize) -> qcrit::Result<SpecFamily> {
    let params = ExhaustionParams::new(ExhaustionKind::Annulus, RadiusScale::Geometric { base: E * E }, 1, elements);
    let s = make_exhaustion(&params, members)?;
    SpecFamily::from_catalog(s, 2.0, &MatrixSpec::Identity, &PotentialSpec::Hardy { beta })
}

pub fn compute_hardy(beta: f64, members: usize, bisect: bool) -> qcrit::Result<HardyProbe> {
    if !(2..=4).contains(&members) {
        return Err(qcrit::Error::Config("members must lie in 2..=4".into()));
    }
    let elements = 1024;
    let fam = hardy_family(beta, members, elements)?;
    let radii = fam.schedule.members.iter().map(|m| m.radius).collect::<Vec<_>>();
    let opts = CriticalityOptions::default();
    let hat = PotentialSpec::Hat {
        center: [1.0, 0.0],
        mass: 1.0,
    };
    let r = criticality_probe(&fam, &hat, [1.0, 0.0], &opts)?;
    let threshold = if bisect {
        coupling_threshold(|b| hardy_family(b, members, elements), 0.0, 1.0, 1e-3, &opts)?.estimate
    } else {
        None
    };
    let log_r = radii.last().copied().unwrap_or(E).ln();
    Ok(HardyProbe {
        beta,
        verdict: serde_json::to_value(r.verdict)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        radii,
        lambda_sequence: r.lambda_sequence,
        t_sequence: r.t_sequence,
        t_limit: r.t_limit,
        threshold,
        threshold_exact: 0.25 + (PI / (2.0 * log_r)).powi(2),
    })
}

fn to_js<T: Serialize>(r: qcrit::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Principal Dirichlet eigenpair of the p-Laplacian on `(0, 1)`.
#[wasm_bindgen]
pub fn eigenpair(p: f64, elements: usize) -> Result<String, JsError> {
    to_js(compute_eigenpair(p, elements))
}

/// Solves `-Δ_p u + V |u|^{p-2} u = g` on `(0, 1)` with zero boundary values.
#[wasm_bindgen]
pub fn dirichlet(p: f64, v: f64, g: f64, elements: usize) -> Result<String, JsError> {
    to_js(compute_dirichlet(p, v, g, elements))
}

/// Criticality probe for `-Δu - beta |x|^{-2} u` on nested annuli in three dimensions.
#[wasm_bindgen]
pub fn hardy(beta: f64, members: usize, bisect: bool) -> Result<String, JsError> {
    to_js(compute_hardy(beta, members, bisect))
}
