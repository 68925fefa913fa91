//! One function per subcommand; each returns the numeric results and the
//! fields to write as CSV.

use qcrit::criticality::{criticality_probe, generalized_principal_eigenvalue, Verdict};
use qcrit::eigen::principal_eigenpair;
use qcrit::green::{green_function, GreenVerdict};
use qcrit::mesh::GridFunction;
use qcrit::morrey::{calibrate_morrey_adams, morrey_norm, BallSampling, MorreyParams};
use qcrit::qcore::{relative_residual, PotentialField};
use qcrit::solver::{constant_supersolution, monotone_iteration, solve_dirichlet};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug)]
pub struct Outcome {
    pub results: Value,
    /// `(name, field)` pairs written as `<command>_<name>.csv`.
    pub fields: Vec<(String, GridFunction)>,
    /// Set when the run finished without a definite answer.
    pub unresolved: Option<String>,
}

impl Outcome {
    fn new(results: Value) -> Self {
        Self {
            results,
            fields: Vec::new(),
            unresolved: None,
        }
    }

    fn field(mut self, name: &str, u: GridFunction) -> Self {
        self.fields.push((name.into(), u));
        self
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn missing(section: &str) -> CliError {
    CliError::InvalidConfig(format!("this command needs a [{section}] section"))
}

fn constant_boundary(cfg: &RunConfig, mesh: &std::sync::Arc<qcrit::Mesh>) -> CliResult<GridFunction> {
    let f = cfg.load.as_ref().map_or(0.0, |l| l.boundary);
    Ok(GridFunction::from_fn(mesh.clone(), |_| f)?)
}

fn load_field(cfg: &RunConfig, mesh: &qcrit::Mesh) -> CliResult<Option<PotentialField>> {
    match &cfg.load {
        Some(l) => Ok(Some(PotentialField::from_spec(&l.g, mesh, cfg.problem.p)?)),
        None => Ok(None),
    }
}

fn anchors(cfg: &RunConfig) -> Vec<[f64; 2]> {
    cfg.criticality.iter().map(|c| c.x0).collect()
}

pub fn eigen(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = cfg.spec()?;
    let r = principal_eigenpair(&spec, &cfg.eigen)?;
    let mut results = json!({
        "lambda1": r.lambda1,
        "iterations": r.iterations,
        "residual": r.residual,
        "rayleigh_residual": r.rayleigh_residual,
        "sigma": r.sigma,
        "nodes": spec.mesh.num_nodes(),
    });
    if cfg.exhaustion.is_some() {
        let family = cfg.family(anchors(cfg))?;
        let tol = cfg.criticality.as_ref().map_or(1e-8, |c| c.options.tol_lambda);
        results["exhaustion"] = to_value(&generalized_principal_eigenvalue(&family, tol, &cfg.eigen));
    }
    Ok(Outcome::new(results).field("eigenfunction", r.v1))
}

pub fn solve(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = cfg.spec()?;
    let g = load_field(cfg, &spec.mesh)?;
    let f = constant_boundary(cfg, &spec.mesh)?;
    let s = solve_dirichlet(&spec, g.as_ref(), &f, &cfg.solver)?;
    let results = json!({
        "iterations": s.iterations,
        "rel_grad": s.rel_grad,
        "energy": s.energy,
        "min": s.u.min(),
        "max": s.u.max(),
        "relative_residual": relative_residual(&spec, &s.u, g.as_ref())?,
        "energy_monotone": s.trace.monotone.iter().all(|&b| b),
    });
    Ok(Outcome::new(results).field("solution", s.u))
}

pub fn iterate(cfg: &RunConfig) -> CliResult<Outcome> {
    let it = cfg.iterate.as_ref().ok_or_else(|| missing("iterate"))?;
    let spec = cfg.spec()?;
    let g = load_field(cfg, &spec.mesh)?.ok_or_else(|| missing("load"))?;
    let f = constant_boundary(cfg, &spec.mesh)?;
    let psi = GridFunction::zeros(spec.mesh.clone());
    let phi = match it.supersolution {
        Some(c) => GridFunction::from_fn(spec.mesh.clone(), |_| c)?,
        None => constant_supersolution(&spec, &g)?,
    };
    let r = monotone_iteration(&spec, &g, &f, &psi, &phi, &cfg.solver, &it.options)?;
    let results = json!({
        "supersolution": phi.max(),
        "lower_steps": r.lower_trace.sup_change.len(),
        "upper_steps": r.upper_trace.sup_change.len(),
        "lower_trace": to_value(&r.lower_trace),
        "upper_trace": to_value(&r.upper_trace),
        "monotone": r.lower_trace.monotone.iter().chain(&r.upper_trace.monotone).all(|&b| b),
        "gap": r.lower.sup_distance(&r.upper),
    });
    Ok(Outcome::new(results).field("lower", r.lower).field("upper", r.upper))
}

pub fn criticality(cfg: &RunConfig) -> CliResult<Outcome> {
    let c = cfg.criticality.as_ref().ok_or_else(|| missing("criticality"))?;
    let family = cfg.family(vec![c.x0])?;
    let report = criticality_probe(&family, &c.weight, c.x0, &c.options)?;
    let mut out = Outcome::new(to_value(&report));
    if report.verdict == Verdict::Inconclusive {
        out.unresolved = Some(report.note.clone().unwrap_or_else(|| "inconclusive verdict".into()));
    }
    if let Some(gs) = report.ground_state {
        out = out.field("ground_state", gs);
    } else if let Some(last) = report.null_sequence.last() {
        out = out.field("null_sequence_last", last.clone());
    }
    Ok(out)
}

/// Verdict from the sign of `lambda1` on a single bounded domain.
fn verdict_from_lambda(lambda1: f64, tol: f64) -> Verdict {
    if lambda1 > tol {
        Verdict::Subcritical
    } else if lambda1 >= -tol {
        Verdict::Critical
    } else {
        Verdict::SupercriticalEvidence
    }
}

pub fn green(cfg: &RunConfig) -> CliResult<Outcome> {
    let gc = cfg.green.as_ref().ok_or_else(|| missing("green"))?;
    let opts = cfg.green_options()?;
    let (domains, cross) = if cfg.exhaustion.is_some() {
        let family = cfg.family(vec![gc.pole])?;
        let cross = match (&cfg.criticality, gc.cross_check) {
            (Some(c), true) => {
                let rep = criticality_probe(&family, &c.weight, c.x0, &c.options)?;
                Some((rep.verdict, json!({ "source": "criticality_probe", "verdict": rep.verdict, "t_limit": rep.t_limit })))
            }
            _ => None,
        };
        (family.members, cross)
    } else {
        let spec = cfg.spec()?;
        let cross = if gc.cross_check {
            let l = principal_eigenpair(&spec, &cfg.eigen)?.lambda1;
            let v = verdict_from_lambda(l, 1e-8 * (1.0 + l.abs()));
            Some((v, json!({ "source": "lambda1", "verdict": v, "lambda1": l })))
        } else {
            None
        };
        (vec![spec], cross)
    };
    let r = green_function(&domains, gc.pole, &opts, cross.as_ref().map(|c| c.0))?;
    let mut results = to_value(&r);
    results["cross_check"] = cross.map_or(Value::Null, |c| c.1);
    let mut out = Outcome::new(results);
    if r.verdict == GreenVerdict::Inconclusive {
        out.unresolved = Some(r.note.clone());
    }
    Ok(out.field("green", r.g))
}

pub fn morrey(cfg: &RunConfig) -> CliResult<Outcome> {
    let mc = cfg.morrey.as_ref().ok_or_else(|| missing("morrey"))?;
    let spec = cfg.spec()?;
    let params = MorreyParams::new(spec.p, spec.mesh.ambient_n(), mc.q)?;
    let sampling = BallSampling::strided(&spec.mesh, mc.k_max, mc.stride)?;
    let norm = morrey_norm(&spec.v, &spec.mesh, &params, &sampling)?;
    let mut results = json!({
        "params": to_value(&params),
        "norm": to_value(&norm),
        "delta_exponent": params.delta_exponent(),
        "norm_exponent": params.norm_exponent(),
    });
    if mc.battery > 0 {
        let cal = calibrate_morrey_adams(&spec.mesh, &params, mc.battery, cfg.seed)?;
        results["morrey_adams"] = to_value(&cal);
    }
    Ok(Outcome::new(results))
}
