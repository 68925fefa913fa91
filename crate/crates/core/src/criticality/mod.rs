//! Global positivity on exhaustions: the generalized principal eigenvalue,
//! the null-sequence construction with its ground state, AP fields and the
//! comparison checks that build on them.

mod ap;
mod comparison;

use serde::{Deserialize, Serialize};

use crate::eigen::{principal_eigenpair_from, EigenOptions, EigenResult};
use crate::error::{Error, Result};
use crate::mesh::{ExhaustionSchedule, GridFunction};
use crate::numeric::{aitken_iterated, aitken_limit};
use crate::par;
use crate::qcore::{energy, harnack_ratio, same_mesh, MatrixSpec, PotentialField, PotentialSpec, ProblemSpec};

pub use ap::{ap_field, ap_nonnegativity_from_field, ApField, ApInequalityReport};
pub use comparison::{
    convex_combination_check, liouville_conditions, liouville_constants, poincare_constant,
    ConvexCombinationReport, ConvexProbe, ConvexStep, LiouvilleConstants, LiouvilleReport, PoincareReport,
};

/// One problem per member of an exhaustion, sharing `p`.
#[derive(Debug, Clone)]
pub struct SpecFamily {
    pub schedule: ExhaustionSchedule,
    pub members: Vec<ProblemSpec>,
}

impl SpecFamily {
    pub fn new(schedule: ExhaustionSchedule, members: Vec<ProblemSpec>) -> Result<Self> {
        if members.len() != schedule.len() || members.is_empty() {
            return Err(Error::config("one problem per exhaustion member is required"));
        }
        for (m, s) in schedule.members.iter().zip(&members) {
            if !std::sync::Arc::ptr_eq(&m.mesh, &s.mesh) {
                return Err(Error::MeshMismatch);
            }
        }
        if members.iter().any(|s| s.p != members[0].p) {
            return Err(Error::config("members must share the exponent p"));
        }
        Ok(Self { schedule, members })
    }

    /// Evaluates catalog entries on every member mesh.
    pub fn from_catalog(
        schedule: ExhaustionSchedule,
        p: f64,
        a: &MatrixSpec,
        v: &PotentialSpec,
    ) -> Result<Self> {
        let members = schedule
            .members
            .iter()
            .map(|m| ProblemSpec::from_catalog(p, m.mesh.clone(), a, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(schedule, members)
    }

    pub fn p(&self) -> f64 {
        self.members[0].p
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn last(&self) -> &ProblemSpec {
        self.members.last().unwrap()
    }

    /// A catalog potential evaluated on every member.
    pub fn potential_on(&self, u: &PotentialSpec) -> Result<Vec<PotentialField>> {
        self.members
            .iter()
            .map(|s| PotentialField::from_spec(u, &s.mesh, s.p))
            .collect()
    }

    /// The family with `V - t U`.
    pub fn perturbed(&self, u: &[PotentialField], t: f64) -> Result<Self> {
        if u.len() != self.len() {
            return Err(Error::config("one perturbation per member is required"));
        }
        let members = self
            .members
            .iter()
            .zip(u)
            .map(|(s, u)| s.with_potential(s.v.combine(1.0, u, -t)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.schedule.clone(), members)
    }

    /// The family with `(1 - t) V_0 + t V_1`; both families share meshes and `A`.
    pub fn convex(&self, other: &SpecFamily, t: f64) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::config("families differ in length"));
        }
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(s0, s1)| {
                if !same_mesh(&s0.mesh, &s1.mesh) {
                    return Err(Error::MeshMismatch);
                }
                s0.with_potential(s0.v.combine(1.0 - t, &s1.v, t)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.schedule.clone(), members)
    }

    /// Member-`to` indices of the interior nodes of member `from`.
    fn embedded_interior(&self, from: usize, to: usize) -> Vec<usize> {
        self.embed(self.schedule.members[from].mesh.interior_nodes(), from, to)
    }

    fn embed(&self, mut idx: Vec<usize>, from: usize, to: usize) -> Vec<usize> {
        for k in from..to {
            let map = self.schedule.members[k].to_next.as_ref().unwrap();
            idx.iter_mut().for_each(|i| *i = map[*i]);
        }
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Subcritical,
    Critical,
    SupercriticalEvidence,
    Inconclusive,
}

/// Principal eigenvalues along an exhaustion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSequence {
    /// `lambda_1(omega_i)` for the members solved before any failure.
    pub lambda_sequence: Vec<f64>,
    pub limit: Option<f64>,
    /// Non-increasing up to `tol`.
    pub monotone: bool,
    pub nonnegative: bool,
    pub tol: f64,
    /// Set when some member failed; the sequence is then partial.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalityOptions {
    /// Eigenvalues below `-tol_lambda` count as supercritical evidence.
    pub tol_lambda: f64,
    /// Root tolerance for `t_i`; the root is polished until
    /// `|lambda_1(V - t_i U)| <= 1e-3 tol_bisect`.
    pub tol_bisect: f64,
    /// Critical iff the extrapolated `t_inf <= tol_t`.
    pub tol_t: f64,
    pub max_root_iter: usize,
    pub eigen: EigenOptions,
}

impl Default for CriticalityOptions {
    fn default() -> Self {
        Self {
            tol_lambda: 1e-8,
            tol_bisect: 1e-8,
            tol_t: 1e-7,
            max_root_iter: 200,
            eigen: EigenOptions::default(),
        }
    }
}

fn member_eigen(
    specs: &[ProblemSpec],
    opts: &EigenOptions,
) -> Vec<Result<EigenResult>> {
    par::map(specs.iter().collect(), |s| principal_eigenpair_from(s, None, opts))
}

fn summarize(results: &[Result<EigenResult>], tol: f64) -> EigenvalueSequence {
    let mut lambda_sequence = Vec::new();
    let mut failure = None;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(e) => lambda_sequence.push(e.lambda1),
            Err(err) => {
                failure = Some(format!("member {i}: {err}"));
                break;
            }
        }
    }
    let monotone = lambda_sequence
        .windows(2)
        .all(|w| w[1] <= w[0] + tol * (1.0 + w[0].abs()));
    let limit = aitken_limit(&lambda_sequence);
    let nonnegative = failure.is_none()
        && lambda_sequence.iter().all(|&l| l >= -tol)
        && limit.is_some_and(|l| l >= -tol);
    EigenvalueSequence {
        lambda_sequence,
        limit,
        monotone,
        nonnegative,
        tol,
        failure,
    }
}

/// `lambda_1(omega_i)` for every member, with an extrapolated limit.
pub fn generalized_principal_eigenvalue(
    family: &SpecFamily,
    tol: f64,
    opts: &EigenOptions,
) -> EigenvalueSequence {
    summarize(&member_eigen(&family.members, opts), tol)
}

/// Per-level data of the null sequence `phi_i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NullSequenceDiagnostics {
    /// `Q_{A,p,V}[phi_i]`.
    pub energy: Vec<f64>,
    /// `t_i * int U phi_i^p`.
    pub perturbation: Vec<f64>,
    /// `|Q[phi_i] - t_i int U phi_i^p|`.
    pub identity_gap: Vec<f64>,
    /// `lambda_1(V - t_i U; omega_i)` at the reported root.
    pub lambda_at_root: Vec<f64>,
    /// `sup / inf` of `phi_i` over the interior nodes of `omega_1`.
    pub harnack: Vec<f64>,
    /// Eigensolves spent on each root.
    pub root_evaluations: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub verdict: Verdict,
    pub tol_t: f64,
    pub lambda_sequence: Vec<f64>,
    pub t_sequence: Vec<f64>,
    pub t_limit: Option<f64>,
    pub strictly_decreasing: bool,
    pub diagnostics: NullSequenceDiagnostics,
    /// Why the verdict is inconclusive or supercritical.
    pub note: Option<String>,
    /// `phi_i` normalized at `x_0`, one per solved member.
    #[serde(skip)]
    pub null_sequence: Vec<GridFunction>,
    /// The last `phi_i` when the verdict is critical.
    #[serde(skip)]
    pub ground_state: Option<GridFunction>,
}

impl CriticalityReport {
    fn stop(verdict: Verdict, tol_t: f64, lambda_sequence: Vec<f64>, note: String) -> Self {
        Self {
            verdict,
            tol_t,
            lambda_sequence,
            t_sequence: Vec::new(),
            t_limit: None,
            strictly_decreasing: false,
            diagnostics: NullSequenceDiagnostics::default(),
            note: Some(note),
            null_sequence: Vec::new(),
            ground_state: None,
        }
    }
}

/// `int U |v|^p` with the midpoint rule used by the energy.
fn weighted_mass(u: &PotentialField, v: &GridFunction, p: f64) -> f64 {
    let mesh = v.mesh();
    mesh.integrate_with(|e| u.get(e) * mesh.mid_value(v.values(), e).abs().powf(p))
}

struct Root {
    t: f64,
    eig: EigenResult,
    evaluations: usize,
}

/// Smallest `t >= 0` with `lambda_1(V - t U) = 0`. The map `t -> lambda_1`
/// is concave and decreasing with slope `-int U v^p`, so Newton from the
/// left overshoots once and then descends monotonically; bisection on the
/// maintained bracket catches anything else.
fn member_root(
    spec: &ProblemSpec,
    u: &PotentialField,
    start: EigenResult,
    opts: &CriticalityOptions,
) -> Result<Root> {
    let target = 1e-3 * opts.tol_bisect;
    if start.lambda1 <= opts.tol_lambda {
        return Ok(Root {
            t: 0.0,
            eig: start,
            evaluations: 1,
        });
    }
    let eval = |t: f64, init: &GridFunction| -> Result<EigenResult> {
        let s = spec.with_potential(spec.v.combine(1.0, u, -t)?)?;
        principal_eigenpair_from(&s, Some(init), &opts.eigen)
    };
    let (mut lo, mut hi): (f64, Option<f64>) = (0.0, None);
    let mut t = 0.0;
    let mut cur = start;
    let mut evaluations = 1;
    for _ in 0..opts.max_root_iter {
        if cur.lambda1.abs() <= target {
            break;
        }
        if cur.lambda1 > 0.0 {
            lo = t;
        } else {
            hi = Some(t);
        }
        if let Some(h) = hi {
            if h - lo <= 1e-3 * opts.tol_bisect * (1.0 + h) {
                break;
            }
        }
        // v1 has unit L^p norm
        let slope = -weighted_mass(u, &cur.v1, spec.p);
        let newton = t - cur.lambda1 / slope;
        let inside = slope < 0.0 && newton > lo && hi.is_none_or(|h| newton < h);
        let next = if inside {
            newton
        } else if let Some(h) = hi {
            0.5 * (lo + h)
        } else {
            2.0 * t.max(1.0)
        };
        cur = eval(next, &cur.v1)?;
        t = next;
        evaluations += 1;
    }
    if cur.lambda1.abs() > opts.tol_bisect {
        return Err(Error::NonConvergence {
            iterations: evaluations,
            rel_grad: cur.lambda1.abs(),
            trace: Box::default(),
        });
    }
    Ok(Root {
        t,
        eig: cur,
        evaluations,
    })
}

fn check_weight(family: &SpecFamily, u: &[PotentialField]) -> Result<()> {
    if u.iter().flat_map(|f| f.values()).any(|&x| x < 0.0) {
        return Err(Error::config("U must be nonnegative"));
    }
    let first = family.members[0].mesh.integrate(u[0].values())?;
    let last = family.last().mesh.integrate(u.last().unwrap().values())?;
    if !(first > 0.0) {
        return Err(Error::config("U must not vanish on the first member"));
    }
    let k = family.len() - 1;
    let mut inner = vec![false; family.last().mesh.num_nodes()];
    let all: Vec<usize> = (0..family.members[0].mesh.num_nodes()).collect();
    for i in family.embed(all, 0, k) {
        inner[i] = true;
    }
    let mesh = &family.last().mesh;
    let outside = (0..mesh.num_elements())
        .any(|e| u[k].get(e) != 0.0 && mesh.element(e).iter().any(|&n| !inner[n]));
    if outside || (last - first).abs() > 1e-10 * last.abs() {
        return Err(Error::config("U must be supported inside the first member"));
    }
    Ok(())
}

/// Builds the null sequence: for each member the threshold `t_i` with
/// `lambda_1(V - t_i U; omega_i) = 0`, its eigenfunction `phi_i` with
/// `phi_i(x_0) = 1`, and the verdict from the extrapolated `t_inf`.
pub fn criticality_probe(
    family: &SpecFamily,
    u: &PotentialSpec,
    x0: [f64; 2],
    opts: &CriticalityOptions,
) -> Result<CriticalityReport> {
    let weights = family.potential_on(u)?;
    check_weight(family, &weights)?;
    let x0_nodes: Vec<usize> = family
        .members
        .iter()
        .map(|s| s.mesh.nearest_node(x0).0)
        .collect();
    if x0_nodes
        .iter()
        .zip(&family.members)
        .any(|(&n, s)| s.mesh.is_boundary(n))
    {
        return Err(Error::config("x_0 must be an interior node of every member"));
    }

    let eig = member_eigen(&family.members, &opts.eigen);
    let seq = summarize(&eig, opts.tol_lambda);
    if let Some(f) = seq.failure {
        return Ok(CriticalityReport::stop(
            Verdict::Inconclusive,
            opts.tol_t,
            seq.lambda_sequence,
            f,
        ));
    }
    if let Some(i) = seq.lambda_sequence.iter().position(|&l| l < -opts.tol_lambda) {
        let note = format!(
            "lambda_1 = {:.6e} < 0 on member {i}",
            seq.lambda_sequence[i]
        );
        return Ok(CriticalityReport::stop(
            Verdict::SupercriticalEvidence,
            opts.tol_t,
            seq.lambda_sequence,
            note,
        ));
    }

    if !seq.nonnegative {
        let note = format!(
            "every member is positive but the extrapolated limit {:?} is negative",
            seq.limit
        );
        return Ok(CriticalityReport::stop(
            Verdict::Inconclusive,
            opts.tol_t,
            seq.lambda_sequence,
            note,
        ));
    }

    let jobs: Vec<(usize, EigenResult)> = eig.into_iter().map(|r| r.unwrap()).enumerate().collect();
    let roots = par::map(jobs, |(i, e)| {
        member_root(&family.members[i], &weights[i], e, opts)
    });

    let mut t_sequence = Vec::new();
    let mut diag = NullSequenceDiagnostics::default();
    let mut null_sequence = Vec::new();
    for (i, root) in roots.into_iter().enumerate() {
        let root = match root {
            Ok(r) => r,
            Err(err) => {
                let mut rep = CriticalityReport::stop(
                    Verdict::Inconclusive,
                    opts.tol_t,
                    seq.lambda_sequence,
                    format!("threshold search failed on member {i}: {err}"),
                );
                rep.t_sequence = t_sequence;
                rep.diagnostics = diag;
                return Ok(rep);
            }
        };
        let spec = &family.members[i];
        let v = &root.eig.v1;
        let phi = v.scaled(1.0 / v.value(x0_nodes[i]));
        let q = energy(spec, &phi)?;
        let pert = root.t * weighted_mass(&weights[i], &phi, spec.p);
        let inner = family.embedded_interior(0, i);
        diag.energy.push(q);
        diag.perturbation.push(pert);
        diag.identity_gap.push((q - pert).abs());
        diag.lambda_at_root.push(root.eig.lambda1);
        diag.harnack.push(harnack_ratio(&phi, &inner, &inner)?);
        diag.root_evaluations.push(root.evaluations);
        t_sequence.push(root.t);
        null_sequence.push(phi);
    }

    let strictly_decreasing = t_sequence.windows(2).all(|w| w[1] < w[0]);
    let broken = t_sequence
        .windows(2)
        .position(|w| w[1] > w[0] + opts.tol_bisect);
    let t_limit = aitken_iterated(&t_sequence).map(|t| t.max(0.0));
    let (verdict, note) = if let Some(i) = broken {
        (
            Verdict::Inconclusive,
            Some(format!(
                "t_i increases between members {i} and {}: discretization trouble",
                i + 1
            )),
        )
    } else if t_limit.is_some_and(|t| t <= opts.tol_t) {
        (Verdict::Critical, None)
    } else {
        (Verdict::Subcritical, None)
    };
    let ground_state = (verdict == Verdict::Critical).then(|| null_sequence.last().unwrap().clone());
    Ok(CriticalityReport {
        verdict,
        tol_t: opts.tol_t,
        lambda_sequence: seq.lambda_sequence,
        t_sequence,
        t_limit,
        strictly_decreasing,
        diagnostics: diag,
        note,
        null_sequence,
        ground_state,
    })
}

/// How far `V` can be lowered in the direction `-U` before positivity is
/// lost in the exhaustion limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationThreshold {
    pub tau: f64,
    pub report: CriticalityReport,
}

pub fn perturbation_threshold(
    family: &SpecFamily,
    u: &PotentialSpec,
    x0: [f64; 2],
    opts: &CriticalityOptions,
) -> Result<PerturbationThreshold> {
    let report = criticality_probe(family, u, x0, opts)?;
    let tau = match report.verdict {
        Verdict::Critical | Verdict::Subcritical => report.t_limit.unwrap_or(0.0),
        Verdict::SupercriticalEvidence => 0.0,
        Verdict::Inconclusive => {
            return Err(Error::domain(
                report
                    .note
                    .clone()
                    .unwrap_or_else(|| "inconclusive probe".into()),
            ))
        }
    };
    Ok(PerturbationThreshold { tau, report })
}

/// Bisection for the coupling at which positivity on the exhaustion is lost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingThreshold {
    /// Largest coupling seen with a nonnegative sequence.
    pub lo: f64,
    /// Smallest coupling seen with supercritical evidence.
    pub hi: f64,
    /// False when `hi` showed no supercritical evidence; `lo`/`hi` are then
    /// the untouched inputs.
    pub bracketed: bool,
    pub estimate: Option<f64>,
    /// `(coupling, no member negative)` for every evaluation.
    pub evaluations: Vec<(f64, bool)>,
}

/// Bisects the coupling `beta` of `family_at(beta)` on the appearance of a
/// member with `lambda_1 < -tol_lambda`, the evidence used by
/// [`criticality_probe`].
pub fn coupling_threshold(
    family_at: impl Fn(f64) -> Result<SpecFamily>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    opts: &CriticalityOptions,
) -> Result<CouplingThreshold> {
    if !(lo < hi) {
        return Err(Error::config("coupling bracket must satisfy lo < hi"));
    }
    let nonneg = |b: f64| -> Result<bool> {
        let f = family_at(b)?;
        let s = generalized_principal_eigenvalue(&f, opts.tol_lambda, &opts.eigen);
        if let Some(e) = s.failure {
            return Err(Error::domain(e));
        }
        Ok(s.lambda_sequence.iter().all(|&l| l >= -opts.tol_lambda))
    };
    let mut evaluations = Vec::new();
    let at_lo = nonneg(lo)?;
    evaluations.push((lo, at_lo));
    let at_hi = nonneg(hi)?;
    evaluations.push((hi, at_hi));
    if !at_lo || at_hi {
        return Ok(CouplingThreshold {
            lo,
            hi,
            bracketed: false,
            estimate: None,
            evaluations,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let ok = nonneg(mid)?;
        evaluations.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CouplingThreshold {
        lo,
        hi,
        bracketed: true,
        estimate: Some(0.5 * (lo + hi)),
        evaluations,
    })
}
