//! Consequences of criticality: the Poincaré-type bound, convex
//! combinations of potentials and the Liouville comparison conditions.

use serde::{Deserialize, Serialize};

use crate::eigen::principal_eigenpair;
use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::qcore::{
    anorm, energy, relative_residual, residual_with_tol, same_mesh, MatrixField, PotentialField,
    PotentialSpec, ProblemSpec, Sym2,
};

use super::{perturbation_threshold, CriticalityOptions, SpecFamily, Verdict};

fn midpoint_product(u: &GridFunction, w: &GridFunction) -> f64 {
    let mesh = u.mesh();
    mesh.integrate_with(|e| mesh.mid_value(u.values(), e) * mesh.mid_value(w.values(), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// Smallest `C` for which `Q[u] + C |int u psi|^p >= (1/C) int W |u|^p`
    /// holds on the whole battery; infinite if some member admits none.
    pub constant: f64,
    /// Battery index attaining the constant.
    pub binding: Option<usize>,
    /// Per-member lower bound on `C` (`None` for skipped members).
    pub per_member: Vec<Option<f64>>,
    /// Members with both sides zero.
    pub skipped: Vec<usize>,
    pub phi_psi: f64,
}

/// Solves `b C^2 + a C - c >= 0` for the least admissible `C > 0`, with
/// `a = Q[u]`, `b = |int u psi|^p`, `c = int W |u|^p`.
pub fn poincare_constant(
    spec: &ProblemSpec,
    phi: &GridFunction,
    psi: &GridFunction,
    w: &PotentialField,
    battery: &[GridFunction],
) -> Result<PoincareReport> {
    let mesh = &spec.mesh;
    if !same_mesh(mesh, phi.mesh()) || !same_mesh(mesh, psi.mesh()) || w.len() != mesh.num_elements() {
        return Err(Error::MeshMismatch);
    }
    if w.min() <= 0.0 {
        return Err(Error::config("W must be positive"));
    }
    let phi_psi = midpoint_product(phi, psi);
    if phi_psi.abs() <= 1e-12 * phi.max_abs() * psi.max_abs() * mesh.total_measure() {
        return Err(Error::config("psi must not be orthogonal to the ground state"));
    }
    let p = spec.p;
    let mut per_member = Vec::with_capacity(battery.len());
    let mut skipped = Vec::new();
    let (mut constant, mut binding) = (0.0f64, None);
    for (j, u) in battery.iter().enumerate() {
        if !same_mesh(mesh, u.mesh()) {
            return Err(Error::MeshMismatch);
        }
        let a = energy(spec, u)?;
        let b = midpoint_product(u, psi).abs().powf(p);
        let c = mesh.integrate_with(|e| w.get(e) * mesh.mid_value(u.values(), e).abs().powf(p));
        if c == 0.0 && a == 0.0 && b == 0.0 {
            skipped.push(j);
            per_member.push(None);
            continue;
        }
        let bound = if b > 0.0 {
            // stable form of the positive root
            let disc = (a * a + 4.0 * b * c).sqrt();
            if a >= 0.0 {
                2.0 * c / (a + disc)
            } else {
                (disc - a) / (2.0 * b)
            }
        } else if a > 0.0 {
            c / a
        } else if c > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        per_member.push(Some(bound));
        if binding.is_none() || bound > constant {
            constant = bound;
            binding = Some(j);
        }
    }
    Ok(PoincareReport {
        constant,
        binding,
        per_member,
        skipped,
        phi_psi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexStep {
    pub t: f64,
    /// Largest `|Q_t[u] - (1-t) Q_0[u] - t Q_1[u]|` relative to the sizes
    /// of the terms, over the battery.
    pub identity_gap: f64,
    pub lambda1: f64,
    /// `lambda_1(V_t) >= (1-t) lambda_1(V_0) + t lambda_1(V_1)` up to tolerance.
    pub concave: bool,
    /// Perturbation threshold of the combined family, when probed.
    pub tau: Option<f64>,
    pub subcritical: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexCombinationReport {
    pub lambda0: f64,
    pub lambda1: f64,
    pub steps: Vec<ConvexStep>,
    pub identity_ok: bool,
    pub concave: bool,
}

/// Exhaustion data for the subcriticality part of
/// [`convex_combination_check`].
#[derive(Debug, Clone, Copy)]
pub struct ConvexProbe<'a> {
    pub family0: &'a SpecFamily,
    pub family1: &'a SpecFamily,
    pub u: &'a PotentialSpec,
    pub x0: [f64; 2],
}

/// Checks `Q_{V_t} = (1-t) Q_{V_0} + t Q_{V_1}` on the battery, the concavity
/// of `t -> lambda_1(V_t)`, and with `probe` the subcriticality of interior
/// combinations of distinct potentials.
pub fn convex_combination_check(
    spec0: &ProblemSpec,
    spec1: &ProblemSpec,
    t_grid: &[f64],
    battery: &[GridFunction],
    opts: &CriticalityOptions,
    probe: Option<ConvexProbe<'_>>,
) -> Result<ConvexCombinationReport> {
    if !same_mesh(&spec0.mesh, &spec1.mesh) || spec0.p != spec1.p {
        return Err(Error::config("both problems must share mesh and p"));
    }
    if spec0.a != spec1.a {
        return Err(Error::config("both problems must share the matrix field"));
    }
    let l0 = principal_eigenpair(spec0, &opts.eigen)?.lambda1;
    let l1 = principal_eigenpair(spec1, &opts.eigen)?.lambda1;
    let distinct = spec0
        .v
        .values()
        .iter()
        .zip(spec1.v.values())
        .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()));
    let mut steps = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::config(format!("t = {t} outside [0, 1]")));
        }
        let st = spec0.with_potential(spec0.v.combine(1.0 - t, &spec1.v, t)?)?;
        let mut gap: f64 = 0.0;
        for u in battery {
            let (q0, q1, qt) = (energy(spec0, u)?, energy(spec1, u)?, energy(&st, u)?);
            let scale = 1.0 + q0.abs() + q1.abs() + qt.abs();
            gap = gap.max((qt - (1.0 - t) * q0 - t * q1).abs() / scale);
        }
        let lt = principal_eigenpair(&st, &opts.eigen)?.lambda1;
        let chord = (1.0 - t) * l0 + t * l1;
        let concave = lt >= chord - 1e-7 * (1.0 + chord.abs());
        let (mut tau, mut subcritical) = (None, None);
        if let Some(pr) = probe {
            if distinct && t > 0.0 && t < 1.0 {
                let fam = pr.family0.convex(pr.family1, t)?;
                let th = perturbation_threshold(&fam, pr.u, pr.x0, opts)?;
                subcritical = Some(th.report.verdict == Verdict::Subcritical);
                tau = Some(th.tau);
            }
        }
        steps.push(ConvexStep {
            t,
            identity_gap: gap,
            lambda1: lt,
            concave,
            tau,
            subcritical,
        });
    }
    Ok(ConvexCombinationReport {
        lambda0: l0,
        lambda1: l1,
        identity_ok: steps.iter().all(|s| s.identity_gap <= 1e-10),
        concave: steps.iter().all(|s| s.concave),
        steps,
    })
}

fn smallest_eigenvalue(m: &Sym2, dim: usize) -> f64 {
    if dim == 1 {
        m.a11
    } else {
        m.eigenvalues().0
    }
}

/// Largest `mu` with `det(A0 - mu A1) = 0`.
fn generalized_max(a0: &Sym2, a1: &Sym2, dim: usize) -> f64 {
    if dim == 1 {
        return a0.a11 / a1.a11;
    }
    let qa = a1.a11 * a1.a22 - a1.a12 * a1.a12;
    let qb = a0.a11 * a1.a22 + a0.a22 * a1.a11 - 2.0 * a0.a12 * a1.a12;
    let qc = a0.a11 * a0.a22 - a0.a12 * a0.a12;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    (qb + disc) / (2.0 * qa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    /// Largest interior residual of `psi` for the first problem.
    pub max_subsolution_residual: f64,
    pub positive_part_nonzero: bool,
    /// (ii): `psi` is a subsolution with `psi^+ != 0`.
    pub subsolution: bool,
    /// Smallest eigenvalue of `(M phi)^2 A_1 - (psi^+)^2 A_0` over elements.
    pub min_matrix_eigenvalue: f64,
    /// (iii).
    pub matrix_condition: bool,
    /// Largest violation of (iv) over elements with `psi > 0`.
    pub max_gradient_excess: f64,
    /// (iv).
    pub gradient_condition: bool,
    /// Relative residual of `phi` for the second problem.
    pub phi_residual: f64,
    pub all_hold: bool,
    /// The theorem's conclusion when all conditions hold; recorded, not
    /// verified.
    pub implied_claim: Option<String>,
}

fn check_inputs(
    spec1: &ProblemSpec,
    a0: &MatrixField,
    phi: &GridFunction,
    psi: &GridFunction,
) -> Result<()> {
    let mesh = &spec1.mesh;
    if !same_mesh(mesh, phi.mesh()) || !same_mesh(mesh, psi.mesh()) || a0.len() != mesh.num_elements() {
        return Err(Error::MeshMismatch);
    }
    if let Some(i) = mesh
        .interior_nodes()
        .into_iter()
        .find(|&i| !(phi.value(i) > 0.0))
    {
        return Err(Error::domain(format!("phi is not positive at node {i}")));
    }
    Ok(())
}

/// Checks conditions (ii)-(iv) of the Liouville comparison theorem for
/// `Q_1 = Q_{A_1,p,V_1}` (from `spec1`), the ground state `phi` of `spec2`,
/// a candidate `psi`, the matrix `A_0` and constants `M`, `N`.
#[allow(clippy::too_many_arguments)]
pub fn liouville_conditions(
    spec1: &ProblemSpec,
    spec2: &ProblemSpec,
    a0: &MatrixField,
    phi: &GridFunction,
    psi: &GridFunction,
    m: f64,
    n: f64,
    tol: f64,
) -> Result<LiouvilleReport> {
    check_inputs(spec1, a0, phi, psi)?;
    if !same_mesh(&spec1.mesh, &spec2.mesh) || spec1.p != spec2.p {
        return Err(Error::MeshMismatch);
    }
    let mesh = &spec1.mesh;
    let p = spec1.p;
    let dim = mesh.dim();

    let (r, rtol) = residual_with_tol(spec1, psi, None)?;
    let max_subsolution_residual = r.max();
    let positive_part_nonzero = psi.values().iter().any(|&x| x > 0.0);
    let subsolution = positive_part_nonzero && max_subsolution_residual <= rtol.max(tol);

    let psi_plus: Vec<f64> = psi.values().iter().map(|&x| x.max(0.0)).collect();
    let (mut min_eig, mut max_excess) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut matrix_condition, mut gradient_condition) = (true, true);
    for e in 0..mesh.num_elements() {
        let a1 = spec1.a.get(e);
        let a0e = a0.get(e);
        let fm = m * mesh.mid_value(phi.values(), e);
        let sm = mesh.mid_value(&psi_plus, e);
        let d = a1.scaled(fm * fm).sub(&a0e.scaled(sm * sm));
        let lo = smallest_eigenvalue(&d, dim);
        min_eig = min_eig.min(lo);
        let scale = fm * fm * smallest_eigenvalue(a1, dim).abs().max(a1.a11.abs()) + sm * sm * a0e.a11.abs();
        if lo < -tol * (1.0 + scale) {
            matrix_condition = false;
        }
        if mesh.mid_value(psi.values(), e) > 0.0 && p != 2.0 {
            // x -> x^{p-2} is increasing for p > 2 and decreasing for p < 2
            let gs = anorm(mesh.grad_on(psi.values(), e), a0e);
            let gf = n * anorm(mesh.grad_on(phi.values(), e), a1);
            let excess = if p > 2.0 { gs - gf } else { gf - gs };
            max_excess = max_excess.max(excess);
            if excess > tol * (1.0 + gs.max(gf)) {
                gradient_condition = false;
            }
        }
    }
    if max_excess == f64::NEG_INFINITY {
        max_excess = 0.0;
    }
    let phi_residual = relative_residual(spec2, phi, None)?;
    let all_hold = subsolution && matrix_condition && gradient_condition;
    Ok(LiouvilleReport {
        max_subsolution_residual,
        positive_part_nonzero,
        subsolution,
        min_matrix_eigenvalue: min_eig,
        matrix_condition,
        max_gradient_excess: max_excess,
        gradient_condition,
        phi_residual,
        all_hold,
        implied_claim: all_hold
            .then(|| "Q_{A_1,p,V_1} is critical and psi is its ground state".to_string()),
    })
}

/// The extreme constants for conditions (iii) and (iv).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleConstants {
    /// (iii) holds iff `M >= m_min`.
    pub m_min: f64,
    /// (iv) holds iff `N >= n_bound` (`p > 2`) or `N <= n_bound` (`p < 2`);
    /// unconstrained for `p = 2`.
    pub n_bound: f64,
    pub n_is_lower_bound: bool,
}

pub fn liouville_constants(
    spec1: &ProblemSpec,
    a0: &MatrixField,
    phi: &GridFunction,
    psi: &GridFunction,
) -> Result<LiouvilleConstants> {
    check_inputs(spec1, a0, phi, psi)?;
    let mesh = &spec1.mesh;
    let p = spec1.p;
    let psi_plus: Vec<f64> = psi.values().iter().map(|&x| x.max(0.0)).collect();
    let mut m_min: f64 = 0.0;
    let mut n_bound = if p > 2.0 { 0.0 } else { f64::INFINITY };
    for e in 0..mesh.num_elements() {
        let a1 = spec1.a.get(e);
        let a0e = a0.get(e);
        let ratio = mesh.mid_value(&psi_plus, e) / mesh.mid_value(phi.values(), e);
        m_min = m_min.max(ratio * generalized_max(a0e, a1, mesh.dim()).sqrt());
        if mesh.mid_value(psi.values(), e) > 0.0 && p != 2.0 {
            let gs = anorm(mesh.grad_on(psi.values(), e), a0e);
            let gf = anorm(mesh.grad_on(phi.values(), e), a1);
            let r = if gf == 0.0 { f64::INFINITY } else { gs / gf };
            n_bound = if p > 2.0 { n_bound.max(r) } else { n_bound.min(r) };
        }
    }
    Ok(LiouvilleConstants {
        m_min,
        n_bound,
        n_is_lower_bound: p > 2.0,
    })
}
