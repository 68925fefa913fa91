//! The first-order field `T = -|grad log v|_A^{p-2} grad log v` of a
//! positive solution and the energy bound it certifies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::numeric::KahanSum;
use crate::qcore::{anorm, dot, energy, sign_tolerance, ProblemSpec};

/// Per-element field together with the residual of
/// `-div(A T) + (p-1)|T|_A^{p'} = V`.
#[derive(Debug, Clone)]
pub struct ApField {
    pub p: f64,
    pub t: Vec<[f64; 2]>,
    /// Weak residual against each interior hat divided by the hat's
    /// integral, so entries approximate the pointwise defect.
    pub residual: GridFunction,
    pub max_residual: f64,
}

impl ApField {
    /// The zero field on the mesh of `spec`.
    pub fn zero(spec: &ProblemSpec) -> Self {
        Self {
            p: spec.p,
            t: vec![[0.0; 2]; spec.mesh.num_elements()],
            residual: GridFunction::zeros(spec.mesh.clone()),
            max_residual: 0.0,
        }
    }
}

pub fn ap_field(spec: &ProblemSpec, v: &GridFunction) -> Result<ApField> {
    let mesh = &spec.mesh;
    mesh.check_len(v.values())?;
    if let Some(i) = v.values().iter().position(|&x| !(x > 0.0)) {
        return Err(Error::domain(format!("v is not positive at node {i}")));
    }
    let p = spec.p;
    let k = mesh.nodes_per_element() as f64;
    let mut t = Vec::with_capacity(mesh.num_elements());
    let mut r = vec![0.0; mesh.num_nodes()];
    let mut mass = vec![0.0; mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        let a = spec.a.get(e);
        let g = mesh.grad_on(v.values(), e);
        let m = mesh.mid_value(v.values(), e);
        let xi = [g[0] / m, g[1] / m];
        let s = anorm(xi, a);
        let c = if s == 0.0 { 0.0 } else { -s.powf(p - 2.0) };
        let te = [c * xi[0], c * xi[1]];
        // |T|_A^{p'} = |xi|_A^p
        let lower = (p - 1.0) * s.powf(p) - spec.v.get(e);
        let at = a.apply(te);
        let dx = mesh.dx(e);
        for (l, &n) in mesh.element(e).iter().enumerate() {
            let gp = mesh.basis_grads(e)[l];
            r[n] += (dot(at, gp) + lower / k) * dx;
            mass[n] += dx / k;
        }
        t.push(te);
    }
    let mut max_residual: f64 = 0.0;
    for i in 0..r.len() {
        if mesh.is_boundary(i) {
            r[i] = 0.0;
        } else {
            r[i] /= mass[i];
            max_residual = max_residual.max(r[i].abs());
        }
    }
    if t.iter().any(|x| !(x[0].is_finite() && x[1].is_finite())) {
        return Err(Error::NonFinite("AP field"));
    }
    Ok(ApField {
        p,
        t,
        residual: GridFunction::new(mesh.clone(), r)?,
        max_residual,
    })
}

/// Battery outcome of the bound
/// `int |grad u|_A^p >= -int A T . grad |u|^p - (p-1) int |T|_A^{p'} |u|^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApInequalityReport {
    pub trials: usize,
    pub passed: usize,
    /// Indices of battery members violating the bound.
    pub failures: Vec<usize>,
    /// Smallest `lhs - rhs` over the battery.
    pub min_gap: f64,
    /// Smallest `Q[u]` over the battery.
    pub min_energy: f64,
    /// `Q[u] >= -tol` for every member.
    pub energy_nonnegative: bool,
}

/// Checks the bound per battery member. `grad |u|^p` is discretized by the
/// chain rule at the element midpoint, which keeps Young's inequality exact
/// element by element.
pub fn ap_nonnegativity_from_field(
    spec: &ProblemSpec,
    field: &ApField,
    battery: &[GridFunction],
) -> Result<ApInequalityReport> {
    let mesh = &spec.mesh;
    if field.t.len() != mesh.num_elements() {
        return Err(Error::MeshMismatch);
    }
    let p = spec.p;
    let mut failures = Vec::new();
    let mut min_gap = f64::INFINITY;
    let mut min_energy = f64::INFINITY;
    let mut energy_nonnegative = true;
    for (j, u) in battery.iter().enumerate() {
        mesh.check_len(u.values())?;
        let (mut gap, mut scale) = (KahanSum::new(), 0.0);
        for e in 0..mesh.num_elements() {
            let a = spec.a.get(e);
            let te = field.t[e];
            let g = mesh.grad_on(u.values(), e);
            let m = mesh.mid_value(u.values(), e);
            let s = anorm(te, a);
            let lhs = anorm(g, a).powf(p);
            let cross = p * m.abs().powf(p - 1.0) * m.signum() * dot(a.apply(te), g);
            let tail = (p - 1.0) * s.powf(p / (p - 1.0)) * m.abs().powf(p);
            let dx = mesh.dx(e);
            gap.add((lhs + cross + tail) * dx);
            scale += (lhs + cross.abs() + tail) * dx;
        }
        let gap = gap.value();
        min_gap = min_gap.min(gap);
        if gap < -1e-12 * (1.0 + scale) {
            failures.push(j);
        }
        let q = energy(spec, u)?;
        min_energy = min_energy.min(q);
        let qscale = mesh.integrate_with(|e| {
            let m = mesh.mid_value(u.values(), e).abs().powf(p);
            anorm(mesh.grad_on(u.values(), e), spec.a.get(e)).powf(p) + spec.v.get(e).abs() * m
        });
        if q < -sign_tolerance(qscale) {
            energy_nonnegative = false;
        }
    }
    if battery.is_empty() {
        min_gap = 0.0;
        min_energy = 0.0;
    }
    Ok(ApInequalityReport {
        trials: battery.len(),
        passed: battery.len() - failures.len(),
        failures,
        min_gap,
        min_energy,
        energy_nonnegative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::qcore::PotentialField;
    use std::sync::Arc;

    fn closure_error(n: usize, v_const: f64, f: fn(f64) -> f64) -> f64 {
        let mesh = Arc::new(Mesh::interval(-1.0, 1.0, n, 1).unwrap());
        let v = PotentialField::constant(&mesh, v_const);
        let spec = ProblemSpec::isotropic(2.0, mesh.clone(), v).unwrap();
        let u = GridFunction::from_fn(mesh, |x| f(x[0])).unwrap();
        ap_field(&spec, &u).unwrap().max_residual
    }

    #[test]
    fn constant_solution_has_zero_field() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 16, 1).unwrap());
        let spec = ProblemSpec::isotropic(3.0, mesh.clone(), PotentialField::zero(&mesh)).unwrap();
        let one = GridFunction::from_fn(mesh, |_| 1.0).unwrap();
        let f = ap_field(&spec, &one).unwrap();
        assert!(f.t.iter().all(|t| *t == [0.0, 0.0]));
        assert_eq!(f.max_residual, 0.0);
    }

    #[test]
    fn cosine_and_cosh_close_the_riccati_equation() {
        let cos = closure_error(512, -1.0, f64::cos);
        let cosh = closure_error(512, 1.0, f64::cosh);
        assert!(cos <= 1e-3, "{cos}");
        assert!(cosh <= 1e-3, "{cosh}");
        let coarse = closure_error(256, -1.0, f64::cos);
        assert!(coarse / cos >= 2.0, "{coarse} vs {cos}");
    }

    #[test]
    fn zero_field_reduces_to_gradient_energy() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 32, 1).unwrap());
        let spec = ProblemSpec::isotropic(2.5, mesh.clone(), PotentialField::zero(&mesh)).unwrap();
        let battery = crate::battery::test_functions(&mesh, 10, 3);
        let rep = ap_nonnegativity_from_field(&spec, &ApField::zero(&spec), &battery).unwrap();
        assert_eq!(rep.passed, 10);
        assert!(rep.min_gap >= 0.0);
        let zero = vec![GridFunction::zeros(mesh)];
        let rep = ap_nonnegativity_from_field(&spec, &ApField::zero(&spec), &zero).unwrap();
        assert_eq!(rep.min_gap, 0.0);
    }
}
