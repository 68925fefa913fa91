//! Sign checks and Harnack diagnostics built on the residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::GridFunction;

use super::fields::ProblemSpec;
use super::functional::residual_with_tol;

/// Outcome of the negative-part check: `v` a supersolution implies `v^-`
/// is a subsolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoReport {
    /// `v` is a supersolution up to tolerance.
    pub precondition_ok: bool,
    pub pass: bool,
    /// Largest interior residual entry of `v^-`.
    pub max_residual: f64,
    pub tol: f64,
    pub violating_nodes: Vec<usize>,
}

pub fn negative_part_subsolution_check(spec: &ProblemSpec, v: &GridFunction) -> Result<KatoReport> {
    let (r, tol_v) = residual_with_tol(spec, v, None)?;
    let precondition_ok = r.min() >= -tol_v;
    let neg = v.map(|x| (-x).max(0.0));
    let (rn, tol_n) = residual_with_tol(spec, &neg, None)?;
    let tol = tol_v.max(tol_n);
    let violating_nodes: Vec<usize> = rn
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > tol)
        .map(|(i, _)| i)
        .collect();
    Ok(KatoReport {
        precondition_ok,
        pass: precondition_ok && violating_nodes.is_empty(),
        max_residual: rn.max(),
        tol,
        violating_nodes,
    })
}

/// `sup_inner u / inf_inner u`; `u` must be positive on `outer`.
pub fn harnack_ratio(u: &GridFunction, inner: &[usize], outer: &[usize]) -> Result<f64> {
    if inner.is_empty() {
        return Err(Error::config("empty inner node set"));
    }
    for &i in outer.iter().chain(inner) {
        if i >= u.values().len() {
            return Err(Error::config(format!("node {i} outside the mesh")));
        }
        if !(u.value(i) > 0.0) {
            return Err(Error::domain(format!("u is not positive at node {i}")));
        }
    }
    let (lo, hi) = inner.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &i| {
        (lo.min(u.value(i)), hi.max(u.value(i)))
    });
    Ok(hi / lo)
}

/// Nodes whose distance to `center` lies in `[r_in, r_out]`.
pub fn nodes_in_shell(u: &GridFunction, center: [f64; 2], r_in: f64, r_out: f64) -> Vec<usize> {
    u.mesh()
        .coords()
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let d = ((c[0] - center[0]).powi(2) + (c[1] - center[1]).powi(2)).sqrt();
            d >= r_in && d <= r_out
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::qcore::PotentialField;
    use std::sync::Arc;

    #[test]
    fn harnack_examples() {
        let m = Arc::new(Mesh::interval(0.0, 3.0, 30, 1).unwrap());
        let c = GridFunction::from_fn(m.clone(), |_| 2.0).unwrap();
        let all: Vec<usize> = (0..m.num_nodes()).collect();
        assert_eq!(harnack_ratio(&c, &all, &all).unwrap(), 1.0);
        let x = GridFunction::from_fn(m.clone(), |x| x[0]).unwrap();
        let inner = nodes_in_shell(&x, [0.0, 0.0], 1.0 - 1e-12, 2.0 + 1e-12);
        assert!((harnack_ratio(&x, &inner, &inner).unwrap() - 2.0).abs() < 1e-12);
        assert!(harnack_ratio(&x, &inner, &all).is_err());
    }

    #[test]
    fn nonnegative_v_passes() {
        let m = Arc::new(Mesh::interval(0.0, 1.0, 20, 1).unwrap());
        let s = ProblemSpec::isotropic(2.0, m.clone(), PotentialField::zero(&m)).unwrap();
        let v = GridFunction::from_fn(m, |x| x[0] * (1.0 - x[0])).unwrap();
        let r = negative_part_subsolution_check(&s, &v).unwrap();
        assert!(r.precondition_ok && r.pass);
        assert_eq!(r.max_residual, 0.0);
    }
}
