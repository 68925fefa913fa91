//! Weak comparison principle check.

use serde::{Deserialize, Serialize};

use crate::eigen::{principal_eigenpair, EigenOptions};
use crate::error::Result;
use crate::mesh::GridFunction;
use crate::qcore::{residual_with_tol, PotentialField, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WcpStatus {
    Pass,
    Fail,
    /// A hypothesis of the comparison principle does not hold.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcpReport {
    pub status: WcpStatus,
    pub lambda1: f64,
    /// Which hypothesis failed, when inapplicable.
    pub reason: Option<String>,
    pub violating_nodes: Vec<usize>,
    pub max_excess: f64,
}

/// `lambda1 > 0`, `u2` solves `Q'[u2] = g`, `Q'[u1] <= Q'[u2]`,
/// `u1 <= u2` and `u2 > 0` on the boundary imply `u1 <= u2`.
pub fn wcp_check(
    spec: &ProblemSpec,
    u1: &GridFunction,
    u2: &GridFunction,
    g: &PotentialField,
) -> Result<WcpReport> {
    let lambda1 = principal_eigenpair(spec, &EigenOptions::default())?.lambda1;
    let inapplicable = |why: &str| WcpReport {
        status: WcpStatus::Inapplicable,
        lambda1,
        reason: Some(why.to_string()),
        violating_nodes: Vec::new(),
        max_excess: 0.0,
    };
    if !(lambda1 > 0.0) {
        return Ok(inapplicable("lambda1 <= 0"));
    }
    let (r2, t2) = residual_with_tol(spec, u2, Some(g))?;
    if r2.max_abs() > t2 {
        return Ok(inapplicable("u2 does not solve Q'[u2] = g"));
    }
    let (r1, t1) = residual_with_tol(spec, u1, Some(g))?;
    if r1.max() > t1 + t2 {
        return Ok(inapplicable("Q'[u1] exceeds Q'[u2]"));
    }
    let mesh = &spec.mesh;
    let tol = 1e-8 * (1.0 + u1.max_abs().max(u2.max_abs()));
    for i in mesh.boundary_nodes() {
        if u1.value(i) > u2.value(i) + tol {
            return Ok(inapplicable("u1 > u2 on the boundary"));
        }
        if !(u2.value(i) > 0.0) {
            return Ok(inapplicable("u2 is not positive on the boundary"));
        }
    }
    let mut violating = Vec::new();
    let mut excess: f64 = 0.0;
    for i in 0..mesh.num_nodes() {
        let d = u1.value(i) - u2.value(i);
        excess = excess.max(d);
        if d > tol {
            violating.push(i);
        }
    }
    Ok(WcpReport {
        status: if violating.is_empty() { WcpStatus::Pass } else { WcpStatus::Fail },
        lambda1,
        reason: None,
        violating_nodes: violating,
        max_excess: excess,
    })
}
