//! Dirichlet problems by energy minimization, the monotone iteration
//! between a sub- and a supersolution, and the weak comparison check.

mod minimize;
mod monotone;
mod objective;

pub(crate) use minimize::Layout;
pub(crate) use objective::Objective;
mod wcp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, Mesh};
use crate::qcore::{PotentialField, ProblemSpec};

pub use minimize::minimize;
pub use monotone::{constant_supersolution, monotone_iteration, MonotoneOptions, MonotoneResult, MonotoneTrace};
pub use wcp::{wcp_check, WcpReport, WcpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Damped modified Newton: banded Cholesky of a positive definite model
    /// Hessian, Armijo backtracking on the true energy.
    #[default]
    Newton,
    /// Gradient descent with Barzilai-Borwein steps and backtracking.
    BarzilaiBorwein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearch {
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Bound on the relative energy gradient.
    pub tol_grad: f64,
    /// Relative nodal change below which a stalled iteration may stop.
    pub tol_change: f64,
    pub max_iter: usize,
    /// Smallest regularization on the `eps` ladder (only for `p < 2`).
    pub eps_regularization: f64,
    pub continuation: bool,
    pub line_search: LineSearch,
    pub method: Method,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_grad: 1e-10,
            tol_change: 1e-14,
            max_iter: 10_000,
            eps_regularization: 1e-8,
            continuation: true,
            line_search: LineSearch::default(),
            method: Method::Newton,
            record_trace: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0) {
            return Err(Error::config("tol_grad must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be positive"));
        }
        if !(self.eps_regularization >= 0.0) {
            return Err(Error::config("eps_regularization must be nonnegative"));
        }
        let ls = &self.line_search;
        if !(ls.armijo > 0.0 && ls.armijo < 1.0 && ls.shrink > 0.0 && ls.shrink < 1.0) {
            return Err(Error::config("line search parameters must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Per-iterate record of a minimization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub energy: Vec<f64>,
    /// Relative gradient norm.
    pub grad_norm: Vec<f64>,
    /// Sup-norm of the accepted step.
    pub change: Vec<f64>,
    /// Energy did not increase from the previous iterate of the same
    /// regularized functional.
    pub monotone: Vec<bool>,
}

/// Nodes with prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub fixed: Vec<bool>,
    pub values: Vec<f64>,
}

impl Constraints {
    /// Boundary nodes fixed to the values of `f` there.
    pub fn dirichlet(mesh: &Mesh, f: &[f64]) -> Result<Self> {
        mesh.check_len(f)?;
        let fixed = mesh.boundary_flags().to_vec();
        let values = f
            .iter()
            .zip(&fixed)
            .map(|(&v, &b)| if b { v } else { 0.0 })
            .collect();
        Ok(Self { fixed, values })
    }

    /// Zero boundary values.
    pub fn homogeneous(mesh: &Mesh) -> Self {
        Self {
            fixed: mesh.boundary_flags().to_vec(),
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    pub fn pin(&mut self, node: usize, value: f64) {
        self.fixed[node] = true;
        self.values[node] = value;
    }

    pub fn num_free(&self) -> usize {
        self.fixed.iter().filter(|&&b| !b).count()
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    pub iterations: usize,
    pub rel_grad: f64,
    /// Final value of `(1/p) Q[u] - int g u`.
    pub energy: f64,
    pub trace: IterationTrace,
}

/// Stationary point of `J[u] = (1/p) Q[u] - int g u` with `u = f` on the
/// boundary, started from zero in the interior.
pub fn solve_dirichlet(
    spec: &ProblemSpec,
    g: Option<&PotentialField>,
    f_boundary: &GridFunction,
    opts: &SolveOptions,
) -> Result<Solution> {
    let cons = Constraints::dirichlet(&spec.mesh, f_boundary.values())?;
    let load = element_load(spec, g)?;
    minimize(spec, &load, &cons, None, opts)
}

pub(crate) fn element_load(spec: &ProblemSpec, g: Option<&PotentialField>) -> Result<Vec<f64>> {
    match g {
        Some(g) if g.len() != spec.mesh.num_elements() => Err(Error::MeshMismatch),
        Some(g) => Ok(g.values().to_vec()),
        None => Ok(vec![0.0; spec.mesh.num_elements()]),
    }
}
