//! The functional `Q_{A,p,V}` and its pointwise and integral inequalities.

mod checks;
mod fields;
mod functional;
mod lindqvist;

pub use checks::{harnack_ratio, negative_part_subsolution_check, nodes_in_shell, KatoReport};
pub use fields::{anorm, MatrixField, MatrixSpec, PotentialField, PotentialSpec, ProblemSpec, Sym2};
pub use functional::{
    energy, flux, monotonicity_gap, rayleigh_quotient, relative_residual, residual, residual_full, residual_scale,
    residual_with_tol, sign_tolerance, spow,
};
pub(crate) use functional::{dot, same_mesh};
pub use lindqvist::{
    calibrate_lindqvist, lindqvist_gap, lindqvist_integral, lindqvist_lhs, lindqvist_rhs,
    LindqvistConstant, LindqvistIntegral,
};
