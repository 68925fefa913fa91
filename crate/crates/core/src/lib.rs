//! Numerical criticality theory for quasilinear operators
//! `-div(|grad v|_A^{p-2} A grad v) + V |v|^{p-2} v` on 1D and 2D P1 meshes.

pub mod battery;
pub mod criticality;
pub mod eigen;
pub mod error;
pub mod green;
pub mod mesh;
pub mod morrey;
pub mod numeric;
mod par;
pub mod qcore;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use mesh::{GridFunction, Mesh};
pub use qcore::{MatrixField, PotentialField, ProblemSpec};
