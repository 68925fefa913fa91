//! Coefficient fields: the SPD matrix `A`, the potential `V` and the problem
//! data bundling them with `p` and a mesh.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Self::new(a11, 0.0, a22)
    }

    #[inline]
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * x[0] + self.a12 * x[1],
            self.a12 * x[0] + self.a22 * x[1],
        ]
    }

    #[inline]
    pub fn quad(&self, x: [f64; 2]) -> f64 {
        let y = self.apply(x);
        y[0] * x[0] + y[1] * x[1]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.a11 + self.a22;
        let d = ((self.a11 - self.a22).powi(2) + 4.0 * self.a12 * self.a12).sqrt();
        (0.5 * (tr - d), 0.5 * (tr + d))
    }

    pub fn scaled(&self, c: f64) -> Sym2 {
        Sym2::new(c * self.a11, c * self.a12, c * self.a22)
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }

    /// Restriction to the first axis (1D meshes).
    fn as_1d(&self) -> Sym2 {
        Sym2::new(self.a11, 0.0, 0.0)
    }
}

/// `|xi|_A = sqrt(A xi . xi)`.
#[inline]
pub fn anorm(xi: [f64; 2], a: &Sym2) -> f64 {
    a.quad(xi).max(0.0).sqrt()
}

/// Catalog of matrix fields, evaluated at element midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum MatrixSpec {
    Identity,
    Scalar { c: f64 },
    Constant { a11: f64, a12: f64, a22: f64 },
    /// `R(phi) diag(1, ratio) R(phi)^T` with `phi = freq * (x + y)`.
    Rotating { ratio: f64, freq: f64 },
}

impl MatrixSpec {
    fn eval(&self, x: [f64; 2]) -> Sym2 {
        match *self {
            MatrixSpec::Identity => Sym2::IDENTITY,
            MatrixSpec::Scalar { c } => Sym2::diag(c, c),
            MatrixSpec::Constant { a11, a12, a22 } => Sym2::new(a11, a12, a22),
            MatrixSpec::Rotating { ratio, freq } => {
                let phi = freq * (x[0] + x[1]);
                let (s, c) = phi.sin_cos();
                Sym2::new(c * c + ratio * s * s, (1.0 - ratio) * c * s, s * s + ratio * c * c)
            }
        }
    }
}

/// Per-element SPD matrices with their ellipticity constant `theta`:
/// `theta |xi| <= |xi|_A <= |xi| / theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    mats: Vec<Sym2>,
    theta: f64,
}

impl MatrixField {
    pub fn from_elements(mesh: &Mesh, mats: Vec<Sym2>) -> Result<Self> {
        if mats.len() != mesh.num_elements() {
            return Err(Error::SizeMismatch {
                what: "matrix field",
                expected: mesh.num_elements(),
                got: mats.len(),
            });
        }
        let mats: Vec<Sym2> = if mesh.dim() == 1 {
            mats.iter().map(Sym2::as_1d).collect()
        } else {
            mats
        };
        let mut theta: f64 = 1.0;
        for (e, m) in mats.iter().enumerate() {
            if ![m.a11, m.a12, m.a22].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("matrix field"));
            }
            let (lo, hi) = if mesh.dim() == 1 {
                (m.a11, m.a11)
            } else {
                m.eigenvalues()
            };
            if !(lo > 0.0) {
                return Err(Error::config(format!(
                    "matrix on element {e} is not positive definite"
                )));
            }
            theta = theta.min(lo.sqrt()).min(1.0 / hi.sqrt());
        }
        Ok(Self { mats, theta })
    }

    pub fn identity(mesh: &Mesh) -> Self {
        Self::from_elements(mesh, vec![Sym2::IDENTITY; mesh.num_elements()]).unwrap()
    }

    pub fn from_spec(spec: &MatrixSpec, mesh: &Mesh) -> Result<Self> {
        Self::from_spec_scaled(spec, mesh, 1.0)
    }

    /// `A_R(x) = A(R x)`.
    pub fn from_spec_scaled(spec: &MatrixSpec, mesh: &Mesh, r: f64) -> Result<Self> {
        let mats = (0..mesh.num_elements())
            .map(|e| {
                let m = mesh.midpoint(e);
                spec.eval([r * m[0], r * m[1]])
            })
            .collect();
        Self::from_elements(mesh, mats)
    }

    #[inline]
    pub fn get(&self, e: usize) -> &Sym2 {
        &self.mats[e]
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }
}

/// Catalog of scalar potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum PotentialSpec {
    Const { c: f64 },
    /// `-beta * r^{-p}`.
    Hardy { beta: f64 },
    /// `c * r^alpha`.
    RadialPower { c: f64, alpha: f64 },
    /// `c` on the box `[lo, hi]`, zero elsewhere.
    Step { c: f64, lo: [f64; 2], hi: [f64; 2] },
    /// Hat function of the node nearest to `center`, scaled to integral `mass`.
    Hat { center: [f64; 2], mass: f64 },
    /// Nodal values, averaged over each element.
    Table { values: Vec<f64> },
    Sum { terms: Vec<PotentialSpec> },
}

fn radius(mesh: &Mesh, x: [f64; 2]) -> f64 {
    if mesh.dim() == 1 {
        x[0].abs()
    } else {
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }
}

/// Per-element potential values.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    values: Vec<f64>,
}

impl PotentialField {
    pub fn from_elements(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_elements() {
            return Err(Error::SizeMismatch {
                what: "potential",
                expected: mesh.num_elements(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential"));
        }
        Ok(Self { values })
    }

    pub fn zero(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.num_elements()],
        }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            values: vec![c; mesh.num_elements()],
        }
    }

    pub fn from_spec(spec: &PotentialSpec, mesh: &Mesh, p: f64) -> Result<Self> {
        Self::from_spec_scaled(spec, mesh, p, 1.0)
    }

    /// `V_R(x) = R^p V(R x)`.
    pub fn from_spec_scaled(spec: &PotentialSpec, mesh: &Mesh, p: f64, r: f64) -> Result<Self> {
        let ne = mesh.num_elements();
        let scale = r.powf(p);
        let at = |f: &dyn Fn([f64; 2]) -> f64| -> Vec<f64> {
            (0..ne)
                .map(|e| {
                    let m = mesh.midpoint(e);
                    scale * f([r * m[0], r * m[1]])
                })
                .collect()
        };
        let values = match spec {
            PotentialSpec::Const { c } => vec![scale * c; ne],
            PotentialSpec::Hardy { beta } => {
                let v = at(&|x| -beta * radius(mesh, x).powf(-p));
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config(
                        "Hardy potential needs a mesh bounded away from the origin",
                    ));
                }
                v
            }
            PotentialSpec::RadialPower { c, alpha } => at(&|x| c * radius(mesh, x).powf(*alpha)),
            PotentialSpec::Step { c, lo, hi } => at(&|x| {
                let inside = x[0] >= lo[0]
                    && x[0] <= hi[0]
                    && (mesh.dim() == 1 || (x[1] >= lo[1] && x[1] <= hi[1]));
                if inside {
                    *c
                } else {
                    0.0
                }
            }),
            PotentialSpec::Hat { center, mass } => {
                let (node, _) = mesh.nearest_node(*center);
                let mut v = vec![0.0; ne];
                let k = mesh.nodes_per_element() as f64;
                for (e, val) in v.iter_mut().enumerate() {
                    if mesh.element(e).contains(&node) {
                        *val = 1.0 / k;
                    }
                }
                let total = mesh.integrate(&v)?;
                if !(total > 0.0) {
                    return Err(Error::config("hat potential has empty support"));
                }
                v.iter_mut().for_each(|x| *x *= mass / total);
                v
            }
            PotentialSpec::Table { values } => {
                mesh.check_len(values)?;
                (0..ne).map(|e| scale * mesh.mid_value(values, e)).collect()
            }
            PotentialSpec::Sum { terms } => {
                let mut acc = vec![0.0; ne];
                for t in terms {
                    let f = Self::from_spec_scaled(t, mesh, p, r)?;
                    acc.iter_mut().zip(&f.values).for_each(|(a, b)| *a += b);
                }
                acc
            }
        };
        Self::from_elements(mesh, values)
    }

    #[inline]
    pub fn get(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `V^- = max(-V, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &PotentialField, b: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                what: "potential",
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }
}

/// The data of `Q_{A,p,V}` on one mesh.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: f64,
    pub mesh: Arc<Mesh>,
    pub a: MatrixField,
    pub v: PotentialField,
}

impl ProblemSpec {
    pub fn new(p: f64, mesh: Arc<Mesh>, a: MatrixField, v: PotentialField) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::config(format!("p must be > 1, got {p}")));
        }
        if a.len() != mesh.num_elements() || v.len() != mesh.num_elements() {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { p, mesh, a, v })
    }

    /// `A = I` with the given potential.
    pub fn isotropic(p: f64, mesh: Arc<Mesh>, v: PotentialField) -> Result<Self> {
        let a = MatrixField::identity(&mesh);
        Self::new(p, mesh, a, v)
    }

    pub fn from_catalog(
        p: f64,
        mesh: Arc<Mesh>,
        a: &MatrixSpec,
        v: &PotentialSpec,
    ) -> Result<Self> {
        let af = MatrixField::from_spec(a, &mesh)?;
        let vf = PotentialField::from_spec(v, &mesh, p)?;
        Self::new(p, mesh, af, vf)
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn with_potential(&self, v: PotentialField) -> Result<Self> {
        Self::new(self.p, self.mesh.clone(), self.a.clone(), v)
    }

    pub fn with_shift(&self, c: f64) -> Self {
        Self {
            v: self.v.shifted(c),
            ..self.clone()
        }
    }
}
