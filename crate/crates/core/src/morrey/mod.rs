//! Local Morrey norms in the three `p` regimes and the Morrey-Adams split.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, Mesh};
use crate::numeric::KahanSum;
use crate::qcore::PotentialField;
use crate::{battery, par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PLtN,
    PEqN,
    PGtN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams {
    pub p: f64,
    pub n: usize,
    pub q: f64,
    pub regime: Regime,
}

impl MorreyParams {
    pub fn new(p: f64, n: usize, q: f64) -> Result<Self> {
        if !(p > 1.0) || n == 0 {
            return Err(Error::config("need p > 1 and n >= 1"));
        }
        let nf = n as f64;
        let regime = if p < nf {
            Regime::PLtN
        } else if p == nf {
            Regime::PEqN
        } else {
            Regime::PGtN
        };
        match regime {
            Regime::PLtN if !(q >= 1.0 && q > nf / p) => {
                return Err(Error::config(format!("p < n requires q > n/p = {}, got q = {q}", nf / p)))
            }
            Regime::PEqN if !(q > nf) => {
                return Err(Error::config(format!("p = n requires q > n = {n}, got q = {q}")))
            }
            _ => {}
        }
        Ok(Self { p, n, q, regime })
    }

    /// `q` entering the Morrey-Adams exponents; 1 in the `L^1` regime.
    pub fn q_effective(&self) -> f64 {
        match self.regime {
            Regime::PGtN => 1.0,
            _ => self.q,
        }
    }

    /// `n / (p q - n)`.
    pub fn delta_exponent(&self) -> f64 {
        let n = self.n as f64;
        n / (self.p * self.q_effective() - n)
    }

    /// `p q / (p q - n)`.
    pub fn norm_exponent(&self) -> f64 {
        let n = self.n as f64;
        let pq = self.p * self.q_effective();
        pq / (pq - n)
    }
}

/// Ball centers (node indices) and a dyadic radius ladder `diam 2^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSampling {
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
}

impl BallSampling {
    /// Every node, radii `diam 2^{-k}` for `k = 0..=k_max`.
    pub fn dyadic(mesh: &Mesh, k_max: usize) -> Result<Self> {
        Self::strided(mesh, k_max, 1)
    }

    /// Every `stride`-th node.
    pub fn strided(mesh: &Mesh, k_max: usize, stride: usize) -> Result<Self> {
        if k_max < 4 {
            return Err(Error::config("the radius ladder needs K >= 4"));
        }
        let stride = stride.max(1);
        let d = mesh.diam();
        Ok(Self {
            centers: (0..mesh.num_nodes()).step_by(stride).collect(),
            radii: (0..=k_max).map(|k| d * 0.5f64.powi(k as i32)).collect(),
        })
    }

    fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.radii.len() < 5 {
            return Err(Error::config("the radius ladder needs K >= 4"));
        }
        if self.radii.iter().any(|&r| !(r > 0.0 && r <= mesh.diam() * (1.0 + 1e-12))) {
            return Err(Error::config("radii must lie in (0, diam]"));
        }
        if self.centers.iter().any(|&c| c >= mesh.num_nodes()) {
            return Err(Error::config("ball center outside the mesh"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyNorm {
    pub value: f64,
    pub center: [f64; 2],
    pub radius: f64,
    pub regime: Regime,
    /// The mesh emulates a higher dimension radially; the `L^1` norm was used.
    pub l1_fallback: bool,
}

fn ball_weight(params: &MorreyParams, diam: f64, r: f64) -> f64 {
    let n = params.n as f64;
    match params.regime {
        Regime::PLtN => {
            let qc = if params.q == 1.0 { f64::INFINITY } else { params.q / (params.q - 1.0) };
            r.powf(-n / qc)
        }
        Regime::PEqN => {
            let nc = n / (n - 1.0);
            (diam / r).ln().max(0.0).powf(params.q / nc)
        }
        Regime::PGtN => 1.0,
    }
}

/// Sampled lower bound of the local Morrey norm of `v` over `mesh`; ball
/// membership by element midpoint (`|mid - y| < r`).
pub fn morrey_norm(
    v: &PotentialField,
    mesh: &Mesh,
    params: &MorreyParams,
    sampling: &BallSampling,
) -> Result<MorreyNorm> {
    if v.len() != mesh.num_elements() {
        return Err(Error::MeshMismatch);
    }
    if params.n != mesh.ambient_n() {
        return Err(Error::config(format!(
            "Morrey parameters use n = {} but the mesh has ambient dimension {}",
            params.n,
            mesh.ambient_n()
        )));
    }
    let abs: Vec<f64> = v.values().iter().map(|x| x.abs()).collect();
    let l1 = mesh.integrate(&abs)?;
    if params.regime == Regime::PGtN || mesh.is_radial() {
        return Ok(MorreyNorm {
            value: l1,
            center: [0.0, 0.0],
            radius: mesh.diam(),
            regime: params.regime,
            l1_fallback: mesh.is_radial() && params.regime != Regime::PGtN,
        });
    }
    sampling.validate(mesh)?;
    let diam = mesh.diam();
    let best = par::map(sampling.centers.clone(), |c| {
        let y = mesh.node(c);
        let mut best = (0.0f64, 0.0f64);
        for &r in &sampling.radii {
            let mut acc = KahanSum::new();
            for e in 0..mesh.num_elements() {
                let m = mesh.midpoint(e);
                if (m[0] - y[0]).hypot(m[1] - y[1]) < r {
                    acc.add(abs[e] * mesh.dx(e));
                }
            }
            let val = ball_weight(params, diam, r) * acc.value();
            if val > best.0 {
                best = (val, r);
            }
        }
        (best.0, c, best.1)
    });
    let (value, c, radius) = best
        .into_iter()
        .fold((0.0, 0, 0.0), |m, x| if x.0 > m.0 { x } else { m });
    Ok(MorreyNorm {
        value,
        center: mesh.node(c),
        radius,
        regime: params.regime,
        l1_fallback: false,
    })
}

/// Morrey norm with every node as a center and `K = 6`.
pub fn morrey_norm_default(v: &PotentialField, mesh: &Mesh, params: &MorreyParams) -> Result<MorreyNorm> {
    morrey_norm(v, mesh, params, &BallSampling::dyadic(mesh, 6)?)
}

/// The three pieces of the Morrey-Adams inequality
/// `lhs <= grad_term + C mass_coeff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyAdamsSplit {
    pub lhs: f64,
    pub grad_term: f64,
    pub mass_coeff: f64,
    pub norm: f64,
}

pub fn morrey_adams_split(
    v: &PotentialField,
    u: &GridFunction,
    delta: f64,
    params: &MorreyParams,
) -> Result<MorreyAdamsSplit> {
    let norm = morrey_norm_default(v, u.mesh(), params)?.value;
    morrey_adams_split_with_norm(v, u, delta, params, norm)
}

/// As [`morrey_adams_split`] with a precomputed norm.
pub fn morrey_adams_split_with_norm(
    v: &PotentialField,
    u: &GridFunction,
    delta: f64,
    params: &MorreyParams,
    norm: f64,
) -> Result<MorreyAdamsSplit> {
    if !(delta > 0.0) {
        return Err(Error::config("delta must be positive"));
    }
    let mesh = u.mesh();
    if v.len() != mesh.num_elements() {
        return Err(Error::MeshMismatch);
    }
    let scale = u.max_abs();
    if mesh
        .boundary_nodes()
        .iter()
        .any(|&i| u.value(i).abs() > 1e-14 * scale)
    {
        return Err(Error::domain("u must vanish on the boundary"));
    }
    let p = params.p;
    let lhs = mesh.integrate_with(|e| v.get(e).abs() * mesh.mid_value(u.values(), e).abs().powf(p));
    let grad_term = delta * u.grad_lp_norm_pow(p);
    let mass_coeff = delta.powf(-params.delta_exponent())
        * norm.powf(params.norm_exponent())
        * u.lp_norm_pow(p);
    Ok(MorreyAdamsSplit {
        lhs,
        grad_term,
        mass_coeff,
        norm,
    })
}

/// Smallest constant making one split hold for every `delta > 0`:
/// `sup_delta (lhs - delta G) delta^a / M`, attained at
/// `delta* = a lhs / ((a + 1) G)`.
pub fn required_constant(split: &MorreyAdamsSplit, delta: f64, params: &MorreyParams) -> f64 {
    let a = params.delta_exponent();
    let g = split.grad_term / delta;
    let m = split.mass_coeff * delta.powf(a);
    if split.lhs <= 0.0 || m <= 0.0 {
        return 0.0;
    }
    if g <= 0.0 {
        return f64::INFINITY;
    }
    let ds = a * split.lhs / ((a + 1.0) * g);
    (split.lhs - ds * g) * ds.powf(a) / m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyAdamsCalibration {
    pub params: MorreyParams,
    pub constant: f64,
    pub battery: usize,
    pub seed: u64,
    /// Index of the saturating battery member.
    pub argmax: usize,
}

fn random_potential(mesh: &Mesh, r: &mut impl Rng) -> PotentialField {
    let c = mesh.node(r.random_range(0..mesh.num_nodes()));
    let rad = mesh.diam() * r.random_range(0.02..0.5);
    let amp: f64 = r.random_range(0.5..5.0);
    let background: f64 = r.random_range(0.0..0.5);
    let vals = (0..mesh.num_elements())
        .map(|e| {
            let m = mesh.midpoint(e);
            let inside = (m[0] - c[0]).hypot(m[1] - c[1]) < rad;
            let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * (if inside { amp } else { background })
        })
        .collect();
    PotentialField::from_elements(mesh, vals).expect("finite potential")
}

/// `C(n, p, q)` as the largest required constant over a seeded battery of
/// potentials and test functions.
pub fn calibrate_morrey_adams(
    mesh: &std::sync::Arc<Mesh>,
    params: &MorreyParams,
    battery: usize,
    seed: u64,
) -> Result<MorreyAdamsCalibration> {
    if battery == 0 {
        return Err(Error::config("empty battery"));
    }
    let sampling = BallSampling::strided(mesh, 6, 1)?;
    let out = par::map((0..battery).collect(), |k| -> Result<f64> {
        let mut r = rng::stream(seed, k as u64);
        let v = random_potential(mesh, &mut r);
        let u = battery::sine_mode_function(mesh, &mut r);
        let norm = morrey_norm(&v, mesh, params, &sampling)?.value;
        let split = morrey_adams_split_with_norm(&v, &u, 1.0, params, norm)?;
        Ok(required_constant(&split, 1.0, params))
    });
    let mut best = (0.0, 0);
    for (k, c) in out.into_iter().enumerate() {
        let c = c?;
        if c > best.0 {
            best = (c, k);
        }
    }
    Ok(MorreyAdamsCalibration {
        params: *params,
        constant: best.0,
        battery,
        seed,
        argmax: best.1,
    })
}
