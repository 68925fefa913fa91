//! The discrete energy `Q_{A,p,V}` and the weak residual of `Q'_{A,p,V}[v] = g`.

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, Mesh};
use crate::numeric::KahanSum;

use super::fields::{anorm, PotentialField, ProblemSpec, Sym2};

/// `|x|^{q} sign(x)`, zero at the origin.
#[inline]
pub fn spow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(q)
    }
}

/// `|xi|_A^{p-2} A xi`, zero at `xi = 0`.
#[inline]
pub fn flux(xi: [f64; 2], a: &Sym2, p: f64) -> [f64; 2] {
    let s = anorm(xi, a);
    if s == 0.0 {
        return [0.0, 0.0];
    }
    let c = s.powf(p - 2.0);
    let ax = a.apply(xi);
    [c * ax[0], c * ax[1]]
}

#[inline]
pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn same_mesh(a: &std::sync::Arc<Mesh>, b: &std::sync::Arc<Mesh>) -> bool {
    std::sync::Arc::ptr_eq(a, b)
        || (a.num_elements() == b.num_elements()
            && a.cells() == b.cells()
            && a.coords() == b.coords())
}

pub(crate) fn check_mesh(spec: &ProblemSpec, u: &GridFunction) -> Result<()> {
    if same_mesh(&spec.mesh, u.mesh()) {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

/// `Q[u] = sum_e (|grad u|_A^p + V |u_mid|^p) dx`.
pub fn energy(spec: &ProblemSpec, u: &GridFunction) -> Result<f64> {
    check_mesh(spec, u)?;
    Ok(energy_raw(spec, u.values()))
}

pub(crate) fn energy_raw(spec: &ProblemSpec, u: &[f64]) -> f64 {
    let mesh = &spec.mesh;
    let p = spec.p;
    let mut acc = KahanSum::new();
    for e in 0..mesh.num_elements() {
        let g = mesh.grad_on(u, e);
        let um = mesh.mid_value(u, e);
        acc.add((anorm(g, spec.a.get(e)).powf(p) + spec.v.get(e) * um.abs().powf(p)) * mesh.dx(e));
    }
    acc.value()
}

/// Rayleigh quotient `Q[u] / ||u||_p^p`.
pub fn rayleigh_quotient(spec: &ProblemSpec, u: &GridFunction) -> Result<f64> {
    let q = energy(spec, u)?;
    let m = u.lp_norm_pow(spec.p);
    if !(m > 0.0) {
        return Err(Error::domain("Rayleigh quotient of the zero function"));
    }
    Ok(q / m)
}

/// Residual contributions of one element, in local node order.
#[inline]
fn element_terms(
    spec: &ProblemSpec,
    u: &[f64],
    g: Option<&PotentialField>,
    e: usize,
    out: &mut [f64; 3],
    abs: &mut [f64; 3],
) -> usize {
    let mesh: &Mesh = &spec.mesh;
    let k = mesh.nodes_per_element();
    let grads = mesh.basis_grads(e);
    let f = flux(mesh.grad_on(u, e), spec.a.get(e), spec.p);
    let um = mesh.mid_value(u, e);
    let pot = spec.v.get(e) * spow(um, spec.p - 1.0) / k as f64;
    let load = g.map_or(0.0, |g| g.get(e)) / k as f64;
    let dx = mesh.dx(e);
    for l in 0..k {
        let fl = dot(f, grads[l]);
        out[l] = (fl + pot - load) * dx;
        abs[l] = (fl.abs() + pot.abs() + load.abs()) * dx;
    }
    k
}

fn assemble(
    spec: &ProblemSpec,
    v: &GridFunction,
    g: Option<&PotentialField>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_mesh(spec, v)?;
    if let Some(g) = g {
        if g.len() != spec.mesh.num_elements() {
            return Err(Error::MeshMismatch);
        }
    }
    let mesh = &spec.mesh;
    let mut r = vec![0.0; mesh.num_nodes()];
    let mut s = vec![0.0; mesh.num_nodes()];
    let (mut out, mut abs) = ([0.0; 3], [0.0; 3]);
    for e in 0..mesh.num_elements() {
        let k = element_terms(spec, v.values(), g, e, &mut out, &mut abs);
        for (l, &n) in mesh.element(e).iter().enumerate().take(k) {
            r[n] += out[l];
            s[n] += abs[l];
        }
    }
    Ok((r, s))
}

/// Weak residual against every nodal hat function, boundary nodes included.
pub fn residual_full(
    spec: &ProblemSpec,
    v: &GridFunction,
    g: Option<&PotentialField>,
) -> Result<Vec<f64>> {
    Ok(assemble(spec, v, g)?.0)
}

/// Weak residual over interior hats; boundary entries are zero.
pub fn residual(
    spec: &ProblemSpec,
    v: &GridFunction,
    g: Option<&PotentialField>,
) -> Result<GridFunction> {
    let (mut r, _) = assemble(spec, v, g)?;
    for (i, x) in r.iter_mut().enumerate() {
        if spec.mesh.is_boundary(i) {
            *x = 0.0;
        }
    }
    GridFunction::new(spec.mesh.clone(), r)
}

/// Sum of absolute element contributions per node: the natural size of
/// each residual entry.
pub fn residual_scale(
    spec: &ProblemSpec,
    v: &GridFunction,
    g: Option<&PotentialField>,
) -> Result<Vec<f64>> {
    Ok(assemble(spec, v, g)?.1)
}

/// Residual together with the one-sided sign tolerance `1e-8 (1 + max scale)`.
pub fn residual_with_tol(
    spec: &ProblemSpec,
    v: &GridFunction,
    g: Option<&PotentialField>,
) -> Result<(GridFunction, f64)> {
    let (mut r, s) = assemble(spec, v, g)?;
    let mut smax: f64 = 0.0;
    for (i, x) in r.iter_mut().enumerate() {
        if spec.mesh.is_boundary(i) {
            *x = 0.0;
        } else {
            smax = smax.max(s[i]);
        }
    }
    Ok((GridFunction::new(spec.mesh.clone(), r)?, sign_tolerance(smax)))
}

/// `max |r_j| / max s_j` over interior nodes, with `s` the residual scale.
pub fn relative_residual(
    spec: &ProblemSpec,
    v: &GridFunction,
    g: Option<&PotentialField>,
) -> Result<f64> {
    let (r, s) = assemble(spec, v, g)?;
    let (mut rm, mut sm) = (0.0f64, 0.0f64);
    for i in 0..r.len() {
        if !spec.mesh.is_boundary(i) {
            rm = rm.max(r[i].abs());
            sm = sm.max(s[i]);
        }
    }
    Ok(if rm == 0.0 { 0.0 } else { rm / sm.max(f64::MIN_POSITIVE) })
}

pub fn sign_tolerance(scale: f64) -> f64 {
    1e-8 * (1.0 + scale)
}

/// `(|X|_A^{p-2} A X - |Y|_A^{p-2} A Y) . (X - Y)`, nonnegative by convexity.
pub fn monotonicity_gap(x: [f64; 2], y: [f64; 2], a: &Sym2, p: f64) -> f64 {
    let fx = flux(x, a, p);
    let fy = flux(y, a, p);
    dot([fx[0] - fy[0], fx[1] - fy[1]], [x[0] - y[0], x[1] - y[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn spec1d(p: f64, n: usize) -> ProblemSpec {
        let m = Arc::new(Mesh::interval(0.0, 1.0, n, 1).unwrap());
        let v = PotentialField::zero(&m);
        ProblemSpec::isotropic(p, m, v).unwrap()
    }

    #[test]
    fn energy_of_identity_is_one() {
        let s = spec1d(2.0, 16);
        let u = GridFunction::from_fn(s.mesh.clone(), |x| x[0]).unwrap();
        assert!((energy(&s, &u).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(energy(&s, &GridFunction::zeros(s.mesh.clone())).unwrap(), 0.0);
    }

    #[test]
    fn residual_of_parabola() {
        let n = 256;
        let s = spec1d(2.0, n);
        let g = PotentialField::constant(&s.mesh, 1.0);
        let u = GridFunction::from_fn(s.mesh.clone(), |x| x[0] * (1.0 - x[0]) / 2.0).unwrap();
        let r = residual(&s, &u, Some(&g)).unwrap();
        assert!(r.max_abs() <= 1e-3 / n as f64);
    }

    #[test]
    fn residual_is_energy_gradient() {
        let m = Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 5, 4).unwrap());
        let v = PotentialField::from_elements(
            &m,
            (0..m.num_elements()).map(|e| (e as f64).sin()).collect(),
        )
        .unwrap();
        let s = ProblemSpec::isotropic(3.0, m.clone(), v).unwrap();
        let u: Vec<f64> = (0..m.num_nodes()).map(|i| (0.7 * i as f64).cos()).collect();
        let gu = GridFunction::new(m.clone(), u.clone()).unwrap();
        let r = residual_full(&s, &gu, None).unwrap();
        let h = 1e-6;
        for j in [3, 7, 11] {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let d = (energy_raw(&s, &up) - energy_raw(&s, &um)) / (2.0 * h) / 3.0;
            assert!((d - r[j]).abs() < 1e-6, "{d} vs {}", r[j]);
        }
    }
}
