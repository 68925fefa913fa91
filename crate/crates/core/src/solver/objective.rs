//! The regularized objective `J_eps[u] = (1/p) sum_e (phi_eps(|grad u|_A)
//! + V phi_eps(u_mid)) dx - sum_e load_e u_mid dx` with
//! `phi_eps(t) = (t^2 + eps^2)^{p/2} - eps^p`, its gradient and a
//! positive definite model Hessian.

use crate::numeric::{BandMatrix, KahanSum};
use crate::qcore::{anorm, dot, ProblemSpec, Sym2};

pub(crate) struct Objective<'a> {
    pub spec: &'a ProblemSpec,
    /// Per-element load density.
    pub load: &'a [f64],
    pub eps: f64,
}

#[inline]
fn phi(t: f64, eps: f64, p: f64) -> f64 {
    if eps == 0.0 {
        t.abs().powf(p)
    } else {
        (t * t + eps * eps).powf(0.5 * p) - eps.powf(p)
    }
}

/// `phi'(t) / p`, i.e. `(t^2 + eps^2)^{(p-2)/2} t`.
#[inline]
fn dphi(t: f64, eps: f64, p: f64) -> f64 {
    if eps == 0.0 {
        if t == 0.0 {
            0.0
        } else {
            t.signum() * t.abs().powf(p - 1.0)
        }
    } else {
        (t * t + eps * eps).powf(0.5 * (p - 2.0)) * t
    }
}

impl Objective<'_> {
    pub fn value(&self, u: &[f64]) -> f64 {
        let mesh = &self.spec.mesh;
        let p = self.spec.p;
        let mut acc = KahanSum::new();
        for e in 0..mesh.num_elements() {
            let g = mesh.grad_on(u, e);
            let s = anorm(g, self.spec.a.get(e));
            let um = mesh.mid_value(u, e);
            let pot = self.spec.v.get(e) * phi(um, self.eps, p);
            acc.add(((phi(s, self.eps, p) + pot) / p - self.load[e] * um) * mesh.dx(e));
        }
        acc.value()
    }

    /// Full nodal gradient and the per-node sum of absolute contributions.
    pub fn gradient(&self, u: &[f64], grad: &mut [f64], scale: &mut [f64]) {
        let mesh = &self.spec.mesh;
        let p = self.spec.p;
        grad.iter_mut().for_each(|x| *x = 0.0);
        scale.iter_mut().for_each(|x| *x = 0.0);
        let k = mesh.nodes_per_element();
        let kf = k as f64;
        for e in 0..mesh.num_elements() {
            let a = self.spec.a.get(e);
            let g = mesh.grad_on(u, e);
            let s = anorm(g, a);
            let c = if self.eps > 0.0 {
                (s * s + self.eps * self.eps).powf(0.5 * (p - 2.0))
            } else if s > 0.0 {
                s.powf(p - 2.0)
            } else {
                0.0
            };
            let ag = a.apply(g);
            let fl = [c * ag[0], c * ag[1]];
            let um = mesh.mid_value(u, e);
            let pot = self.spec.v.get(e) * dphi(um, self.eps, p) / kf;
            let load = self.load[e] / kf;
            let dx = mesh.dx(e);
            let bg = mesh.basis_grads(e);
            for (l, &n) in mesh.element(e).iter().enumerate() {
                let f = dot(fl, bg[l]);
                grad[n] += (f + pot - load) * dx;
                scale[n] += (f.abs() + pot.abs() + load.abs()) * dx;
            }
        }
    }

    /// Model Hessian restricted to free nodes. Gradient and potential terms
    /// use floored magnitudes so the model stays positive definite; negative
    /// potential values are dropped when `positive_only` is set.
    pub fn hessian(
        &self,
        u: &[f64],
        free: &[usize],
        nfree: usize,
        bw: usize,
        positive_only: bool,
        diag_shift: f64,
    ) -> BandMatrix {
        let mesh = &self.spec.mesh;
        let p = self.spec.p;
        let ne = mesh.num_elements();
        let k = mesh.nodes_per_element();
        let kf = k as f64;
        let mut smax: f64 = 0.0;
        let mut umax: f64 = 0.0;
        for e in 0..ne {
            smax = smax.max(anorm(mesh.grad_on(u, e), self.spec.a.get(e)));
            umax = umax.max(mesh.mid_value(u, e).abs());
        }
        // p > 2: the true curvature vanishes with the gradient, so a relative
        // floor keeps the model definite. p < 2: the curvature blows up, and
        // only a tiny floor keeps the model from underestimating it.
        let rel = if p >= 2.0 { 1e-3 } else { 1e-10 };
        let floor = |m: f64| if m > 0.0 { (rel * m).max(self.eps) } else { 1.0_f64.max(self.eps) };
        let (floor_s, floor_u) = (floor(smax), floor(umax));
        let mut h = BandMatrix::zeros(nfree, bw);
        for e in 0..ne {
            let a: &Sym2 = self.spec.a.get(e);
            let g = mesh.grad_on(u, e);
            let s2 = a.quad(g).max(0.0) + floor_s * floor_s;
            let c0 = s2.powf(0.5 * (p - 2.0));
            let c1 = (p - 2.0) * s2.powf(0.5 * (p - 4.0));
            let ag = a.apply(g);
            let um = mesh.mid_value(u, e);
            let v = self.spec.v.get(e);
            let v = if positive_only { v.max(0.0) } else { v };
            let hp = (p - 1.0) * v * (um * um + floor_u * floor_u).powf(0.5 * (p - 2.0)) / (kf * kf);
            let dx = mesh.dx(e);
            let bg = mesh.basis_grads(e);
            let cell = mesh.element(e);
            for l in 0..k {
                let il = free[cell[l]];
                if il == usize::MAX {
                    continue;
                }
                let al = a.apply(bg[l]);
                let gl = dot(ag, bg[l]);
                for m in 0..=l {
                    let im = free[cell[m]];
                    if im == usize::MAX {
                        continue;
                    }
                    let val = c0 * dot(al, bg[m]) + c1 * gl * dot(ag, bg[m]) + hp;
                    h.add(il, im, val * dx);
                }
            }
        }
        if diag_shift > 0.0 {
            for i in 0..nfree {
                let d = h.get(i, i);
                h.add(i, i, diag_shift * d.abs().max(1e-300));
            }
        }
        h
    }
}
