//! First Dirichlet eigenvalue of `-(|u'|^{p-2} u')' = lambda |u|^{p-2} u`
//! on `(0, L)` by shooting: integrate from `u(0) = 0, u'(0) = 1` with RK4
//! and bisect on `lambda` until the first zero of `u` sits at `L`.

fn phi(s: f64, q: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(q - 2.0) * s
    }
}

/// First positive zero of `u` for the given `lambda`, or `None` if `u`
/// stays positive up to `x_max`.
fn first_zero(p: f64, lambda: f64, x_max: f64, steps: usize) -> Option<f64> {
    let q = p / (p - 1.0);
    let h = x_max / steps as f64;
    let f = |u: f64, w: f64| (phi(w, q), -lambda * phi(u, p));
    let (mut u, mut w) = (0.0f64, 1.0f64);
    for k in 0..steps {
        let (a1, b1) = f(u, w);
        let (a2, b2) = f(u + 0.5 * h * a1, w + 0.5 * h * b1);
        let (a3, b3) = f(u + 0.5 * h * a2, w + 0.5 * h * b2);
        let (a4, b4) = f(u + h * a3, w + h * b3);
        let un = u + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        let wn = w + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if k > 0 && un <= 0.0 {
            return Some(k as f64 * h + h * u / (u - un));
        }
        u = un;
        w = wn;
    }
    None
}

pub fn shooting_eigenvalue(p: f64, length: f64) -> f64 {
    let steps = 200_000;
    let (mut lo, mut hi) = (1e-3, 1.0);
    // grow hi until the first zero falls inside the interval
    while first_zero(p, hi, length, steps).is_none() {
        assert!(hi < 1e12, "no sign change found");
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match first_zero(p, mid, length, steps) {
            Some(z) if z <= length => hi = mid,
            _ => lo = mid,
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `(p - 1) pi_p^p` with `pi_p = 2 pi / (p sin(pi / p))`.
#[allow(dead_code)]
pub fn closed_form(p: f64) -> f64 {
    let pi_p = 2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin());
    (p - 1.0) * pi_p.powf(p)
}
