use std::sync::Arc;

use approx::assert_relative_eq;
use qcrit::mesh::*;
use qcrit::morrey::*;
use qcrit::qcore::*;

fn square(n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, n, n).unwrap())
}

fn bump(m: &Mesh) -> PotentialField {
    PotentialField::from_elements(
        m,
        (0..m.num_elements())
            .map(|e| {
                let x = m.midpoint(e);
                let r = (x[0] - 0.3).hypot(x[1] - 0.6);
                if r < 0.15 { 5.0 } else { 0.2 * x[0] - 0.1 }
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn norm_is_absolutely_homogeneous() {
    let m = square(16);
    let v = bump(&m);
    let pr = MorreyParams::new(1.5, 2, 2.0).unwrap();
    let a = morrey_norm_default(&v, &m, &pr).unwrap().value;
    for c in [-3.0, 0.5, 10.0] {
        let b = morrey_norm_default(&v.scaled(c), &m, &pr).unwrap().value;
        assert_relative_eq!(b, c.abs() * a, max_relative = 1e-12);
    }
}

#[test]
fn denser_sampling_never_lowers_the_norm() {
    let m = square(16);
    let v = bump(&m);
    let pr = MorreyParams::new(2.0, 2, 3.0).unwrap();
    let dense = morrey_norm(&v, &m, &pr, &BallSampling::strided(&m, 6, 1).unwrap()).unwrap();
    let sparse = morrey_norm(&v, &m, &pr, &BallSampling::strided(&m, 6, 5).unwrap()).unwrap();
    let short = morrey_norm(&v, &m, &pr, &BallSampling::strided(&m, 4, 1).unwrap()).unwrap();
    assert!(dense.value >= sparse.value);
    assert!(dense.value >= short.value);
}

#[test]
fn norm_grows_with_the_domain() {
    let m = square(16);
    let v = bump(&m);
    let keep = |e: usize| m.midpoint(e)[0] < 0.5;
    let (sub, _) = m.restrict(keep).unwrap();
    // restriction keeps the parent element order
    let kept: Vec<f64> = (0..m.num_elements()).filter(|&e| keep(e)).map(|e| v.get(e)).collect();
    let vs = PotentialField::from_elements(&sub, kept).unwrap();
    let pr = MorreyParams::new(1.5, 2, 2.0).unwrap();
    // same radii on both meshes
    let radii: Vec<f64> = (0..=6).map(|k| sub.diam() * 0.5f64.powi(k)).collect();
    let s_full = BallSampling { centers: (0..m.num_nodes()).collect(), radii: radii.clone() };
    let s_sub = BallSampling { centers: (0..sub.num_nodes()).collect(), radii };
    let full = morrey_norm(&v, &m, &pr, &s_full).unwrap().value;
    let part = morrey_norm(&vs, &sub, &pr, &s_sub).unwrap().value;
    assert!(full >= part);
}

#[test]
fn l1_regime_ignores_q() {
    let m = square(12);
    let v = bump(&m);
    let a = morrey_norm_default(&v, &m, &MorreyParams::new(3.0, 2, 1.0).unwrap()).unwrap();
    let b = morrey_norm_default(&v, &m, &MorreyParams::new(3.0, 2, 9.0).unwrap()).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.regime, Regime::PGtN);
    let abs: Vec<f64> = v.values().iter().map(|x| x.abs()).collect();
    assert_relative_eq!(a.value, m.integrate(&abs).unwrap(), max_relative = 1e-12);
}

#[test]
fn exponents_match_their_formulas() {
    let pr = MorreyParams::new(1.5, 2, 2.0).unwrap();
    assert_relative_eq!(pr.delta_exponent(), 2.0);
    assert_relative_eq!(pr.norm_exponent(), 3.0);
    let pr = MorreyParams::new(3.0, 2, 4.0).unwrap();
    assert_relative_eq!(pr.delta_exponent(), 2.0);
}

#[test]
fn calibrated_constant_covers_every_delta() {
    let m = square(12);
    let pr = MorreyParams::new(1.5, 2, 2.0).unwrap();
    let cal = calibrate_morrey_adams(&m, &pr, 12, 5).unwrap();
    assert!(cal.constant.is_finite() && cal.constant > 0.0);
    let again = calibrate_morrey_adams(&m, &pr, 12, 5).unwrap();
    assert_eq!(cal, again);
    let v = bump(&m);
    let u = &qcrit::battery::test_functions(&m, 1, 11)[0];
    let s1 = morrey_adams_split(&v, u, 1.0, &pr).unwrap();
    let c = required_constant(&s1, 1.0, &pr);
    for delta in [1e-3, 0.1, 1.0, 10.0] {
        let s = morrey_adams_split_with_norm(&v, u, delta, &pr, s1.norm).unwrap();
        assert!(s.lhs <= s.grad_term + c * s.mass_coeff * (1.0 + 1e-9), "delta={delta}");
    }
}
