use std::sync::{Arc, OnceLock};

use approx::assert_relative_eq;
use proptest::prelude::*;
use qcrit::mesh::*;
use qcrit::qcore::*;

fn sym() -> impl Strategy<Value = Sym2> {
    // R diag(l1, l2) R^T with eigenvalues in [0.1, 10]
    (0.1f64..10.0, 0.1f64..10.0, 0.0f64..std::f64::consts::PI).prop_map(|(l1, l2, t)| {
        let (s, c) = t.sin_cos();
        Sym2::new(c * c * l1 + s * s * l2, c * s * (l1 - l2), s * s * l1 + c * c * l2)
    })
}

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y)| [x, y])
}

const PS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

fn constants() -> &'static [f64; 4] {
    static C: OnceLock<[f64; 4]> = OnceLock::new();
    C.get_or_init(|| PS.map(|p| calibrate_lindqvist(p, 500, 3).unwrap().constant))
}

fn interval(p: f64, n: usize, v: f64) -> ProblemSpec {
    let m = Arc::new(Mesh::interval(0.0, 1.0, n, 1).unwrap());
    let v = PotentialField::constant(&m, v);
    ProblemSpec::isotropic(p, m, v).unwrap()
}

#[test]
fn quadratic_case_has_unit_constant() {
    // for p = 2 both sides equal |a - b|_A^2
    let c = calibrate_lindqvist(2.0, 2000, 1).unwrap();
    assert_relative_eq!(c.constant, 1.0, max_relative = 1e-6);
}

#[test]
fn lindqvist_constants_decrease_then_stay_positive() {
    for p in [1.2, 1.5, 3.0, 4.0] {
        let c = calibrate_lindqvist(p, 2000, 7).unwrap();
        assert!(c.constant > 0.0 && c.constant <= 1.0 + 1e-9, "p={p}: {c:?}");
    }
}

#[test]
fn calibration_is_seed_stable() {
    let a = calibrate_lindqvist(3.0, 4000, 1).unwrap().constant;
    let b = calibrate_lindqvist(3.0, 4000, 99).unwrap().constant;
    assert_relative_eq!(a, b, max_relative = 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lindqvist_holds_with_calibrated_constant(a in vec2(), b in vec2(), m in sym(), k in 0usize..4) {
        let (p, c) = (PS[k], constants()[k]);
        let lhs = lindqvist_lhs(a, b, &m, p);
        let gap = lindqvist_gap(a, b, &m, p, c);
        prop_assert!(gap >= -1e-9 * (1.0 + lhs.abs()), "gap {gap}");
    }

    #[test]
    fn flux_is_monotone(x in vec2(), y in vec2(), m in sym(), p in 1.1f64..5.0) {
        let g = monotonicity_gap(x, y, &m, p);
        let scale = anorm(x, &m).max(anorm(y, &m)).powf(p);
        prop_assert!(g >= -1e-12 * (1.0 + scale));
    }

    #[test]
    fn ellipticity_bounds_the_a_norm(l1 in 0.05f64..20.0, l2 in 0.05f64..20.0, t in 0.0f64..3.2, xi in vec2()) {
        let m = Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap();
        let (s, c) = t.sin_cos();
        let a = Sym2::new(c * c * l1 + s * s * l2, c * s * (l1 - l2), s * s * l1 + c * c * l2);
        let f = MatrixField::from_elements(&m, vec![a; m.num_elements()]).unwrap();
        let th = f.theta();
        let n = xi[0].hypot(xi[1]);
        let an = anorm(xi, &a);
        prop_assert!(th * n <= an * (1.0 + 1e-10) + 1e-14);
        prop_assert!(an <= n / th * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn energy_is_p_homogeneous(t in -4.0f64..4.0, seed in 0u64..1000, p in 1.2f64..4.0) {
        let spec = interval(p, 64, 0.7);
        let u = &qcrit::battery::test_functions(&spec.mesh, 1, seed)[0];
        let e = energy(&spec, u).unwrap();
        let et = energy(&spec, &u.scaled(t)).unwrap();
        prop_assert!((et - t.abs().powf(p) * e).abs() <= 1e-10 * (1.0 + et.abs()));
    }
}

#[test]
fn residual_is_affine_in_the_load() {
    let spec = interval(2.5, 64, 0.3);
    let u = GridFunction::from_fn(spec.mesh.clone(), |x| (3.0 * x[0]).sin()).unwrap();
    let g = PotentialField::from_elements(&spec.mesh, (0..64).map(|e| (e as f64 * 0.1).cos()).collect()).unwrap();
    let r0 = residual(&spec, &u, None).unwrap();
    let r1 = residual(&spec, &u, Some(&g)).unwrap();
    let r3 = residual(&spec, &u, Some(&g.scaled(3.0))).unwrap();
    for i in 0..r0.values().len() {
        let d1 = r1.value(i) - r0.value(i);
        let d3 = r3.value(i) - r0.value(i);
        assert!((d3 - 3.0 * d1).abs() <= 1e-12);
    }
}

#[test]
fn negative_part_of_a_supersolution_is_a_subsolution() {
    for p in [1.5, 2.0, 3.0] {
        let spec = interval(p, 100, 0.0);
        // affine functions are p-harmonic
        let v = GridFunction::from_fn(spec.mesh.clone(), |x| x[0] - 0.305).unwrap();
        let r = negative_part_subsolution_check(&spec, &v).unwrap();
        assert!(r.precondition_ok && r.pass, "p={p}: {r:?}");
    }
    // a subsolution fails the precondition
    let spec = interval(2.0, 100, 0.0);
    let v = GridFunction::from_fn(spec.mesh.clone(), |x| x[0] * x[0] - 0.3).unwrap();
    assert!(!negative_part_subsolution_check(&spec, &v).unwrap().precondition_ok);
}

#[test]
fn harnack_ratio_of_positive_functions() {
    let m = Arc::new(Mesh::rectangle(-1.0, -1.0, 1.0, 1.0, 20, 20).unwrap());
    let u = GridFunction::from_fn(m, |x| 2.0 + x[0]).unwrap();
    let inner = nodes_in_shell(&u, [0.0, 0.0], 0.0, 0.5);
    let r = harnack_ratio(&u, &inner, &inner).unwrap();
    assert!(r >= 1.0);
    assert!(r <= 2.5 / 1.5 + 1e-12);
    let bad = u.map(|x| x - 2.0);
    assert!(harnack_ratio(&bad, &inner, &inner).is_err());
}

#[test]
fn lindqvist_integral_agrees_with_its_flux_form() {
    // two exact solutions: w_i solves -w'' = g_i with positive data
    let spec = interval(2.0, 256, 0.0);
    let m = spec.mesh.clone();
    let w1 = GridFunction::from_fn(m.clone(), |x| 1.0 + x[0]).unwrap();
    let w2 = GridFunction::from_fn(m.clone(), |x| 2.0 - x[0] * 0.5).unwrap();
    let r = lindqvist_integral(&spec, &spec, &w1, &w2, None, None, 0.0).unwrap();
    assert!(r.i_h.abs() <= 1e-12);
    assert!(r.rhs >= 0.0);
}
