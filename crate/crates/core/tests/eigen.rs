mod fixtures {
    pub mod shooting;
}

use std::sync::Arc;

use approx::assert_relative_eq;
use fixtures::shooting::{closed_form, shooting_eigenvalue};
use qcrit::eigen::*;
use qcrit::mesh::*;
use qcrit::qcore::*;

fn interval(p: f64, a: f64, b: f64, n: usize, v: f64) -> ProblemSpec {
    let m = Arc::new(Mesh::interval(a, b, n, 1).unwrap());
    let v = PotentialField::constant(&m, v);
    ProblemSpec::isotropic(p, m, v).unwrap()
}

#[test]
fn shooting_fixture_matches_closed_form() {
    for p in [1.5, 2.0, 3.0] {
        assert_relative_eq!(shooting_eigenvalue(p, 1.0), closed_form(p), max_relative = 1e-4);
    }
}

#[test]
fn interval_eigenvalues_match_shooting() {
    let opts = EigenOptions::default();
    for (p, tol) in [(1.5, 0.02), (2.0, 0.01), (3.0, 0.02)] {
        let r = principal_eigenpair(&interval(p, 0.0, 1.0, 512, 0.0), &opts).unwrap();
        let oracle = shooting_eigenvalue(p, 1.0);
        assert_relative_eq!(r.lambda1, oracle, max_relative = tol);
        assert!(r.v1.min() >= 0.0);
        assert!(r.residual <= 1e-6, "p={p}: {}", r.residual);
    }
}

#[test]
fn rayleigh_quotient_is_scale_invariant() {
    let spec = interval(2.5, 0.0, 1.0, 128, 0.3);
    let u = GridFunction::from_fn(spec.mesh.clone(), |x| x[0] * (1.0 - x[0]) * (1.0 + x[0])).unwrap();
    let q = rayleigh_quotient(&spec, &u).unwrap();
    for t in [-3.0, 0.1, 7.0] {
        assert_relative_eq!(rayleigh_quotient(&spec, &u.scaled(t)).unwrap(), q, max_relative = 1e-12);
    }
}

#[test]
fn shift_equivariance_for_several_constants() {
    let opts = EigenOptions::default();
    let base = interval(2.0, 0.0, 1.0, 128, 0.0);
    let l0 = principal_eigenpair(&base, &opts).unwrap().lambda1;
    for c in [-1.0, 1.0, 5.0] {
        let l = principal_eigenpair(&base.with_shift(c), &opts).unwrap().lambda1;
        assert!((l - l0 - c).abs() <= 1e-8, "c={c}: {}", l - l0);
    }
}

#[test]
fn domain_and_potential_monotonicity() {
    let opts = EigenOptions::default();
    // nested intervals sharing the grid step
    let small = principal_eigenpair(&interval(3.0, 0.0, 1.0, 128, 0.0), &opts).unwrap().lambda1;
    let large = principal_eigenpair(&interval(3.0, -0.5, 1.5, 256, 0.0), &opts).unwrap().lambda1;
    assert!(small >= large);

    let m = Arc::new(Mesh::interval(0.0, 1.0, 128, 1).unwrap());
    let v1 = PotentialField::from_spec(&PotentialSpec::Const { c: -2.0 }, &m, 2.0).unwrap();
    let step = PotentialSpec::Step {
        c: 4.0,
        lo: [0.2, -1.0],
        hi: [0.6, 1.0],
    };
    let v2 = v1.combine(1.0, &PotentialField::from_spec(&step, &m, 2.0).unwrap(), 1.0).unwrap();
    let l1 = principal_eigenpair(&ProblemSpec::isotropic(2.0, m.clone(), v1).unwrap(), &opts).unwrap().lambda1;
    let l2 = principal_eigenpair(&ProblemSpec::isotropic(2.0, m, v2).unwrap(), &opts).unwrap().lambda1;
    assert!(l1 <= l2);
}

#[test]
fn eigen_residual_is_small() {
    let opts = EigenOptions::default();
    let m = Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 24, 24).unwrap());
    let spec = ProblemSpec::from_catalog(
        2.5,
        m,
        &MatrixSpec::Rotating { ratio: 0.5, freq: 2.0 },
        &PotentialSpec::Const { c: 1.0 },
    )
    .unwrap();
    let r = principal_eigenpair(&spec, &opts).unwrap();
    assert!(eigen_residual(&spec, &r.v1, r.lambda1).unwrap() <= 1e-6);
    assert!(r.rayleigh_residual <= 1e-8);
}

#[test]
fn mesh_refinement_converges() {
    let opts = EigenOptions::default();
    let l: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| principal_eigenpair(&interval(2.0, 0.0, 1.0, n, 0.0), &opts).unwrap().lambda1)
        .collect();
    let d: Vec<f64> = l.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in d.windows(2) {
        assert!(w[1] < w[0]);
        assert!((w[0] / w[1]).log2() >= 1.0);
    }
}

#[test]
fn principal_eigenvalue_is_simple() {
    let spec = interval(3.0, 0.0, 1.0, 96, 0.0);
    let r = simplicity_probe(&spec, 4, 7, &EigenOptions::default()).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn maximum_principle_suite_and_converse() {
    let opts = EigenOptions::default();
    for p in [1.5, 2.0, 3.0] {
        let spec = interval(p, 0.0, 1.0, 64, 0.0);
        let r = maximum_principle_suite(&spec, 6, 42, &opts).unwrap();
        assert!(r.pass, "p={p}: {r:?}");
        assert!(r.min_solution >= -1e-8);
    }
    // V = -20 < -pi^2 makes lambda1 negative
    let spec = interval(2.0, 0.0, 1.0, 64, -20.0);
    let r = maximum_principle_suite(&spec, 4, 42, &opts).unwrap();
    assert!(r.lambda1 < 0.0);
    let w = r.witness.unwrap();
    assert!(w.min_value < 0.0);
    assert!(r.pass);
}
