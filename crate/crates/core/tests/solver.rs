use std::sync::Arc;

use approx::assert_relative_eq;
use qcrit::mesh::*;
use qcrit::qcore::*;
use qcrit::solver::*;

fn interval(p: f64, n: usize, v: f64) -> ProblemSpec {
    let m = Arc::new(Mesh::interval(0.0, 1.0, n, 1).unwrap());
    let v = PotentialField::constant(&m, v);
    ProblemSpec::isotropic(p, m, v).unwrap()
}

fn screened(x: f64) -> f64 {
    1.0 - (x - 0.5).cosh() / 0.5f64.cosh()
}

#[test]
fn screened_poisson_matches_closed_form() {
    let spec = interval(2.0, 512, 1.0);
    let g = PotentialField::constant(&spec.mesh, 1.0);
    let sol = solve_dirichlet(&spec, Some(&g), &GridFunction::zeros(spec.mesh.clone()), &SolveOptions::default())
        .unwrap();
    for (x, u) in spec.mesh.coords().iter().zip(sol.u.values()) {
        assert!((u - screened(x[0])).abs() <= 1e-5, "{x:?}");
    }
    assert!(relative_residual(&spec, &sol.u, Some(&g)).unwrap() <= 1e-8);
}

#[test]
fn monotone_iteration_brackets_the_solution() {
    let spec = interval(2.0, 256, 1.0);
    let g = PotentialField::constant(&spec.mesh, 1.0);
    let zero = GridFunction::zeros(spec.mesh.clone());
    let top = constant_supersolution(&spec, &g).unwrap();
    assert_relative_eq!(top.value(0), 1.0);
    let r = monotone_iteration(&spec, &g, &zero, &zero, &top, &SolveOptions::default(), &MonotoneOptions::default())
        .unwrap();
    assert!(r.lower_trace.monotone.iter().all(|&b| b));
    assert!(r.upper_trace.monotone.iter().all(|&b| b));
    assert!(r.lower.sup_distance(&r.upper) <= 1e-8);
    for (x, u) in spec.mesh.coords().iter().zip(r.lower.values()) {
        assert!((u - screened(x[0])).abs() <= 1e-4);
    }
}

#[test]
fn monotone_iteration_with_sign_changing_potential() {
    let m = Arc::new(Mesh::interval(0.0, 1.0, 128, 1).unwrap());
    let v = PotentialField::from_elements(&m, (0..128).map(|e| if e < 64 { 2.0 } else { -1.0 }).collect()).unwrap();
    let spec = ProblemSpec::isotropic(2.0, m.clone(), v).unwrap();
    let g = PotentialField::constant(&m, 1.0);
    let zero = GridFunction::zeros(m.clone());
    // x(1 - x) is a supersolution: 2 - x(1 - x) >= 1
    let phi = GridFunction::from_fn(m.clone(), |x| 2.0 * x[0] * (1.0 - x[0])).unwrap();
    let r = monotone_iteration(&spec, &g, &zero, &zero, &phi, &SolveOptions::default(), &MonotoneOptions::default())
        .unwrap();
    assert!(r.lower.sup_distance(&r.upper) <= 1e-7);
    let (res, tol) = residual_with_tol(&spec, &r.lower, Some(&g)).unwrap();
    assert!(res.max_abs() <= 10.0 * tol);
    assert!(r.lower.values().iter().zip(phi.values()).all(|(a, b)| *a <= b + 1e-8));
}

#[test]
fn energy_decreases_along_newton_and_gradient_runs() {
    // gradient steps stall near critical points of u when p < 2
    for (method, ps) in [(Method::Newton, &[1.5, 2.0, 4.0][..]), (Method::BarzilaiBorwein, &[2.0, 4.0][..])] {
        for &p in ps {
            let spec = interval(p, 128, 0.5);
            let g = PotentialField::constant(&spec.mesh, 1.0);
            let opts = SolveOptions {
                method,
                tol_grad: 1e-8,
                max_iter: 50_000,
                ..SolveOptions::default()
            };
            let sol = solve_dirichlet(&spec, Some(&g), &GridFunction::zeros(spec.mesh.clone()), &opts).unwrap();
            assert!(sol.trace.monotone.iter().all(|&b| b), "{method:?} p={p}");
            assert!(sol.rel_grad <= 1e-8);
        }
    }
}

#[test]
fn solutions_respect_symmetry() {
    let spec = interval(3.0, 200, 0.0);
    let g = PotentialField::constant(&spec.mesh, 1.0);
    let u = solve_dirichlet(&spec, Some(&g), &GridFunction::zeros(spec.mesh.clone()), &SolveOptions::default())
        .unwrap()
        .u;
    let v = u.values();
    for i in 0..v.len() {
        assert!((v[i] - v[v.len() - 1 - i]).abs() <= 1e-9);
    }
}

#[test]
fn singular_range_uses_regularization_ladder() {
    // -(|u'|^{-1/2} u')' = 1 has u' = sgn(1/2 - x) |1/2 - x|^2
    let spec = interval(1.5, 512, 0.0);
    let g = PotentialField::constant(&spec.mesh, 1.0);
    let sol = solve_dirichlet(&spec, Some(&g), &GridFunction::zeros(spec.mesh.clone()), &SolveOptions::default())
        .unwrap();
    assert!(sol.rel_grad <= 1e-10);
    for (x, u) in spec.mesh.coords().iter().zip(sol.u.values()) {
        let exact = (0.125 - (x[0] - 0.5).abs().powi(3)) / 3.0;
        assert!((u - exact).abs() <= 1e-4, "{x:?}");
    }
}

#[test]
fn nonhomogeneous_boundary_data() {
    // linear data is p-harmonic for every p
    let spec = interval(2.5, 64, 0.0);
    let f = GridFunction::from_fn(spec.mesh.clone(), |x| 1.0 + 2.0 * x[0]).unwrap();
    let u = solve_dirichlet(&spec, None, &f, &SolveOptions::default()).unwrap().u;
    assert!(u.sup_distance(&f) <= 1e-9);
}

#[test]
fn weak_comparison_passes_and_detects_hypotheses() {
    let spec = interval(2.0, 128, 1.0);
    let g = PotentialField::constant(&spec.mesh, 1.0);
    let half = g.scaled(0.5);
    let one = GridFunction::from_fn(spec.mesh.clone(), |_| 1.0).unwrap();
    let opts = SolveOptions::default();
    let u2 = solve_dirichlet(&spec, Some(&g), &one, &opts).unwrap().u;
    let u1 = solve_dirichlet(&spec, Some(&half), &one, &opts).unwrap().u;
    let r = wcp_check(&spec, &u1, &u2, &g).unwrap();
    assert_eq!(r.status, WcpStatus::Pass, "{r:?}");
    // the reversed pair violates Q'[u1] <= Q'[u2]
    let r = wcp_check(&spec, &u2, &u1, &half).unwrap();
    assert_eq!(r.status, WcpStatus::Inapplicable);
    // negative lambda1 voids the principle
    let bad = interval(2.0, 128, -20.0);
    let r = wcp_check(&bad, &u1, &u2, &g).unwrap();
    assert_eq!(r.status, WcpStatus::Inapplicable);
    assert!(r.lambda1 < 0.0);
}

#[test]
fn two_dimensional_torsion() {
    let m = Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 32, 32).unwrap());
    let spec = ProblemSpec::isotropic(2.0, m.clone(), PotentialField::zero(&m)).unwrap();
    let g = PotentialField::constant(&m, 1.0);
    let u = solve_dirichlet(&spec, Some(&g), &GridFunction::zeros(m.clone()), &SolveOptions::default())
        .unwrap()
        .u;
    // torsion function of the unit square: 0.07367 at the centre
    let c = m.nearest_node([0.5, 0.5]).0;
    assert_relative_eq!(u.value(c), 0.073671, max_relative = 5e-3);
    assert!(u.min() >= 0.0);
}
