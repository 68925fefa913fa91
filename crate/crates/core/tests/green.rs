use std::sync::Arc;

use approx::assert_relative_eq;
use qcrit::criticality::Verdict;
use qcrit::green::*;
use qcrit::mesh::*;
use qcrit::qcore::*;
use qcrit::solver::{solve_dirichlet, SolveOptions};

fn unit_interval(p: f64, n: usize, v: f64) -> ProblemSpec {
    let m = Arc::new(Mesh::interval(0.0, 1.0, n, 1).unwrap());
    let v = PotentialField::constant(&m, v);
    ProblemSpec::isotropic(p, m, v).unwrap()
}

fn green_1d(x: f64, y: f64) -> f64 {
    if x <= y {
        x * (1.0 - y)
    } else {
        y * (1.0 - x)
    }
}

#[test]
fn interval_green_function_for_p2() {
    let spec = unit_interval(2.0, 2048, 0.0);
    let r = green_function(&[spec], [0.5, 0.0], &GreenOptions::default(), Some(Verdict::Subcritical)).unwrap();
    assert_eq!(r.verdict, GreenVerdict::GreenExists, "{}", r.note);
    assert!(r.stabilized);
    assert_eq!(r.profile.classification, Singularity::RemovableBounded);
    assert_relative_eq!(r.profile.pole_value.unwrap() * r.normalization.scale, 0.25, max_relative = 1e-3);
    let g = &r.g;
    // shape outside the source annuli, with no free constant left
    for (x, v) in g.mesh().coords().iter().zip(g.values()) {
        if (x[0] - 0.5).abs() >= 0.25 {
            let exact = green_1d(x[0], 0.5);
            assert!((v - exact).abs() <= 1e-2 * 0.25, "{x:?}: {v} vs {exact}");
        }
    }
    // positive off the boundary and the last hole
    let hole = r.levels.last().unwrap().hole_radius;
    for (i, (x, v)) in g.mesh().coords().iter().zip(g.values()).enumerate() {
        if !g.mesh().is_boundary(i) && (x[0] - 0.5).abs() > hole {
            assert!(*v > 0.0, "{x:?}");
        }
    }
}

#[test]
fn interval_green_function_for_p3() {
    let spec = unit_interval(3.0, 2048, 0.0);
    let r = green_function(&[spec], [0.5, 0.0], &GreenOptions::default(), None).unwrap();
    assert_eq!(r.verdict, GreenVerdict::GreenExists, "{}", r.note);
    let limit = r.profile.pole_value.unwrap() * r.normalization.scale;
    assert_relative_eq!(limit, 2f64.powf(-1.5), max_relative = 1e-2);
    // slope 2^(-1/2) on either side
    let quarter = r.g.mesh().nearest_node([0.25, 0.0]).0;
    assert_relative_eq!(r.g.value(quarter), 0.25 * 0.5f64.sqrt(), max_relative = 1e-2);
}

#[test]
fn square_green_function_blows_up_logarithmically() {
    let m = Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 128, 128).unwrap());
    let spec = ProblemSpec::isotropic(2.0, m.clone(), PotentialField::zero(&m)).unwrap();
    let opts = GreenOptions {
        levels: 6,
        holes: HoleSchedule::Geometric { base: 2.0 },
        ..GreenOptions::default()
    };
    let r = green_function(&[spec], [0.5, 0.5], &opts, None).unwrap();
    assert_eq!(r.profile.classification, Singularity::Blowup, "{:?}", r.profile);
    assert_eq!(r.verdict, GreenVerdict::GreenExists, "{}", r.note);
    // G ~ log(1/r) / (2 pi)
    assert!(r.profile.log_slope > 0.0);
    assert!(r.profile.log_slope_spread.unwrap() <= 0.2, "{:?}", r.profile.log_slope_spread);
    let inner = r.profile.radii.iter().position(|&x| x <= 0.25).unwrap();
    let k = r.profile.radii.len() - 1;
    let slope = r.normalization.scale * (r.profile.min[k] - r.profile.min[inner])
        / (r.profile.radii[inner] / r.profile.radii[k]).ln();
    assert_relative_eq!(slope, 1.0 / (2.0 * std::f64::consts::PI), max_relative = 0.1);
}

/// Nested intervals `(-2^k, 2^k)`: uniform on `(-1, 1)`, log-graded outside.
fn doubling_line(count: usize) -> Vec<Arc<Mesh>> {
    let mut nodes: Vec<f64> = (0..=2048).map(|i| -1.0 + i as f64 / 1024.0).collect();
    let outer = 64 * (count - 1);
    for j in 1..=outer {
        let x = 2f64.powf(j as f64 / 64.0);
        nodes.push(x);
        nodes.push(-x);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let parent = Mesh::from_nodes_1d(&nodes, 1).unwrap();
    (0..count)
        .map(|k| {
            let r = 2f64.powi(k as i32);
            Arc::new(parent.restrict(|e| parent.midpoint(e)[0].abs() < r).unwrap().0)
        })
        .collect()
}

#[test]
fn doubling_line_has_no_green_function() {
    let domains: Vec<ProblemSpec> = doubling_line(9)
        .into_iter()
        .map(|m| ProblemSpec::isotropic(2.0, m.clone(), PotentialField::zero(&m)).unwrap())
        .collect();
    let opts = GreenOptions {
        levels: 9,
        ..GreenOptions::default()
    };
    let r = green_function(&domains, [0.0, 0.0], &opts, Some(Verdict::Critical)).unwrap();
    assert_eq!(r.verdict, GreenVerdict::CriticalNoGreen, "{}", r.note);
    assert_eq!(r.profile.classification, Singularity::RemovableBounded);
    assert!(r.normalization.flux_ratio < 0.1);
    // the limit is the constant ground state
    let pole = r.profile.pole_value.unwrap();
    assert_relative_eq!(pole, 1.0, max_relative = 1e-2);
    for (x, v) in r.g.mesh().coords().iter().zip(r.g.values()) {
        if x[0].abs() <= 1.0 && x[0].abs() >= 0.25 {
            assert!((v - 1.0).abs() <= 1e-2, "{x:?}: {v}");
        }
    }
    assert!(r.monotone);
}

#[test]
fn disagreement_with_criticality_is_inconclusive() {
    let spec = unit_interval(2.0, 512, 0.0);
    let r = green_function(&[spec], [0.5, 0.0], &GreenOptions::default(), Some(Verdict::Critical)).unwrap();
    assert_eq!(r.verdict, GreenVerdict::Inconclusive);
    assert!(!r.note.is_empty());
}

#[test]
fn fundamental_solution_in_three_dimensions() {
    let m = Arc::new(Mesh::interval(0.01, 1.0, 4000, 3).unwrap());
    let u = GridFunction::from_fn(m, |x| 1.0 / x[0]).unwrap();
    let ladder = radius_ladder(0.8, 0.03, 0.5).unwrap();
    let p = classify_singularity(&u, [0.0, 0.0], &ladder, &ClassifyOptions::default()).unwrap();
    assert_eq!(p.classification, Singularity::Blowup);
    assert_relative_eq!(p.power_slope, -1.0, max_relative = 0.05);
    for (lo, hi) in p.min.iter().zip(&p.max) {
        assert!(lo <= hi);
    }
}

#[test]
fn scaling_covariance() {
    let r = 2.0;
    let base = Arc::new(Mesh::interval(0.0, 1.0, 512, 1).unwrap());
    let small = Arc::new(base.scaled_down(r).unwrap());
    let v = PotentialSpec::Const { c: 1.0 };
    let spec = ProblemSpec::from_catalog(2.0, base.clone(), &MatrixSpec::Identity, &v).unwrap();
    let vr = PotentialField::from_spec_scaled(&v, &small, 2.0, r).unwrap();
    let spec_r = ProblemSpec::isotropic(2.0, small.clone(), vr).unwrap();
    assert_relative_eq!(spec_r.v.get(0), 4.0);

    // Dirichlet problem with a source
    let f = PotentialField::from_elements(&base, (0..512).map(|e| 1.0 + base.midpoint(e)[0]).collect()).unwrap();
    let fr = PotentialField::from_elements(
        &small,
        (0..512).map(|e| r * r * (1.0 + r * small.midpoint(e)[0])).collect(),
    )
    .unwrap();
    let opts = SolveOptions::default();
    let u = solve_dirichlet(&spec, Some(&f), &GridFunction::zeros(base.clone()), &opts).unwrap().u;
    let ur = solve_dirichlet(&spec_r, Some(&fr), &GridFunction::zeros(small.clone()), &opts).unwrap().u;
    assert!(u.values().iter().zip(ur.values()).all(|(a, b)| (a - b).abs() <= 1e-8));

    // minimal-growth levels
    let g = minimal_growth_solution(&[spec], [0.5, 0.0], &GreenOptions::default()).unwrap();
    let gr = minimal_growth_solution(&[spec_r], [0.25, 0.0], &GreenOptions::default()).unwrap();
    assert!(g.u.values().iter().zip(gr.u.values()).all(|(a, b)| (a - b).abs() <= 1e-8));
}

#[test]
fn minimal_growth_against_supersolutions() {
    let spec = unit_interval(2.0, 1024, 0.0);
    let g = minimal_growth_solution(&[spec.clone()], [0.5, 0.0], &GreenOptions::default()).unwrap();
    let m = spec.mesh.clone();
    let candidates = [
        GridFunction::from_fn(m.clone(), |_| 1.0).unwrap(),
        GridFunction::from_fn(m.clone(), |x| 0.1 + x[0]).unwrap(),
        GridFunction::from_fn(m.clone(), |x| 1.0 + x[0] * (1.0 - x[0])).unwrap(),
    ];
    for v in &candidates {
        let c = minimal_growth_comparison(&spec, &g.u, v, [0.5, 0.0], 0.3, 1e-8).unwrap();
        assert!(c.supersolution);
        assert!(c.holds, "{c:?}");
    }
    // a subsolution may dip below u
    let dip = GridFunction::from_fn(m, |x| 1.0 - x[0] * (1.0 - x[0])).unwrap();
    let c = minimal_growth_comparison(&spec, &g.u, &dip, [0.5, 0.0], 0.3, 1e-8).unwrap();
    assert!(!c.supersolution);
}

#[test]
fn levels_record_harnack_and_flux() {
    let spec = unit_interval(2.0, 1024, 1.0);
    let g = minimal_growth_solution(&[spec], [0.5, 0.0], &GreenOptions::default()).unwrap();
    assert_eq!(g.levels.len(), 8);
    assert!(g.levels[0].flux.is_none());
    assert!(g.levels[1..].iter().all(|l| l.flux.unwrap() > 0.0));
    assert!(g.levels.iter().all(|l| l.harnack.unwrap() >= 1.0));
    assert!(g.stabilized);
    assert!(g.monotone);
}
