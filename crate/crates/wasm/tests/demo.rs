use approx::assert_relative_eq;
use qcrit_wasm::*;

#[test]
fn eigenpair_tracks_the_closed_form() {
    for p in [1.5, 2.0, 3.0] {
        let r = compute_eigenpair(p, 256).unwrap();
        assert_relative_eq!(r.lambda1, r.exact, max_relative = 1e-3);
        assert_eq!(r.x.len(), r.v.len());
        assert!(r.v.iter().all(|&v| v >= 0.0));
    }
    let json: serde_json::Value = serde_json::from_str(&eigenpair(2.0, 64).unwrap()).unwrap();
    assert!(json["lambda1"].as_f64().unwrap() > 9.8);
}

#[test]
fn dirichlet_solve_matches_the_torsion_profile() {
    let r = compute_dirichlet(2.0, 0.0, 1.0, 128).unwrap();
    for (x, u) in r.x.iter().zip(&r.u) {
        assert!((u - 0.5 * x * (1.0 - x)).abs() <= 1e-8);
    }
    assert!(compute_dirichlet(2.0, 0.0, 1.0, 1).is_err());
}

#[test]
fn hardy_probe_sides_of_the_threshold() {
    let sub = compute_hardy(0.2, 3, false).unwrap();
    assert_eq!(sub.verdict, "subcritical");
    let sup = compute_hardy(0.4, 3, true).unwrap();
    assert_eq!(sup.verdict, "supercritical_evidence");
    let t = sup.threshold.unwrap();
    assert!((t - sup.threshold_exact).abs() <= 5e-3, "{t} vs {}", sup.threshold_exact);
    assert!(compute_hardy(0.2, 9, false).is_err());
}
