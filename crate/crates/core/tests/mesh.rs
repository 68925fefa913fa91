use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;
use qcrit::mesh::*;

#[test]
fn radial_weights_integrate_sphere_volumes() {
    // int_{1/2}^1 r^2 dr; the weights leave out the sphere area
    let m = Mesh::interval(0.5, 1.0, 4000, 3).unwrap();
    let vol = m.integrate(&vec![1.0; m.num_elements()]).unwrap();
    assert_relative_eq!(vol, (1.0 - 0.125) / 3.0, max_relative = 1e-7);
}

#[test]
fn exhaustion_members_are_nested() {
    let p = ExhaustionParams::new(ExhaustionKind::IntervalGrowing, RadiusScale::Geometric { base: 2.0 }, 0, 256)
        .with_anchors(vec![[0.0, 0.0]]);
    let s = make_exhaustion(&p, 4).unwrap();
    assert_eq!(s.len(), 4);
    for w in s.members.windows(2) {
        assert!(w[0].radius < w[1].radius);
        let next = w[0].to_next.as_ref().unwrap();
        for (i, &j) in next.iter().enumerate() {
            assert_eq!(w[0].mesh.node(i), w[1].mesh.node(j));
        }
    }
    // the anchor is a node of every member
    for k in 0..s.len() {
        assert!(s.anchor_in(k, 0).is_some());
    }
}

#[test]
fn zero_extension_preserves_values() {
    let p = ExhaustionParams::new(ExhaustionKind::SquareGrowing, RadiusScale::Linear, 1, 12);
    let s = make_exhaustion(&p, 3).unwrap();
    let u = GridFunction::from_fn(s.members[0].mesh.clone(), |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1])).unwrap();
    let big = s.zero_extend(&u, 0, 2).unwrap();
    assert_relative_eq!(big.max(), u.max());
    assert_relative_eq!(big.lp_norm(2.0), u.lp_norm(2.0), max_relative = 1e-12);
}

#[test]
fn field_csv_has_header_and_rows() {
    let m = Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap());
    let u = GridFunction::from_fn(m.clone(), |x| x[0] + x[1]).unwrap();
    let mut out = Vec::new();
    write_field_csv(&u, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,x,y,value");
    assert_eq!(lines.len(), m.num_nodes() + 1);
}

proptest! {
    #[test]
    fn gradient_of_affine_is_exact(a in -3.0f64..3.0, b in -3.0f64..3.0, n in 2usize..12) {
        let m = Arc::new(Mesh::rectangle(-1.0, 0.0, 1.0, 2.0, n, n + 1).unwrap());
        let u = GridFunction::from_fn(m.clone(), |x| a * x[0] + b * x[1] + 1.0).unwrap();
        for g in m.gradient(&u).unwrap() {
            prop_assert!((g[0] - a).abs() <= 1e-10 && (g[1] - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn measures_sum_to_the_box(w in 0.1f64..5.0, h in 0.1f64..5.0, n in 2usize..10) {
        let m = Mesh::rectangle(0.0, 0.0, w, h, n, n).unwrap();
        prop_assert!((m.total_measure() - w * h).abs() <= 1e-10 * w * h);
    }
}
