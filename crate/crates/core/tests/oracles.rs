//! Values computed independently (brute force in another language, or
//! high-precision quadrature) and frozen here.

use trl_core::additive::r3_exhaustive;
use trl_core::lattice::radius_for_volume;
use trl_core::pipeline::{run_box_pipeline, RunOptions};
use trl_core::probability::{exact_sphere_closure, lower_bound_integral, optimize_dim, theory_curves, Curve};

// r_3(n), n = 1..=25, from a plain subset search.
const R3: [usize; 25] = [1, 2, 2, 3, 4, 4, 4, 4, 5, 5, 6, 6, 7, 8, 8, 8, 8, 8, 8, 9, 9, 9, 9, 10, 10];

#[test]
fn r3_table() {
    for (i, &want) in R3.iter().enumerate() {
        let (got, w) = r3_exhaustive(i + 1).unwrap();
        assert_eq!(got, want, "n = {}", i + 1);
        assert_eq!(w.len(), want);
    }
}

#[test]
fn sphere_closure_values() {
    let cases = [
        (2, 1.0 / 3.0),
        (3, 0.25),
        (4, 0.19550110947788532),
        (5, 0.15625),
        (6, 0.12658499755016131),
        (7, 0.103515625),
        (10, 0.05865340150711908),
        (20, 0.010495752335082406),
        (30, 0.0020903192574772963),
        (60, 2.0403707296485153e-5),
    ];
    for (d, want) in cases {
        let got = exact_sphere_closure(d).unwrap().value;
        assert!(((got - want) / want).abs() < 1e-10, "D = {d}: {got} vs {want}");
    }
}

#[test]
fn lower_bound_integral_values() {
    let cases = [
        (2, 5.0 / 24.0),
        (3, 0.14912943688435079),
        (10, 0.025361736787518038),
        (30, 0.00058129064511242172),
    ];
    for (d, want) in cases {
        let chain = lower_bound_integral(d).unwrap();
        assert!(((chain.integral - want) / want).abs() < 1e-10, "D = {d}: {}", chain.integral);
        assert!(chain.final_holds && chain.window_holds);
    }
}

#[test]
fn new_curve_at_one_million() {
    let opt = optimize_dim(1e6, Curve::New).unwrap();
    assert_eq!(opt.d_best, 14);
    assert!((opt.value - 0.018547525916711743).abs() < 1e-15);
    assert!((theory_curves(13, 1e6).new - 0.018400146844856673).abs() < 1e-15);
}

#[test]
fn ball_radius_for_volume() {
    assert!((radius_for_volume(4, 1e4).unwrap() - 6.709382669654139).abs() < 1e-12);
}

#[test]
fn box_d1_m2_enumeration() {
    let out = run_box_pipeline(1, 2, &RunOptions::default()).unwrap();
    let r = out.report;
    assert_eq!((r.counts.a0, r.counts.classes_present, r.counts.color, r.counts.a), (7, 3, 1, 4));
    assert_eq!((r.graph.edges, r.graph.triangles, r.graph.order), (12, 4, 9));
}
