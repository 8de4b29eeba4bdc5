//! Closed-form oracles through the public API.

use leafball_core::geometry::{polyline_length, CPoint};
use leafball_core::labyrinth::{estimate_min_avoiding_length, Shell};
use leafball_core::pipeline::{emit_plot_data, run_pipeline, RunConfig};
use leafball_core::sampling::{random_chain, random_point_in_ball, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chains_invert(seed in 0u64..10_000, len in 1usize..60) {
        let mut g = rng(seed);
        let chain = random_chain(&mut g, 2, len);
        let p = random_point_in_ball(&mut g, 2, 2.0);
        let back = chain.eval_inverse(&chain.eval(&p).unwrap()).unwrap();
        prop_assert!(back.dist(&p) < 1e-10);
    }

    #[test]
    fn polyline_length_is_additive(xs in proptest::collection::vec(-1.0f64..1.0, 8..40)) {
        let pts: Vec<CPoint> = xs.chunks_exact(4).map(CPoint::from_reals).collect();
        prop_assume!(pts.len() >= 3);
        let k = pts.len() / 2;
        let whole = polyline_length(&pts).unwrap();
        let split = polyline_length(&pts[..=k]).unwrap() + polyline_length(&pts[k..]).unwrap();
        prop_assert!((whole - split).abs() <= 1e-12 * whole.max(1.0));
    }
}

#[test]
fn empty_shell_length_is_its_width() {
    let shell = Shell { index: 1, inner: 0.3, outer: 0.6 };
    let est = estimate_min_avoiding_length(&shell, &[], 0.005).unwrap();
    assert!((est.grid_length - 0.3).abs() < 1e-12);
    assert!((est.lower_estimate - (0.3 - 0.005 * 2.0)).abs() < 1e-12);
}

#[test]
fn identity_run_lengths_are_flat_diameters() {
    let cfg = RunConfig::from_toml(
        "n = 2\nstages = 0\neps0 = 0.05\nseed = 3\nrho_schedule = [0.4, 0.8]\n\
         [[leaves.anchors]]\nc = [[0.0, 0.0]]\n[[leaves.anchors]]\nc = [[0.3, 0.4]]\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&cfg, dir.path()).unwrap();
    let tol = cfg.tol_boundary();
    let lens = &out.summary.leaf_lengths;
    // the fibre over c is a disc of radius sqrt((1 - tol)^2 - |c|^2)
    assert!((lens[0].length - 2.0 * (1.0 - tol)).abs() < 1e-9);
    let rad = ((1.0 - tol) * (1.0 - tol) - 0.25f64).sqrt();
    assert!((lens[1].length - 2.0 * rad).abs() < 1e-9, "{}", lens[1].length);
    let csv = std::fs::read_to_string(&emit_plot_data(dir.path()).unwrap()[0]).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
