use super::*;
use crate::convex::Plate;
use crate::induction::InductionConfig;
use crate::labyrinth::build_shells;

fn c0() -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0)]
}

fn open_labyrinth(rho: &[f64]) -> Labyrinth {
    let shells = build_shells(rho).unwrap();
    let k = shells.len();
    Labyrinth {
        dim: 2,
        deltas: shells.iter().map(|s| s.width()).collect(),
        shells,
        plates: vec![Vec::new(); k],
        grid_steps: vec![0.0; k],
        margins: vec![0.0; k],
    }
}

fn identity_state(stages: usize) -> InductionState {
    let config = InductionConfig {
        choose_samples: 500,
        verify_samples: 1000,
        b_samples: 500,
        c_samples: 100,
        slab_samples: 1000,
        e_samples: 1000,
        ..InductionConfig::default()
    };
    let mut s = InductionState::new(config, open_labyrinth(&[0.3, 0.6, 0.9])).unwrap();
    s.run(stages).unwrap();
    s
}

#[test]
fn identity_leaf_is_a_diameter() {
    let s = identity_state(0);
    let tol = 0.05;
    let t = trace_leaf(&c0(), Complex64::new(0.0, 0.0), &s, 0, 0.01, 10_000, tol).unwrap();
    assert_eq!(t.termination, (Termination::ExitedBall, Termination::ExitedBall));
    assert!((t.length() - 2.0 * (1.0 - tol)).abs() < 1e-9, "{}", t.length());
    assert!(t.max_chord() <= 0.01 + 1e-12);
    assert!(t.invariance_residual < 1e-14);
    assert_eq!(t.points[t.anchor_index].norm(), 0.0);
}

#[test]
fn refinement_does_not_shrink_length() {
    let s = identity_state(1);
    let a = trace_leaf(&[Complex64::new(0.1, 0.2)], Complex64::new(0.05, 0.0), &s, 1, 0.02, 10_000, 0.05).unwrap();
    let b = trace_leaf(&[Complex64::new(0.1, 0.2)], Complex64::new(0.05, 0.0), &s, 1, 0.01, 10_000, 0.05).unwrap();
    assert!(b.length() >= a.length() * (1.0 - 1e-3));
    let dense = dense_length(&b, &s, 4000).unwrap();
    assert!((dense - b.length()).abs() < 1e-3 * dense);
}

#[test]
fn anchor_outside_domain_is_rejected() {
    let s = identity_state(1);
    let far = trace_leaf(&c0(), Complex64::new(0.99, 0.0), &s, 1, 0.01, 100, 0.05);
    assert!(matches!(far, Err(Error::AnchorNotInDomain)));
    let dims = trace_leaf(&[], Complex64::new(0.0, 0.0), &s, 1, 0.01, 100, 0.05);
    assert!(matches!(dims, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn empty_labyrinth_gives_infinite_clearance() {
    let s = identity_state(1);
    let t = trace_leaf(&c0(), Complex64::new(0.0, 0.0), &s, 1, 0.01, 10_000, 0.05).unwrap();
    let cl = leaf_clearance(&t, &s.labyrinth);
    assert_eq!(cl.len(), 2);
    assert!(cl.iter().all(|c| c.clearance.is_none() && c.points > 0));
}

#[test]
fn evidence_counts_both_halves() {
    let s = identity_state(2);
    let t = trace_leaf(&c0(), Complex64::new(0.0, 0.0), &s, 2, 0.01, 10_000, 0.05).unwrap();
    let ev = completeness_evidence(0, &t, &s.labyrinth, &s, 0.1).unwrap();
    assert_eq!(ev.i0, Some(1));
    // both halves cross (0.3, 0.6) and (0.6, 0.9)
    assert_eq!(ev.crossed, vec![1, 1, 2, 2]);
    assert!((ev.lower_bound - 1.2).abs() < 1e-12);
    assert!(ev.pass && ev.traced_length >= ev.lower_bound);
}

#[test]
fn planted_plate_is_hit() {
    let s = identity_state(1);
    let mut lab = s.labyrinth.clone();
    lab.plates[0].push(Plate {
        center: CPoint::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.45, 0.0)]),
        normal: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        radius: 0.05,
        thickness: 0.002,
    });
    let t = trace_leaf(&c0(), Complex64::new(0.0, 0.0), &s, 1, 0.01, 10_000, 0.05).unwrap();
    let cl = leaf_clearance(&t, &lab);
    assert_eq!(cl[0].clearance, Some(0.0));
    assert!(matches!(completeness_evidence(0, &t, &lab, &s, 0.1), Err(Error::LeafHitsLabyrinth)));
    // a leaf far from the plate keeps a positive clearance
    let t2 = trace_leaf(&[Complex64::new(0.2, 0.0)], Complex64::new(0.0, 0.0), &s, 1, 0.01, 10_000, 0.05).unwrap();
    let d = leaf_clearance(&t2, &lab)[0].clearance.unwrap();
    assert!((d - (0.2 - 0.05)).abs() < 1e-3, "{d}");
}

#[test]
fn partition_check_labels_leaves() {
    let s = identity_state(1);
    let pts = vec![
        CPoint::new(vec![Complex64::new(0.1, 0.0), Complex64::new(0.2, 0.3)]),
        CPoint::new(vec![Complex64::new(-0.4, 0.1), Complex64::new(0.0, 0.0)]),
    ];
    let rep = foliation_partition_check(&pts, &s, 1).unwrap();
    assert_eq!(rep.c_values[1], vec![Complex64::new(-0.4, 0.1)]);
    assert!(rep.max_residual < 1e-15);
}

#[test]
fn csv_has_header_and_rows() {
    let s = identity_state(0);
    let t = trace_leaf(&c0(), Complex64::new(0.0, 0.0), &s, 0, 0.1, 1000, 0.05).unwrap();
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("zeta_re,zeta_im,p1_re,p1_im,p2_re,p2_im,length"));
    assert_eq!(lines.count(), t.points.len());
}
