use super::*;
use crate::labyrinth::{build_labyrinth_shell, Shell};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ball(center: Vec<Complex64>, radius: f64) -> Convex {
    Convex::Ball { center: CPoint::new(center), radius }
}

fn quick() -> MoverOptions {
    MoverOptions { fit_samples: 200, heldout_samples: 500, ..MoverOptions::default() }
}

#[test]
fn no_pieces_gives_empty_chain() {
    let spec = MoveSpec {
        pieces: vec![ball(vec![c(0.0, 0.0); 2], 0.5)],
        motions: vec![Motion::identity(2)],
        delta: 1e-3,
        piece_delta: None,
    };
    let (chain, rep) = lemma_starshaped(&spec, &quick()).unwrap();
    assert!(chain.is_empty());
    assert_eq!(rep.per_piece_error, vec![0.0]);
    assert!(rep.pass);
}

#[test]
fn single_ball_translation() {
    let spec = MoveSpec {
        pieces: vec![ball(vec![c(0.0, 0.0); 2], 0.3), ball(vec![c(1.0, 0.0), c(0.0, 0.0)], 0.05)],
        motions: vec![Motion::identity(2), Motion::translation(&[c(0.5, 0.0), c(0.0, 0.5)])],
        delta: 1e-3,
        piece_delta: None,
    };
    let (chain, rep) = lemma_starshaped(&spec, &quick()).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.per_piece_error.iter().all(|&e| e < 1e-3));
    // 4x denser held-out oracle: at most twice the tolerance
    let dense = certify(&spec, &chain, 2000, 99).unwrap();
    assert!(dense.iter().all(|&e| e < 2e-3), "{dense:?}");
}

#[test]
fn squeeze_then_translate() {
    let spec = MoveSpec {
        pieces: vec![ball(vec![c(0.0, 0.0); 2], 0.3), ball(vec![c(1.0, 0.0), c(0.0, 0.0)], 0.05)],
        motions: vec![
            Motion::identity(2),
            Motion { scale: 0.5, translation: vec![c(0.0, 0.0), c(0.0, 1.0)] },
        ],
        delta: 1e-3,
        piece_delta: Some(1e-2),
    };
    let (_, rep) = lemma_starshaped(&spec, &quick()).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.moves.iter().any(|m| m.kind == "squeeze"));
}

#[test]
fn colliding_targets_rejected() {
    let spec = MoveSpec {
        pieces: vec![
            ball(vec![c(0.0, 0.0); 2], 0.3),
            ball(vec![c(1.0, 0.0), c(0.0, 0.0)], 0.05),
            ball(vec![c(-1.0, 0.0), c(0.0, 0.0)], 0.05),
        ],
        motions: vec![
            Motion::identity(2),
            Motion::translation(&[c(0.0, 0.0), c(1.0, 0.0)]),
            Motion::translation(&[c(2.0, 0.0), c(1.0, 0.0)]),
        ],
        delta: 1e-3,
        piece_delta: None,
    };
    assert!(matches!(lemma_starshaped(&spec, &quick()), Err(Error::TargetsCollide)));
}

#[test]
fn moving_k0_is_invalid() {
    let spec = MoveSpec {
        pieces: vec![ball(vec![c(0.0, 0.0); 2], 0.3)],
        motions: vec![Motion::translation(&[c(1.0, 0.0), c(0.0, 0.0)])],
        delta: 1e-3,
        piece_delta: None,
    };
    assert!(matches!(lemma_starshaped(&spec, &quick()), Err(Error::InvalidInput(_))));
}

#[test]
fn plate_samples_lie_in_plate() {
    let shell = Shell { index: 0, inner: 0.5, outer: 0.9 };
    let plates = build_labyrinth_shell(&shell, 2, 1, 0.004).unwrap();
    let mut r = rng(3);
    for p in &plates {
        let piece = Convex::Plate(p.clone());
        for z in sample_piece(&mut r, &piece, 300, 0.5) {
            assert!(p.distance(&z) < 1e-12);
        }
    }
}

#[test]
fn empty_plates_give_identity() {
    let b = BallRegion::centered(2, 0.5).unwrap();
    let (theta, rep) = lemma_main(&b, &[], &AutChain::identity(2), 2.0, 0.01, 5e-3, &MainOptions::default()).unwrap();
    assert!(theta.is_empty());
    assert!(rep.pass);
}

#[test]
fn already_avoided_plates_stay() {
    // with r smaller than every plate's coordinates the slab misses the plates already
    let shell = Shell { index: 0, inner: 0.5, outer: 0.9 };
    let plates: Vec<Plate> = build_labyrinth_shell(&shell, 2, 1, 0.004)
        .unwrap()
        .into_iter()
        .filter(|p| head_sup(&p.center.coords) > 0.3)
        .collect();
    assert!(!plates.is_empty());
    let b = BallRegion::centered(2, 0.5).unwrap();
    let (theta, rep) = lemma_main(&b, &plates, &AutChain::identity(2), 0.05, 0.01, 5e-3, &MainOptions::default()).unwrap();
    assert!(theta.is_empty());
    assert!(rep.moved.iter().all(|&m| !m));
    assert!(rep.avoidance_pullback.iter().all(|&d| d > 0.0));
}

#[test]
fn stage_one_fixture() {
    let shell = Shell { index: 1, inner: 0.5, outer: 0.9 };
    let plates = build_labyrinth_shell(&shell, 2, 1, 0.002 * 0.4).unwrap();
    let b = BallRegion::centered(2, 0.5).unwrap();
    let opts = MainOptions { slab_check_samples: 20_000, ..MainOptions::default() };
    let (theta, rep) = lemma_main(&b, &plates, &AutChain::identity(2), 2.0, 0.01, 5e-3, &opts).unwrap();
    assert!(rep.moved.iter().all(|&m| m));
    assert!(rep.b_sup < 0.01, "{}", rep.b_sup);
    assert!(rep.avoidance_pullback.iter().all(|&d| d > 0.0), "{:?}", rep.avoidance_pullback);
    assert!(rep.avoidance_forward.iter().all(|&d| d > 0.0), "{:?}", rep.avoidance_forward);
    assert!(rep.pass);
    assert!(!theta.is_empty());
}
