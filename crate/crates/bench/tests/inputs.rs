//! The benchmark inputs are well-formed (benches themselves are not run by `cargo test`).

use leafball_core::labyrinth::{build_labyrinth_shell, Shell};
use leafball_core::sampling::{random_chain, rng};

#[test]
fn bench_inputs_build() {
    let shell = Shell { index: 1, inner: 0.5, outer: 0.9 };
    let plates = build_labyrinth_shell(&shell, 2, 1, 0.002 * shell.width()).unwrap();
    assert!(!plates.is_empty());
    assert_eq!(random_chain(&mut rng(1), 2, 200).len(), 200);
}
