//! Finite-stage construction of a nonsingular holomorphic foliation of the unit ball
//! of C^n by properly embedded discs, together with the sampled certificates that
//! make each stage auditable.
//!
//! The pipeline is: build a labyrinth of convex plates in concentric shells
//! ([`labyrinth`]), twist the vertical-line foliation by chains of shears so that
//! larger and larger slabs avoid the plates ([`mover`], [`induction`]), then trace
//! leaves of the resulting foliation and measure them ([`leaf`]).

pub mod automorphism;
pub mod convex;
pub mod error;
pub mod geometry;
pub mod induction;
pub mod labyrinth;
pub mod leaf;
pub mod mover;
pub mod pipeline;
pub mod poly;
pub mod sampling;

pub use automorphism::{compose, AutChain, ElementaryAut};
pub use error::{Error, Result};
pub use induction::{convergence_report, omega_membership, InductionConfig, InductionState};
pub use labyrinth::{Labyrinth, Shell};
pub use leaf::{completeness_evidence, foliation_partition_check, leaf_clearance, trace_leaf, LeafTrace};
pub use mover::{lemma_main, lemma_starshaped, MainOptions, MoveSpec, Motion, MoverOptions};
pub use geometry::{polyline_length, region_contains, BallRegion, CPoint, Region, SlabRegion};
pub use pipeline::{emit_plot_data, run_pipeline, RunConfig, Summary};
pub use poly::PolyFunc;
