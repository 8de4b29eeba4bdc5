use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate path")]
    DegeneratePath,
    #[error("empty shrunk region")]
    EmptyShrunkRegion,
    #[error("invalid radius schedule: {0}")]
    InvalidRadiusSchedule(String),
    #[error("plates overlap; reduce density or thickness (margin {margin:e})")]
    PlatesOverlap { margin: f64 },
    #[error("unresolved obstacles: thickness {thickness} < 2 x grid step {step}")]
    UnresolvedObstacles { thickness: f64, step: f64 },
    #[error("grid search exceeded its node budget of {0}")]
    SearchBudget(usize),
    #[error("escaped to infinity")]
    EscapedToInfinity,
    #[error("non-invertible elementary map")]
    NonInvertible,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("plateau fit failed; increase degree or margins (achieved {achieved:e}, wanted {wanted:e})")]
    PlateauFitFailed { achieved: f64, wanted: f64 },
    #[error("on and off sample sets overlap")]
    OverlappingSets,
    #[error("target images not disjoint")]
    TargetsCollide,
    #[error("no admissible route for piece {0}")]
    NoRoute(usize),
    #[error("complement too crowded; shrink pieces")]
    ComplementCrowded,
    #[error("induction broken at stage {0}")]
    InductionBroken(usize),
    #[error("avoidance violated at stage {stage} for shell {shell} (margin {margin:e})")]
    AvoidanceViolated { stage: usize, shell: usize, margin: f64 },
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
    #[error("telescoping bound violated for i={i}, k={k}: {value:e} >= {bound:e}")]
    TelescopingViolated { i: usize, k: usize, value: f64, bound: f64 },
    #[error("anchor not in domain")]
    AnchorNotInDomain,
    #[error("leaf hits labyrinth; certificates inconsistent")]
    LeafHitsLabyrinth,
    #[error("chain arithmetic degraded (residual {0:e})")]
    ChainDegraded(f64),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
