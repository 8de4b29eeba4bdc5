//! Batch driver: run configuration, the labyrinth -> induction -> leaf pipeline, and
//! the JSON/CSV artifacts it leaves in an output directory.
//!
//! Every artifact is a deterministic function of the configuration: no timestamps,
//! no timings, fixed column order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::{convergence_report, InductionConfig, InductionState, StageLedger, SCHEMA_VERSION};
use crate::labyrinth::Labyrinth;
use crate::leaf::{completeness_evidence, foliation_partition_check, trace_leaf, CompletenessEvidence};
use crate::mover::{MainOptions, MoverOptions};
use crate::sampling::{ball_samples, rng};
use crate::geometry::CPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabyrinthConfig {
    /// Plates per shell per direction layer (at least 1).
    pub density: usize,
    /// Plate half-thickness as a fraction of the shell width.
    pub thickness: f64,
    /// Grid step of the shortest-path oracle as a fraction of the shell width.
    pub grid: f64,
}

impl Default for LabyrinthConfig {
    fn default() -> Self {
        LabyrinthConfig { density: 1, thickness: 0.002, grid: 0.001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub choose: usize,
    pub verify: usize,
    pub ball: usize,
    pub plate: usize,
    pub slab: usize,
    pub distance: usize,
    pub fit: usize,
    pub heldout: usize,
    pub main_slab: usize,
    pub main_ball: usize,
    pub pullback: usize,
    pub telescoping: usize,
    pub partition: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let c = InductionConfig::default();
        SamplingConfig {
            choose: c.choose_samples,
            verify: c.verify_samples,
            ball: c.b_samples,
            plate: c.c_samples,
            slab: c.slab_samples,
            distance: c.e_samples,
            fit: c.main.mover.fit_samples,
            heldout: c.main.mover.heldout_samples,
            main_slab: c.main.slab_check_samples,
            main_ball: c.main.ball_check_samples,
            pullback: c.main.pullback_samples,
            telescoping: 10_000,
            partition: 1_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    /// Leaf label `c` as `[re, im]` pairs (n - 1 of them).
    pub c: Vec<[f64; 2]>,
    /// Starting fibre parameter `[re, im]`.
    #[serde(default)]
    pub zeta: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeafConfig {
    pub anchors: Vec<Anchor>,
    /// Max image chord while tracing.
    pub step: f64,
    /// Max accepted steps per half-leaf.
    pub budget: usize,
    /// Allowed relative shortfall of traced length below the certified bound.
    pub tolerance: f64,
}

impl Default for LeafConfig {
    fn default() -> Self {
        LeafConfig { anchors: vec![Anchor { c: vec![[0.0, 0.0]], zeta: [0.0, 0.0] }], step: 0.01, budget: 20_000, tolerance: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Number of induction stages `I`.
    pub stages: usize,
    pub eps0: f64,
    pub seed: u64,
    #[serde(default = "default_r_trunc")]
    pub r_trunc: f64,
    /// Radii `rho_1 < ... < rho_m` in (0, 1); shell `i` is `(rho_i, rho_{i+1})`.
    /// Defaults to `1 - 1/(i + 1)` for `i = 1..=stages + 1`.
    #[serde(default)]
    pub rho_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub labyrinth: LabyrinthConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default)]
    pub leaves: LeafConfig,
    /// Output directory used when none is given on the command line.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_r_trunc() -> f64 {
    10.0
}

fn default_max_degree() -> usize {
    MoverOptions::default().max_degree
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn rho(&self) -> Vec<f64> {
        match &self.rho_schedule {
            Some(r) => r.clone(),
            None => (1..=self.stages.max(1) + 1).map(|i| 1.0 - 1.0 / (i as f64 + 1.0)).collect(),
        }
    }

    /// Leaves are traced until `|p| >= 1 - tol_boundary`, half the gap beyond the last shell.
    pub fn tol_boundary(&self) -> f64 {
        0.5 * (1.0 - self.rho().last().copied().unwrap_or(0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n must be at least 2"));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(invalid(format!("eps0 must lie in (0, 1), got {}", self.eps0)));
        }
        if !(self.r_trunc > 0.0) {
            return Err(invalid("r_trunc must be positive"));
        }
        let rho = self.rho();
        if rho.len() < 2 || self.stages + 1 > rho.len() {
            return Err(invalid(format!("rho_schedule needs at least max(2, stages + 1) = {} radii", (self.stages + 1).max(2))));
        }
        crate::labyrinth::build_shells(&rho)?;
        let l = &self.labyrinth;
        if l.density == 0 || !(l.thickness > 0.0) || !(l.grid > 0.0) || l.thickness < 2.0 * l.grid {
            return Err(invalid("labyrinth needs density >= 1 and thickness >= 2 * grid > 0"));
        }
        if self.max_degree == 0 {
            return Err(invalid("max_degree must be positive"));
        }
        let lc = &self.leaves;
        if !(lc.step > 0.0) || lc.budget == 0 || !(lc.tolerance >= 0.0) {
            return Err(invalid("leaves need step > 0, budget > 0, tolerance >= 0"));
        }
        for (k, a) in lc.anchors.iter().enumerate() {
            if a.c.len() + 1 != self.n {
                return Err(invalid(format!("anchor {k} has {} coordinates, expected {}", a.c.len(), self.n - 1)));
            }
        }
        Ok(())
    }

    pub fn induction_config(&self) -> InductionConfig {
        let s = &self.sampling;
        InductionConfig {
            n: self.n,
            eps0: self.eps0,
            seed: self.seed,
            r_trunc: self.r_trunc,
            choose_samples: s.choose,
            verify_samples: s.verify,
            b_samples: s.ball,
            c_samples: s.plate,
            slab_samples: s.slab,
            e_samples: s.distance,
            main: MainOptions {
                mover: MoverOptions {
                    seed: self.seed,
                    max_degree: self.max_degree,
                    fit_samples: s.fit,
                    heldout_samples: s.heldout,
                    ..MoverOptions::default()
                },
                r_trunc: self.r_trunc,
                slab_check_samples: s.main_slab,
                ball_check_samples: s.main_ball,
                pullback_samples: s.pullback,
                ..MainOptions::default()
            },
            ..InductionConfig::default()
        }
    }

    pub fn build_labyrinth(&self) -> Result<Labyrinth> {
        let l = &self.labyrinth;
        Labyrinth::build(self.n, &self.rho(), l.density, l.thickness, l.grid)
    }
}

fn anchor_c(a: &Anchor) -> Vec<Complex64> {
    a.c.iter().map(|z| Complex64::new(z[0], z[1])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    pub stage: usize,
    pub check: String,
    /// `None` for vacuous checks.
    pub margin: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafLength {
    pub stage: usize,
    pub leaf_id: usize,
    pub length: f64,
    pub invariance_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config: RunConfig,
    pub stages_requested: usize,
    pub stages_completed: usize,
    pub pass: bool,
    /// Set when the run stopped early or a certificate failed.
    pub failure: Option<String>,
    pub deltas: Vec<f64>,
    pub delta_sum: f64,
    pub labyrinth_margins: Vec<f64>,
    pub r: Vec<f64>,
    pub eps: Vec<f64>,
    pub margins: Vec<MarginRow>,
    /// Worst telescoping margin `eps_i - sup |Phi_k o Phi_i^-1 - id|` per `i`.
    pub telescoping: Vec<(usize, Option<f64>)>,
    pub partition_residual: Option<f64>,
    pub leaf_lengths: Vec<LeafLength>,
    /// Leaf tracing or evidence failures, one message per problem.
    pub leaf_errors: Vec<String>,
}

/// Outcome of [`run_pipeline`]; the artifacts are already on disk.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub out: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn versioned<T: Serialize>(key: &str, value: &T) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    map.insert(key.into(), serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(map))?)
}

/// Builds the labyrinth and writes `labyrinth.json`.
pub fn run_labyrinth(config: &RunConfig, out: &Path) -> Result<Labyrinth> {
    config.validate()?;
    let lab = config.build_labyrinth()?;
    write(&out.join("labyrinth.json"), &versioned("labyrinth", &lab)?)?;
    Ok(lab)
}

fn margin_rows(ledger: &[StageLedger]) -> Vec<MarginRow> {
    ledger
        .iter()
        .flat_map(|l| {
            l.checks.iter().map(move |c| MarginRow { stage: l.stage, check: c.check.clone(), margin: c.margin, pass: c.pass })
        })
        .collect()
}

/// Traces every configured leaf for every completed stage `0..=state.stage`, writes
/// `traces/*.csv` and `evidence.json`, and returns lengths plus problems found.
pub fn run_traces(config: &RunConfig, state: &InductionState, out: &Path) -> Result<(Vec<LeafLength>, Vec<String>)> {
    let lc = &config.leaves;
    let tol = config.tol_boundary();
    let mut lengths = Vec::new();
    let mut errors = Vec::new();
    let mut evidence: Vec<CompletenessEvidence> = Vec::new();
    for (id, a) in lc.anchors.iter().enumerate() {
        let c = anchor_c(a);
        let zeta = Complex64::new(a.zeta[0], a.zeta[1]);
        for stage in 0..=state.stage {
            let trace = match trace_leaf(&c, zeta, state, stage, lc.step, lc.budget, tol) {
                Ok(t) => t,
                Err(e) => {
                    errors.push(format!("leaf {id} stage {stage}: {e}"));
                    continue;
                }
            };
            write(&out.join("traces").join(format!("leaf{id}_stage{stage}.csv")), &trace.to_csv())?;
            if !(trace.invariance_residual < crate::leaf::ROUND_TRIP_TOL) {
                errors.push(format!("leaf {id} stage {stage}: invariance residual {:e}", trace.invariance_residual));
            }
            lengths.push(LeafLength { stage, leaf_id: id, length: trace.length(), invariance_residual: trace.invariance_residual });
            if stage == state.stage {
                match completeness_evidence(id, &trace, &state.labyrinth, state, lc.tolerance) {
                    Ok(ev) => {
                        if !ev.pass {
                            errors.push(format!("leaf {id}: traced length below certified bound"));
                        }
                        evidence.push(ev);
                    }
                    Err(e) => errors.push(format!("leaf {id}: {e}")),
                }
            }
        }
    }
    write(&out.join("evidence.json"), &versioned("leaves", &evidence)?)?;
    Ok((lengths, errors))
}

/// Runs labyrinth, induction and leaf analysis, writing every artifact to `out`.
///
/// Module errors stop the induction but not the run: the artifacts produced so far are
/// written and `summary.json` carries the failure. `pass` is true only when every
/// requested stage completed and every certificate and leaf check passed.
pub fn run_pipeline(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let lab = run_labyrinth(config, out)?;
    let mut state = InductionState::new(config.induction_config(), lab)?;
    let mut failure = None;
    if let Err(e) = state.run(config.stages) {
        let notes: Vec<&str> = state
            .ledger
            .last()
            .map(|l| l.checks.iter().filter(|c| !c.pass).map(|c| c.note.as_str()).collect())
            .unwrap_or_default();
        failure = Some(if notes.is_empty() { e.to_string() } else { format!("{e}: {}", notes.join("; ")) });
    }
    write(&out.join("ledger.json"), &state.ledger_json()?)?;
    write(&out.join("state.json"), &versioned("state", &state)?)?;

    let mut telescoping = Vec::new();
    for i in 1..=state.stage {
        let mut g = rng(config.seed ^ 0x7e1e_5c0b ^ i as u64);
        let pts = ball_samples(&mut g, &CPoint::zero(config.n), state.rho(i), config.sampling.telescoping, 0.5);
        match convergence_report(&state, i, &pts) {
            Ok(rep) => telescoping.push((i, rep.worst_margin)),
            Err(e) => {
                telescoping.push((i, None));
                failure.get_or_insert(e.to_string());
            }
        }
    }

    let partition_residual = if state.stage > 0 {
        let mut g = rng(config.seed ^ 0x9a27);
        let last = state.rho(state.stage);
        let pts = ball_samples(&mut g, &CPoint::zero(config.n), last, config.sampling.partition, 0.0);
        match foliation_partition_check(&pts, &state, state.stage) {
            Ok(rep) => Some(rep.max_residual),
            Err(e) => {
                failure.get_or_insert(e.to_string());
                None
            }
        }
    } else {
        Some(0.0)
    };

    let (leaf_lengths, leaf_errors) = run_traces(config, &state, out)?;
    let margins = margin_rows(&state.ledger);
    let complete = state.stage == config.stages;
    if failure.is_none() && !complete {
        failure = Some(format!("stopped after stage {}", state.stage));
    }
    let pass = failure.is_none()
        && leaf_errors.is_empty()
        && state.ledger.iter().all(|l| l.pass)
        && margins.iter().all(|m| m.pass && m.margin.map_or(true, |x| x > 0.0));
    if failure.is_none() && !pass {
        failure = Some("a certificate failed".into());
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        stages_requested: config.stages,
        stages_completed: state.stage,
        pass,
        failure,
        delta_sum: state.labyrinth.deltas.iter().take(config.stages).sum(),
        deltas: state.labyrinth.deltas.clone(),
        labyrinth_margins: state.labyrinth.margins.clone(),
        r: state.r.clone(),
        eps: state.eps.clone(),
        margins,
        telescoping,
        partition_residual,
        leaf_lengths,
        leaf_errors,
    };
    write(&out.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(RunOutcome { summary, out: out.to_path_buf() })
}

/// Reloads the state written by [`run_pipeline`].
pub fn load_state(out: &Path) -> Result<InductionState> {
    #[derive(Deserialize)]
    struct Stored {
        state: InductionState,
    }
    let path = out.join("state.json");
    let text = fs::read_to_string(&path).map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
    Ok(serde_json::from_str::<Stored>(&text)?.state)
}

pub fn load_summary(out: &Path) -> Result<Summary> {
    let path = out.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
    Ok(serde_json::from_str(&text)?)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `plots/leaf_lengths.csv`, `plots/deltas.csv` and `plots/margins.csv` from a run's
/// `summary.json`. Vacuous checks are omitted from the margin table.
pub fn emit_plot_data(out: &Path) -> Result<Vec<PathBuf>> {
    let s = load_summary(out)?;
    let mut lengths = String::from("stage,leaf_id,length\n");
    let mut rows: Vec<&LeafLength> = s.leaf_lengths.iter().collect();
    rows.sort_by_key(|l| (l.stage, l.leaf_id));
    for l in rows {
        let _ = writeln!(lengths, "{},{},{}", l.stage, l.leaf_id, fmt(l.length));
    }
    let mut deltas = String::from("shell,delta\n");
    for (k, d) in s.deltas.iter().enumerate() {
        let _ = writeln!(deltas, "{},{}", k + 1, fmt(*d));
    }
    let mut margins = String::from("stage,check,margin\n");
    for m in &s.margins {
        if let Some(x) = m.margin {
            let _ = writeln!(margins, "{},{},{}", m.stage, m.check, fmt(x));
        }
    }
    let dir = out.join("plots");
    let files = [("leaf_lengths.csv", lengths), ("deltas.csv", deltas), ("margins.csv", margins)];
    let mut paths = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write(&p, &text)?;
        paths.push(p);
    }
    Ok(paths)
}
