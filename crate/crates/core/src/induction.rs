//! Finite-stage induction: schedules `r_i`, `eps_i`, one twisting map per stage,
//! and a ledger of sampled certificates (a)-(e) with margins.
//!
//! Stage `i` works with the ball `B_i` of radius `rho_i` and the plates of shell `i`
//! (between `rho_i` and `rho_{i+1}`). `Phi_i = phi_i o ... o phi_1` is kept as a single
//! chain with `phi_1`'s maps first.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automorphism::AutChain;
use crate::convex::{Convex, Plate};
use crate::error::{Error, Result};
use crate::geometry::{dist, head_sup, norm, BallRegion, CPoint};
use crate::labyrinth::Labyrinth;
use crate::mover::{lemma_main, sample_piece, slab_sample, MainOptions, MainReport};
use crate::sampling::{random_unit, rng};

/// Ledger format version, bumped on incompatible changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionConfig {
    pub n: usize,
    pub eps0: f64,
    pub seed: u64,
    pub r_trunc: f64,
    /// Added to the sampled preimage maximum when choosing `r_i`.
    pub r_margin: f64,
    /// Sphere samples used to choose `r_i`.
    pub choose_samples: usize,
    /// Denser samples used to verify (a).
    pub verify_samples: usize,
    /// Ball samples for (b); held-out re-verification uses four times as many.
    pub b_samples: usize,
    /// Samples per plate for the plate-side form of (c).
    pub c_samples: usize,
    /// Forward slab samples per earlier shell for the slab-side form of (c).
    pub slab_samples: usize,
    /// Samples near each plate for the distance clause of `eps_i`.
    pub e_samples: usize,
    pub main: MainOptions,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            n: 2,
            eps0: 0.05,
            seed: 0,
            r_trunc: 10.0,
            r_margin: 0.5,
            choose_samples: 10_000,
            verify_samples: 100_000,
            b_samples: 10_000,
            c_samples: 2_000,
            slab_samples: 100_000,
            e_samples: 20_000,
            main: MainOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    /// One of "a".."e", or "c_forward" (diagnostic).
    pub check: String,
    /// `None` when the condition is vacuous.
    pub margin: Option<f64>,
    pub pass: bool,
    pub samples: usize,
    pub note: String,
}

impl CheckEntry {
    fn new(check: &str, margin: f64, samples: usize, note: impl Into<String>) -> Self {
        CheckEntry { check: check.into(), margin: Some(margin), pass: margin > 0.0, samples, note: note.into() }
    }

    fn vacuous(check: &str, note: impl Into<String>) -> Self {
        CheckEntry { check: check.into(), margin: None, pass: true, samples: 0, note: note.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLedger {
    pub stage: usize,
    pub rho: f64,
    pub rho_next: f64,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub checks: Vec<CheckEntry>,
    pub main: Option<MainReport>,
    pub chain_length: usize,
    pub pass: bool,
    /// Error that aborted the stage, if any.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionState {
    pub config: InductionConfig,
    pub labyrinth: Labyrinth,
    /// Completed stages.
    pub stage: usize,
    /// `r_0 = 0, r_1, ..., r_stage`.
    pub r: Vec<f64>,
    /// `eps_0, ..., eps_stage`.
    pub eps: Vec<f64>,
    /// `phi_1, ..., phi_stage`.
    pub phis: Vec<AutChain>,
    /// `Phi_stage`.
    pub phi: AutChain,
    pub ledger: Vec<StageLedger>,
}

fn stage_seed(seed: u64, stage: usize, salt: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((stage as u64) << 32) ^ salt
}

impl InductionState {
    pub fn new(config: InductionConfig, labyrinth: Labyrinth) -> Result<Self> {
        if config.n != labyrinth.dim {
            return Err(Error::DimensionMismatch { expected: config.n, got: labyrinth.dim });
        }
        if !(config.eps0 > 0.0) {
            return Err(Error::InvalidInput("eps0 must be positive".into()));
        }
        Ok(InductionState {
            eps: vec![config.eps0],
            phi: AutChain::identity(config.n),
            config,
            labyrinth,
            stage: 0,
            r: vec![0.0],
            phis: Vec::new(),
            ledger: Vec::new(),
        })
    }

    /// Number of stages the labyrinth supports.
    pub fn max_stages(&self) -> usize {
        self.labyrinth.shells.len()
    }

    /// Radius `rho_i` of `B_i` (1-based).
    pub fn rho(&self, i: usize) -> f64 {
        self.labyrinth.shells[i - 1].inner
    }

    pub fn rho_next(&self, i: usize) -> f64 {
        self.labyrinth.shells[i - 1].outer
    }

    pub fn ball(&self, i: usize) -> Result<BallRegion> {
        BallRegion::centered(self.config.n, self.rho(i))
    }

    pub fn plates(&self, i: usize) -> &[Plate] {
        &self.labyrinth.plates[i - 1]
    }

    /// `Phi_k` for `k <= stage`, as one chain.
    pub fn phi_upto(&self, k: usize) -> AutChain {
        let mut maps = Vec::new();
        for p in &self.phis[..k] {
            maps.extend(p.maps.iter().cloned());
        }
        AutChain { dim: self.config.n, maps }
    }

    /// `phi_{i+1}, ..., phi_k` composed, i.e. `Phi_k o Phi_i^{-1}`.
    pub fn phi_between(&self, i: usize, k: usize) -> AutChain {
        let mut maps = Vec::new();
        for p in &self.phis[i..k] {
            maps.extend(p.maps.iter().cloned());
        }
        AutChain { dim: self.config.n, maps }
    }

    /// Picks `r_i` from the sampled preimage of the sphere `|z| = rho_i` (the head
    /// coordinates of a holomorphic map peak on the boundary).
    pub fn choose_r(&self, i: usize) -> Result<f64> {
        let ball = Convex::Ball { center: CPoint::zero(self.config.n), radius: self.rho(i) };
        let mut g = rng(stage_seed(self.config.seed, i, 0xa1));
        let pts = sample_piece(&mut g, &ball, self.config.choose_samples, 1.0);
        let max = preimage_head_max(&self.phi, &pts).ok_or(Error::InductionBroken(i))?;
        Ok((max + self.config.r_margin).max(self.r[i - 1] + 1.0 + 0.01))
    }

    /// Picks `eps_i` below `min(eps_{i-1}/2, rho_{i+1} - rho_i)` and below half the
    /// sampled distance between `Phi_{i-1}(r_j P x C) cap B_i` and each earlier shell's plates.
    pub fn choose_eps(&self, i: usize) -> Result<(f64, Option<f64>)> {
        let base = 0.5 * (self.eps[i - 1] / 2.0).min(self.rho_next(i) - self.rho(i));
        if i == 1 {
            return Ok((base, None));
        }
        let d = self.slab_plate_distance(i)?;
        if !(d > 0.0) {
            return Err(Error::InductionBroken(i));
        }
        Ok((base.min(0.49 * d), Some(d)))
    }

    /// min over `j < i` of the sampled distance from `Phi_{i-1}(r_j P x C) cap B_i` to the plates of shell `j`.
    pub fn slab_plate_distance(&self, i: usize) -> Result<f64> {
        let n = self.config.n;
        let rho = self.rho(i);
        let mut g = rng(stage_seed(self.config.seed, i, 0xe5));
        let mut best = f64::INFINITY;
        for j in 1..i {
            let plates = self.plates(j);
            if plates.is_empty() {
                continue;
            }
            let reach = 0.5 * (self.rho_next(j) - self.rho(j));
            // dense samples around each plate plus the whole ball
            let per = (self.config.e_samples / (plates.len() + 1)).max(1);
            let mut pts: Vec<Vec<Complex64>> = Vec::new();
            for p in plates {
                for z in sample_piece(&mut g, &Convex::Plate(p.clone()), per, 0.5) {
                    let u = random_unit(&mut g, n);
                    let t: f64 = rand::Rng::gen(&mut g);
                    let s = reach * t * t;
                    pts.push(z.iter().zip(&u).map(|(a, b)| a + b * s).collect());
                }
            }
            pts.extend(sample_piece(&mut g, &Convex::Ball { center: CPoint::zero(n), radius: rho }, per, 0.2));
            let r_j = self.r[j];
            let d = pts
                .par_iter()
                .filter(|z| norm(z) <= rho)
                .filter_map(|z| {
                    let mut w = z.clone();
                    // an overflowing preimage is far outside every slab
                    self.phi.eval_inverse_slice(&mut w).ok()?;
                    (head_sup(&w) <= r_j).then(|| plates.iter().map(|p| p.distance(z)).fold(f64::INFINITY, f64::min))
                })
                .reduce(|| f64::INFINITY, f64::min);
            best = best.min(d);
        }
        Ok(best)
    }

    /// Runs one stage. On failure the stage's ledger entry is still recorded.
    pub fn step(&mut self) -> Result<()> {
        let i = self.stage + 1;
        if i > self.max_stages() {
            return Err(Error::InvalidInput(format!("labyrinth has only {} shells", self.max_stages())));
        }
        let mut entry = StageLedger {
            stage: i,
            rho: self.rho(i),
            rho_next: self.rho_next(i),
            r: None,
            eps: None,
            checks: Vec::new(),
            main: None,
            chain_length: 0,
            pass: false,
            failure: None,
        };
        let res = self.step_inner(i, &mut entry);
        if let Err(e) = &res {
            entry.failure = Some(e.to_string());
        }
        entry.pass = res.is_ok() && entry.checks.iter().all(|c| c.pass);
        self.ledger.push(entry);
        res
    }

    fn step_inner(&mut self, i: usize, entry: &mut StageLedger) -> Result<()> {
        let cfg = self.config.clone();
        let n = cfg.n;
        let r_i = match self.choose_r(i) {
            Ok(r) => r,
            Err(e) => {
                entry.checks.push(CheckEntry {
                    check: "a".into(),
                    margin: None,
                    pass: false,
                    samples: cfg.choose_samples,
                    note: "preimage of the sphere overflowed; r_i is not computable".into(),
                });
                return Err(e);
            }
        };
        entry.r = Some(r_i);
        // (a): denser re-verification of B_i inside Phi_{i-1}(r_i P x C)
        let mut g = rng(stage_seed(cfg.seed, i, 0xa2));
        let ball_i = Convex::Ball { center: CPoint::zero(n), radius: self.rho(i) };
        let dense = sample_piece(&mut g, &ball_i, cfg.verify_samples, 0.5);
        let a_margin = match preimage_head_max(&self.phi, &dense) {
            Some(m) => r_i - m,
            None => f64::NAN,
        };
        let growth = r_i - self.r[i - 1] - 1.0;
        entry.checks.push(CheckEntry::new(
            "a",
            a_margin.min(growth),
            cfg.verify_samples,
            format!("r_i - sampled max {a_margin:.6e}; r_i - r_(i-1) - 1 = {growth:.6e}"),
        ));
        if !(a_margin.min(growth) > 0.0) {
            return Err(Error::InductionBroken(i));
        }

        let (eps_i, dist_e) = self.choose_eps(i)?;
        entry.eps = Some(eps_i);
        let d_bound = (self.eps[i - 1] / 2.0).min(self.rho_next(i) - self.rho(i));
        entry.checks.push(CheckEntry::new("d", d_bound - eps_i, 0, "min(eps_(i-1)/2, rho_(i+1) - rho_i) - eps_i"));
        match dist_e {
            None => entry.checks.push(CheckEntry::vacuous("e", "no earlier shells")),
            Some(d) => entry.checks.push(CheckEntry::new(
                "e",
                0.5 * d - eps_i,
                cfg.e_samples,
                format!("half sampled slab-to-plate distance {:.6e} - eps_i", 0.5 * d),
            )),
        }

        let plates = self.plates(i).to_vec();
        let ball = self.ball(i)?;
        let mut main_opts = cfg.main.clone();
        main_opts.mover.seed = stage_seed(cfg.seed, i, 0x11);
        main_opts.r_trunc = cfg.r_trunc;
        let (theta, report) = lemma_main(&ball, &plates, &self.phi, r_i, eps_i, eps_i / 2.0, &main_opts)?;
        entry.chain_length = theta.len();
        entry.main = Some(report);

        // commit the stage
        let mut phi = self.phi.clone();
        for m in &theta.maps {
            phi.push(m.clone())?;
        }
        self.phi = phi;
        self.phis.push(theta.clone());
        self.r.push(r_i);
        self.eps.push(eps_i);
        self.stage = i;

        // (b): |phi_i - id| on B_i, with a held-out 4x denser re-check
        let mut g = rng(stage_seed(cfg.seed, i, 0xb1));
        let b1 = sample_piece(&mut g, &ball_i, cfg.b_samples, 0.3);
        let b2 = sample_piece(&mut g, &ball_i, 4 * cfg.b_samples, 0.3);
        let sup = displacement_sup(&theta, &b1).max(displacement_sup(&theta, &b2));
        entry.checks.push(CheckEntry::new("b", eps_i - sup, 5 * cfg.b_samples, format!("eps_i - sampled sup {sup:.6e}")));

        if (1..=i).all(|j| self.plates(j).is_empty()) {
            entry.checks.push(CheckEntry::vacuous("c", "no plates"));
            return Ok(());
        }
        // (c): for every shell j <= i, plates pull back off r_j P x C under Phi_i
        let mut c_margin = f64::INFINITY;
        let mut worst_shell = 0;
        for j in 1..=i {
            for p in self.plates(j) {
                let pts = sample_piece(&mut g, &Convex::Plate(p.clone()), cfg.c_samples, 0.7);
                let m = pullback_margin(&self.phi, &pts, self.r[j]);
                if !(m >= c_margin) {
                    c_margin = m;
                    worst_shell = j;
                }
            }
        }
        entry.checks.push(CheckEntry::new(
            "c",
            c_margin,
            cfg.c_samples,
            format!("min over plates of |(Phi_i^-1 x)'| - r_j (worst shell {worst_shell})"),
        ));
        let (fwd, escaped) = self.forward_clearance(i, &mut g);
        entry.checks.push(CheckEntry {
            check: "c_forward".into(),
            margin: Some(fwd),
            pass: fwd > 0.0,
            samples: cfg.slab_samples * i,
            note: format!("finite slab images only; {escaped} samples overflowed"),
        });
        if entry.checks.iter().all(|c| c.pass) {
            Ok(())
        } else {
            let bad = entry.checks.iter().find(|c| !c.pass).map(|c| c.check.clone()).unwrap_or_default();
            if bad == "c" || bad == "c_forward" {
                Err(Error::AvoidanceViolated { stage: i, shell: worst_shell, margin: c_margin.min(fwd) })
            } else {
                Err(Error::InductionBroken(i))
            }
        }
    }

    /// Forward form of (c): min distance from finite `Phi_i(slab_j)` samples to shell-`j` plates.
    fn forward_clearance(&self, i: usize, g: &mut impl rand::Rng) -> (f64, usize) {
        let n = self.config.n;
        let mut best = f64::INFINITY;
        let mut escaped = 0;
        for j in 1..=i {
            let plates = self.plates(j);
            let pts: Vec<Vec<Complex64>> =
                (0..self.config.slab_samples).map(|_| slab_sample(g, n, self.r[j], self.config.r_trunc)).collect();
            let res: Vec<Option<f64>> = pts
                .par_iter()
                .map(|s| {
                    let mut w = s.clone();
                    self.phi.eval_slice(&mut w).ok()?;
                    Some(plates.iter().map(|p| p.distance(&w)).fold(f64::INFINITY, f64::min))
                })
                .collect();
            for r in res {
                match r {
                    Some(d) => best = best.min(d),
                    None => escaped += 1,
                }
            }
        }
        (best, escaped)
    }

    /// Runs stages until `stages` are complete or one fails.
    pub fn run(&mut self, stages: usize) -> Result<()> {
        while self.stage < stages {
            self.step()?;
        }
        Ok(())
    }

    pub fn ledger_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            schema_version: u32,
            stages: &'a [StageLedger],
            r: &'a [f64],
            eps: &'a [f64],
        }
        Ok(serde_json::to_string_pretty(&Out { schema_version: SCHEMA_VERSION, stages: &self.ledger, r: &self.r, eps: &self.eps })?)
    }
}

fn preimage_head_max(phi: &AutChain, pts: &[Vec<Complex64>]) -> Option<f64> {
    pts.par_iter()
        .map(|z| {
            let mut w = z.clone();
            phi.eval_inverse_slice(&mut w).ok().map(|_| head_sup(&w))
        })
        .reduce(|| Some(0.0), |a, b| Some(a?.max(b?)))
}

fn displacement_sup(map: &AutChain, pts: &[Vec<Complex64>]) -> f64 {
    pts.par_iter()
        .map(|z| {
            let mut w = z.clone();
            match map.eval_slice(&mut w) {
                Ok(()) => dist(&w, z),
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// min over `pts` of `|(Phi^-1 x)'|_inf - r`; NaN if any preimage overflows.
fn pullback_margin(phi: &AutChain, pts: &[Vec<Complex64>], r: f64) -> f64 {
    pts.par_iter()
        .map(|x| {
            let mut w = x.clone();
            match phi.eval_inverse_slice(&mut w) {
                Ok(()) => head_sup(&w) - r,
                Err(_) => f64::NAN,
            }
        })
        .reduce(|| f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub i: usize,
    /// `(k, sampled sup of |Phi_k o Phi_i^-1 - id| on B_i, eps_i - sup)` for `i < k <= I`.
    pub rows: Vec<(usize, f64, f64)>,
    /// `None` when there is no later stage.
    pub worst_margin: Option<f64>,
    pub samples: usize,
}

/// Telescoping check: `|Phi_k o Phi_i^-1(z) - z| < eps_i` on the samples for all `i < k <= stage`.
pub fn convergence_report(state: &InductionState, i: usize, samples: &[CPoint]) -> Result<ConvergenceReport> {
    if i == 0 || i > state.stage {
        return Err(Error::InvalidInput(format!("stage {i} is not complete")));
    }
    let pts: Vec<Vec<Complex64>> = samples.iter().map(|p| p.coords.clone()).collect();
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    for k in i + 1..=state.stage {
        let sup = displacement_sup(&state.phi_between(i, k), &pts);
        let margin = state.eps[i] - sup;
        worst = worst.min(margin);
        rows.push((k, sup, margin));
    }
    let report = ConvergenceReport { i, rows, worst_margin: worst.is_finite().then_some(worst), samples: pts.len() };
    if worst <= 0.0 {
        return Err(Error::TelescopingViolated {
            i,
            k: report.rows.iter().find(|r| r.2 <= 0.0).map(|r| r.0).unwrap_or(i),
            value: state.eps[i] - worst,
            bound: state.eps[i],
        });
    }
    Ok(report)
}

/// Smallest completed stage `i` with `|Phi_i(p)| < rho_i - eps_i`, or `None` ("unknown").
pub fn omega_membership(p: &CPoint, state: &InductionState) -> Option<usize> {
    let mut w = p.coords.clone();
    for i in 1..=state.stage {
        if state.phis[i - 1].eval_slice(&mut w).is_err() {
            return None;
        }
        if norm(&w) < state.rho(i) - state.eps[i] {
            return Some(i);
        }
    }
    None
}
