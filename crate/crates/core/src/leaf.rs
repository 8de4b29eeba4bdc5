//! Leaves of the stage-`I` foliation `Phi_I({z' = c} x C)`: tracing, clearance from
//! the labyrinth, length-based completeness evidence, and round-trip checks.
//!
//! A leaf is traced along the real direction of the fibre parameter, `zeta = zeta_0 + t`,
//! in both directions until its image leaves the ball of radius `1 - tol_boundary`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automorphism::AutChain;
use crate::error::{Error, Result};
use crate::geometry::{dist, head_sup, norm, CPoint};
use crate::induction::{omega_membership, InductionState};
use crate::labyrinth::Labyrinth;

/// Round-trip residual above which chain arithmetic is considered degraded.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// The image reached `|p| >= 1 - tol_boundary`.
    ExitedBall,
    StepBudget,
    /// The image overflowed before reaching the boundary.
    Escaped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafTrace {
    pub c: Vec<Complex64>,
    pub zeta0: Complex64,
    pub stage: usize,
    pub tol_boundary: f64,
    pub max_step: f64,
    /// Fibre parameters in path order (negative end first).
    pub zetas: Vec<Complex64>,
    pub points: Vec<CPoint>,
    /// Cumulative chord length from the first point.
    pub lengths: Vec<f64>,
    /// Index of the anchor in `points`.
    pub anchor_index: usize,
    /// Termination of the backward and forward halves.
    pub termination: (Termination, Termination),
    /// max over points of `|(Phi_I^-1 p)' - c|`.
    pub invariance_residual: f64,
}

impl LeafTrace {
    pub fn length(&self) -> f64 {
        self.lengths.last().copied().unwrap_or(0.0)
    }

    pub fn max_chord(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(&w[1])).fold(0.0, f64::max)
    }

    /// CSV rows `zeta_re,zeta_im,p1_re,p1_im,...,length` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.dim());
        let mut out = String::from("zeta_re,zeta_im");
        for k in 1..=n {
            let _ = write!(out, ",p{k}_re,p{k}_im");
        }
        out.push_str(",length\n");
        for ((z, p), l) in self.zetas.iter().zip(&self.points).zip(&self.lengths) {
            let _ = write!(out, "{:.16e},{:.16e}", z.re, z.im);
            for x in &p.coords {
                let _ = write!(out, ",{:.16e},{:.16e}", x.re, x.im);
            }
            let _ = writeln!(out, ",{:.16e}", l);
        }
        out
    }
}

fn fibre_point(c: &[Complex64], zeta: Complex64) -> Vec<Complex64> {
    let mut z = c.to_vec();
    z.push(zeta);
    z
}

/// One half of a trace: marches `t` from 0 in direction `sign` until the boundary.
fn march(
    phi: &AutChain,
    c: &[Complex64],
    zeta0: Complex64,
    sign: f64,
    step: f64,
    budget: usize,
    limit: f64,
) -> (Vec<(Complex64, Vec<Complex64>)>, Termination) {
    let eval = |t: f64| -> Option<(Complex64, Vec<Complex64>)> {
        let zeta = zeta0 + Complex64::new(sign * t, 0.0);
        let mut w = fibre_point(c, zeta);
        phi.eval_slice(&mut w).ok().map(|_| (zeta, w))
    };
    let mut out = Vec::new();
    let (_, mut prev) = eval(0.0).expect("anchor evaluated by caller");
    let mut t = 0.0;
    let mut dt = step;
    for _ in 0..budget {
        let mut accepted = None;
        // shrink until the image chord respects the step bound
        for _ in 0..60 {
            match eval(t + dt) {
                Some((z, p)) if dist(&p, &prev) <= step => {
                    accepted = Some((z, p));
                    break;
                }
                _ => dt *= 0.5,
            }
        }
        let Some((z, p)) = accepted else { return (out, Termination::Escaped) };
        if norm(&p) >= limit {
            // bisect back onto the boundary sphere
            let (mut lo, mut hi) = (t, t + dt);
            let mut last = (z, p);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                match eval(mid) {
                    Some((zm, pm)) if norm(&pm) >= limit => {
                        hi = mid;
                        last = (zm, pm);
                    }
                    Some(_) => lo = mid,
                    None => hi = mid,
                }
            }
            out.push(last);
            return (out, Termination::ExitedBall);
        }
        let chord = dist(&p, &prev);
        t += dt;
        prev = p.clone();
        out.push((z, p));
        if chord < 0.5 * step {
            dt *= 1.5;
        }
    }
    (out, Termination::StepBudget)
}

/// Traces the leaf through `(c, zeta0)` for `Phi_stage`, with image chords at most `step`.
pub fn trace_leaf(
    c: &[Complex64],
    zeta0: Complex64,
    state: &InductionState,
    stage: usize,
    step: f64,
    budget: usize,
    tol_boundary: f64,
) -> Result<LeafTrace> {
    let n = state.config.n;
    if c.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, got: c.len() });
    }
    if stage > state.stage {
        return Err(Error::InvalidInput(format!("stage {stage} is not complete")));
    }
    if !(step > 0.0 && tol_boundary > 0.0 && tol_boundary < 1.0) {
        return Err(Error::InvalidInput("step and tol_boundary must be positive".into()));
    }
    let limit = 1.0 - tol_boundary;
    let anchor = CPoint::new(fibre_point(c, zeta0));
    let in_domain = if stage == 0 {
        anchor.norm() < limit
    } else {
        omega_membership(&anchor, state).is_some_and(|i| i <= stage)
    };
    let phi = state.phi_upto(stage);
    let p0 = phi.eval(&anchor).map_err(|_| Error::AnchorNotInDomain)?;
    if !in_domain || p0.norm() >= limit {
        return Err(Error::AnchorNotInDomain);
    }
    let (back, t_back) = march(&phi, c, zeta0, -1.0, step, budget, limit);
    let (fwd, t_fwd) = march(&phi, c, zeta0, 1.0, step, budget, limit);
    let mut zetas = Vec::with_capacity(back.len() + fwd.len() + 1);
    let mut points = Vec::with_capacity(zetas.capacity());
    for (z, p) in back.into_iter().rev() {
        zetas.push(z);
        points.push(CPoint::new(p));
    }
    let anchor_index = points.len();
    zetas.push(zeta0);
    points.push(p0);
    for (z, p) in fwd {
        zetas.push(z);
        points.push(CPoint::new(p));
    }
    let mut lengths = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            acc += p.dist(&points[k - 1]);
        }
        lengths.push(acc);
    }
    let invariance_residual = points
        .par_iter()
        .map(|p| {
            let mut w = p.coords.clone();
            match phi.eval_inverse_slice(&mut w) {
                Ok(()) => dist(&w[..n - 1], c),
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(LeafTrace {
        c: c.to_vec(),
        zeta0,
        stage,
        tol_boundary,
        max_step: step,
        zetas,
        points,
        lengths,
        anchor_index,
        termination: (t_back, t_fwd),
        invariance_residual,
    })
}

/// Length of the leaf arc by direct evaluation at `samples` equally spaced parameters
/// between the trace's end parameters (an independent check of the adaptive trace).
pub fn dense_length(trace: &LeafTrace, state: &InductionState, samples: usize) -> Result<f64> {
    let phi = state.phi_upto(trace.stage);
    let (a, b) = (trace.zetas[0], *trace.zetas.last().unwrap());
    let pts: Vec<Vec<Complex64>> = (0..=samples)
        .into_par_iter()
        .map(|k| {
            let zeta = a + (b - a) * (k as f64 / samples as f64);
            let mut w = fibre_point(&trace.c, zeta);
            phi.eval_slice(&mut w).map(|_| w)
        })
        .collect::<Result<_>>()?;
    Ok(pts.windows(2).map(|w| dist(&w[0], &w[1])).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellClearance {
    pub shell: usize,
    /// Trace points whose norm lies in the shell.
    pub points: usize,
    /// Min distance from the trace's chords inside the shell to the shell's plates;
    /// `None` stands for `+inf` (no plates or no trace points there).
    pub clearance: Option<f64>,
}

/// Per shell, the min distance from the trace (chords, refined near plates) to its plates.
pub fn leaf_clearance(trace: &LeafTrace, labyrinth: &Labyrinth) -> Vec<ShellClearance> {
    labyrinth
        .shells
        .iter()
        .zip(&labyrinth.plates)
        .map(|(shell, plates)| {
            let inside = |p: &CPoint| {
                let r = p.norm();
                r >= shell.inner && r <= shell.outer
            };
            let count = trace.points.iter().filter(|p| inside(p)).count();
            let mut best = f64::INFINITY;
            if !plates.is_empty() {
                for w in trace.points.windows(2) {
                    if !(inside(&w[0]) || inside(&w[1])) {
                        continue;
                    }
                    for plate in plates {
                        best = best.min(segment_plate_distance(&w[0].coords, &w[1].coords, plate, best));
                    }
                }
            }
            ShellClearance {
                shell: shell.index,
                points: count,
                clearance: best.is_finite().then_some(best),
            }
        })
        .collect()
}

/// Distance from the chord `[a, b]` to `plate`, or a lower bound when it cannot beat `best`.
fn segment_plate_distance(a: &[Complex64], b: &[Complex64], plate: &crate::convex::Plate, best: f64) -> f64 {
    let len = dist(a, b);
    let near = plate.distance(a).min(plate.distance(b));
    // every point of the chord is within `len` of an end
    if near - len >= best {
        return near - len;
    }
    let pieces = ((len / (0.25 * plate.thickness).max(1e-12)).ceil() as usize).clamp(1, 100_000);
    (0..=pieces)
        .map(|k| {
            let s = k as f64 / pieces as f64;
            let p: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect();
            plate.distance(&p)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessEvidence {
    pub leaf_id: usize,
    pub c: Vec<Complex64>,
    /// First stage controlling the leaf, if any.
    pub i0: Option<usize>,
    pub clearances: Vec<ShellClearance>,
    /// Shells (1-based) fully crossed by a half of the trace while avoided, one entry per crossing.
    pub crossed: Vec<usize>,
    pub lower_bound: f64,
    pub traced_length: f64,
    /// Allowed shortfall of the traced length below the bound.
    pub tolerance: f64,
    pub pass: bool,
}

/// First stage `i` with `Phi_i(anchor)` inside `B_i` and `|c|_inf < r_i`.
pub fn first_controlled_stage(trace: &LeafTrace, state: &InductionState) -> Option<usize> {
    let anchor = CPoint::new(fibre_point(&trace.c, trace.zeta0));
    let mut w = anchor.coords.clone();
    for i in 1..=trace.stage {
        state.phis[i - 1].eval_slice(&mut w).ok()?;
        if norm(&w) < state.rho(i) && head_sup(&trace.c) < state.r[i] {
            return Some(i);
        }
    }
    None
}

/// Sums certified `delta_k` over shells `k` in `[i0, I]` that a half of the trace fully
/// crosses while avoiding the shell's plates, and compares with the traced length.
pub fn completeness_evidence(
    leaf_id: usize,
    trace: &LeafTrace,
    labyrinth: &Labyrinth,
    state: &InductionState,
    rel_tolerance: f64,
) -> Result<CompletenessEvidence> {
    let clearances = leaf_clearance(trace, labyrinth);
    let i0 = first_controlled_stage(trace, state);
    let mut crossed = Vec::new();
    if let Some(i0) = i0 {
        for k in i0..=trace.stage {
            let cl = &clearances[k - 1];
            if cl.clearance.is_some_and(|d| d <= 0.0) {
                return Err(Error::LeafHitsLabyrinth);
            }
            let shell = &labyrinth.shells[k - 1];
            let halves = [&trace.points[..=trace.anchor_index], &trace.points[trace.anchor_index..]];
            for half in halves {
                let inner = half.iter().any(|p| p.norm() <= shell.inner);
                let outer = half.iter().any(|p| p.norm() >= shell.outer);
                if inner && outer {
                    crossed.push(k);
                }
            }
        }
    }
    let lower_bound: f64 = crossed.iter().map(|&k| labyrinth.deltas[k - 1]).sum();
    let tolerance = rel_tolerance * lower_bound;
    let traced_length = trace.length();
    Ok(CompletenessEvidence {
        leaf_id,
        c: trace.c.clone(),
        i0,
        clearances,
        crossed,
        lower_bound,
        traced_length,
        tolerance,
        pass: traced_length >= lower_bound - tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// Leaf invariant `c(p) = (Phi_I^-1 p)'` per point.
    pub c_values: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Leaf labels and round-trip residuals `|Phi_I(Phi_I^-1 p) - p|` for `points`.
pub fn foliation_partition_check(points: &[CPoint], state: &InductionState, stage: usize) -> Result<PartitionReport> {
    let n = state.config.n;
    let phi = state.phi_upto(stage);
    let rows: Vec<(Vec<Complex64>, f64)> = points
        .par_iter()
        .map(|p| {
            let mut w = p.coords.clone();
            phi.eval_inverse_slice(&mut w)?;
            let c = w[..n - 1].to_vec();
            phi.eval_slice(&mut w)?;
            Ok((c, dist(&w, &p.coords)))
        })
        .collect::<Result<_>>()?;
    let max_residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if !(max_residual < ROUND_TRIP_TOL) {
        return Err(Error::ChainDegraded(max_residual));
    }
    let (c_values, residuals) = rows.into_iter().unzip();
    Ok(PartitionReport { c_values, residuals, max_residual })
}

#[cfg(test)]
mod tests;
