//! Moving disjoint convex pieces of C^n with one automorphism.
//!
//! [`lemma_starshaped`] realizes prescribed squeeze-then-translate motions of
//! pieces `K_1..K_m` while keeping `K_0` (nearly) fixed. Each piece travels along
//! a short route of straight legs; each leg is a shear `z -> z + c f(pi(z)) e`
//! whose gate `f` is a plateau polynomial, close to 1 on the moving piece's
//! projection and close to 0 on every other piece's. Squeezes use overshears with
//! the same kind of gate. [`lemma_main`] picks target sites off the image of a
//! slab and returns the inverse chain.

pub mod hull;
pub mod plateau;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automorphism::{complement_basis, AutChain, ElementaryAut};
use crate::convex::{separation, Convex, Plate};
use crate::error::{Error, Result};
use crate::geometry::{dist, head_sup, hdot, norm, rdot, BallRegion, CPoint};
use crate::sampling::{gaussian, random_point_in_ball, random_unit, rng};

pub use plateau::{fit_plateau_poly, fit_plateau_weighted, PlateauFit};

/// Squeeze about the piece's center by `scale`, then translate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub scale: f64,
    pub translation: Vec<Complex64>,
}

impl Motion {
    pub fn identity(n: usize) -> Self {
        Motion { scale: 1.0, translation: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn translation(t: &[Complex64]) -> Self {
        Motion { scale: 1.0, translation: t.to_vec() }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.translation.iter().all(|t| t.norm() == 0.0)
    }

    /// `Psi_j(z) = a + s (z - a) + t` for the piece center `a`.
    pub fn apply(&self, center: &[Complex64], z: &[Complex64]) -> Vec<Complex64> {
        z.iter()
            .zip(center)
            .zip(&self.translation)
            .map(|((x, a), t)| a + (x - a) * self.scale + t)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveSpec {
    /// `pieces[0]` is `K_0`; it must have the identity motion.
    pub pieces: Vec<Convex>,
    pub motions: Vec<Motion>,
    /// Tolerance on `K_0` (and on every piece unless `piece_delta` is set).
    pub delta: f64,
    /// Optional looser tolerance for the pieces `K_1..K_m`.
    pub piece_delta: Option<f64>,
}

impl MoveSpec {
    pub fn tolerance(&self, j: usize) -> f64 {
        if j == 0 {
            self.delta
        } else {
            self.piece_delta.unwrap_or(self.delta)
        }
    }

    fn target(&self, j: usize) -> Convex {
        self.pieces[j].squeezed_translated(self.motions[j].scale, &self.motions[j].translation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() || self.pieces.len() != self.motions.len() {
            return Err(Error::InvalidInput("need K_0 and one motion per piece".into()));
        }
        if !self.motions[0].is_identity() {
            return Err(Error::InvalidInput("K_0 must have the identity motion".into()));
        }
        if !(self.delta > 0.0) || self.piece_delta.map_or(false, |d| !(d > 0.0)) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        for m in &self.motions {
            if !(m.scale > 0.0 && m.scale <= 1.0) {
                return Err(Error::InvalidInput("squeeze factors must lie in (0, 1]".into()));
            }
        }
        let m = self.pieces.len();
        for i in 0..m {
            for j in i + 1..m {
                if !(separation(&self.pieces[i], &self.pieces[j]) > 0.0) {
                    return Err(Error::InvalidInput(format!("pieces {i} and {j} are not disjoint")));
                }
                if !(separation(&self.target(i), &self.target(j)) > 0.0) {
                    return Err(Error::TargetsCollide);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoverOptions {
    pub seed: u64,
    pub max_degree: usize,
    /// Tracked samples per piece used to build the gates.
    pub fit_samples: usize,
    /// Fresh samples per piece used for certification.
    pub heldout_samples: usize,
    /// Boundary points per projected piece handed to the fitter.
    pub hull_points: usize,
}

impl Default for MoverOptions {
    fn default() -> Self {
        MoverOptions { seed: 0, max_degree: 320, fit_samples: 400, heldout_samples: 1000, hull_points: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub piece: usize,
    /// "shear" or "squeeze".
    pub kind: String,
    pub length: f64,
    pub degree: usize,
    pub error_on: f64,
    pub error_off: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub per_piece_error: Vec<f64>,
    pub per_piece_tolerance: Vec<f64>,
    pub chain_length: usize,
    pub fit_samples: usize,
    pub heldout_samples: usize,
    pub seed: u64,
    pub pass: bool,
    pub moves: Vec<MoveRecord>,
}

impl FitReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Samples of a convex piece; a fraction `boundary_frac` lies on its boundary.
pub fn sample_piece<R: Rng>(rng: &mut R, piece: &Convex, count: usize, boundary_frac: f64) -> Vec<Vec<Complex64>> {
    let nb = (count as f64 * boundary_frac).round() as usize;
    (0..count)
        .map(|k| match piece {
            Convex::Ball { center, radius } => {
                let n = center.dim();
                let p = if k < nb {
                    random_unit(rng, n).into_iter().map(|x| x * *radius).collect::<Vec<_>>()
                } else {
                    random_point_in_ball(rng, n, *radius).coords
                };
                center.coords.iter().zip(p).map(|(a, b)| a + b).collect()
            }
            Convex::Plate(p) => sample_plate_point(rng, p, k < nb),
        })
        .collect()
}

fn sample_plate_point<R: Rng>(rng: &mut R, p: &Plate, boundary: bool) -> Vec<Complex64> {
    let n = p.center.dim();
    let real_dim = (2 * n - 1) as f64;
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
    let along = rdot(&v, &p.normal);
    v.iter_mut().zip(&p.normal).for_each(|(x, nu)| *x -= nu * along);
    let nv = norm(&v).max(1e-300);
    let u: f64 = rng.gen();
    let (r, h) = if boundary {
        if rng.gen::<bool>() {
            (p.radius, p.thickness * (2.0 * rng.gen::<f64>() - 1.0))
        } else {
            let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            (p.radius * u.powf(1.0 / (real_dim - 1.0).max(1.0)), side * p.thickness)
        }
    } else {
        (p.radius * u.powf(1.0 / real_dim), p.thickness * (2.0 * rng.gen::<f64>() - 1.0))
    };
    (0..n).map(|c| p.center.coords[c] + v[c] * (r / nv) + p.normal[c] * h).collect()
}

fn project(basis: &[Vec<Complex64>], z: &[Complex64]) -> Vec<Complex64> {
    basis.iter().map(|b| hdot(z, b)).collect()
}

fn unit(v: &[Complex64]) -> Vec<Complex64> {
    let nv = norm(v);
    v.iter().map(|x| x / nv).collect()
}

/// A piece as seen by the route planner: its current center and circumradius.
#[derive(Clone, Debug)]
struct Blob {
    center: Vec<Complex64>,
    ext: f64,
}

/// Separation quality of a leg against each other piece: `(gap - ext_j - ext_k) / (ext_j + ext_k)`
/// between projections, shrunk by the projected reach of the whole configuration and by
/// the leg length, since spread-out configurations and long levers need sharper gates.
fn leg_profile(from: &[Complex64], disp: &[Complex64], ext: f64, others: &[Blob]) -> Vec<f64> {
    let basis = complement_basis(&unit(disp));
    let pj = project(&basis, from);
    let gaps: Vec<(f64, f64)> = others
        .iter()
        .map(|b| {
            let d = dist(&pj, &project(&basis, &b.center));
            ((d - ext - b.ext) / (ext + b.ext), d + b.ext)
        })
        .collect();
    let reach = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    let damp = 1.0 / ((1.0 + reach) * (1.0 + 0.2 * norm(disp)));
    gaps.iter().map(|g| if g.0 > 0.0 { g.0 * damp } else { g.0 }).collect()
}

fn leg_score(from: &[Complex64], disp: &[Complex64], ext: f64, others: &[Blob]) -> f64 {
    leg_profile(from, disp, ext, others).into_iter().fold(f64::INFINITY, f64::min)
}

/// Unit directions Hermitian-orthogonal to `p` used for first legs.
fn perpendiculars(p: &[Complex64]) -> Vec<Vec<Complex64>> {
    complement_basis(&unit(p))
}

const LEG_MAGNITUDES: [f64; 5] = [0.6, 1.0, 1.5, 2.2, 3.0];
const LEG_PHASES: usize = 8;
const MIN_SCORE: f64 = 0.002;

#[derive(Clone, Debug)]
struct Route {
    legs: Vec<Vec<Complex64>>,
}

fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Candidate routes from `start` to `goal`: the direct leg and two-leg detours that
/// first step Hermitian-orthogonally to the direction `away` (from `K_0`).
fn candidate_routes(start: &[Complex64], goal: &[Complex64], away: &[Complex64]) -> Vec<Route> {
    let mut out = vec![Route { legs: vec![sub(goal, start)] }];
    let away = if norm(away) > 1e-12 {
        away.to_vec()
    } else {
        let mut e = vec![Complex64::new(0.0, 0.0); start.len()];
        e[0] = Complex64::new(1.0, 0.0);
        e
    };
    for u in perpendiculars(&away) {
        for mag in LEG_MAGNITUDES {
            for ph in 0..LEG_PHASES {
                let lam = Complex64::from_polar(mag, std::f64::consts::TAU * ph as f64 / LEG_PHASES as f64);
                let first: Vec<Complex64> = u.iter().map(|x| x * lam).collect();
                let mid = add(start, &first);
                out.push(Route { legs: vec![first, sub(goal, &mid)] });
            }
        }
    }
    out
}

/// Positions of every piece while the legs of phase `phase` (0 = first legs,
/// 1 = second legs) of the piece at `order_pos` execute.
fn positions_during(
    phase: usize,
    order_pos: usize,
    order: &[usize],
    starts: &[Vec<Complex64>],
    routes: &[Option<Route>],
) -> Vec<Vec<Complex64>> {
    let mut pos = starts.to_vec();
    for (o, &k) in order.iter().enumerate() {
        let Some(route) = &routes[k] else { continue };
        let first_done = phase == 1 || o < order_pos;
        let second_done = phase == 1 && o < order_pos;
        if first_done {
            pos[k] = add(&pos[k], &route.legs[0]);
        }
        if second_done && route.legs.len() > 1 {
            pos[k] = add(&pos[k], &route.legs[1]);
        }
    }
    pos
}

/// Sorted separation scores of every (leg, other piece) pair along `route`.
fn route_profile(
    j: usize,
    order_pos: usize,
    route: &Route,
    order: &[usize],
    starts: &[Vec<Complex64>],
    exts: &[f64],
    routes: &[Option<Route>],
) -> Vec<f64> {
    let mut trial = routes.to_vec();
    trial[j] = Some(route.clone());
    let mut all = Vec::new();
    let mut at = starts[j].clone();
    for (phase, leg) in route.legs.iter().enumerate() {
        if norm(leg) < 1e-14 {
            continue;
        }
        let pos = positions_during(phase, order_pos, order, starts, &trial);
        let others: Vec<Blob> = (0..starts.len())
            .filter(|&k| k != j)
            .map(|k| Blob { center: pos[k].clone(), ext: exts[k] })
            .collect();
        all.extend(leg_profile(&at, leg, exts[j], &others));
        at = add(&at, leg);
    }
    all.sort_by(f64::total_cmp);
    all
}

/// Leximin order on score profiles: the better profile has the larger worst
/// score, ties broken by the next worst, and so on.
fn leximin_better(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x > y;
        }
    }
    false
}

/// Best-scoring route for each moving piece, planned greedily then refined with full knowledge.
fn plan_routes(
    order: &[usize],
    starts: &[Vec<Complex64>],
    goals: &[Vec<Complex64>],
    exts: &[f64],
    moving: &[bool],
) -> Result<(Vec<Option<Route>>, Vec<f64>)> {
    let m = starts.len();
    let mut routes: Vec<Option<Route>> = vec![None; m];
    let mut scores = vec![f64::INFINITY; m];
    for round in 0..3 {
        for (o, &j) in order.iter().enumerate() {
            if !moving[j] {
                continue;
            }
            if round > 0 {
                let current = route_profile(j, o, routes[j].as_ref().unwrap(), order, starts, exts, &routes);
                scores[j] = current.first().copied().unwrap_or(f64::INFINITY);
                if scores[j] >= 0.25 {
                    continue;
                }
            }
            let away = sub(&starts[j], &starts[0]);
            let mut best: Option<(Route, Vec<f64>)> = None;
            for cand in candidate_routes(&starts[j], &goals[j], &away) {
                let p = route_profile(j, o, &cand, order, starts, exts, &routes);
                if best.as_ref().map_or(true, |b| leximin_better(&p, &b.1)) {
                    best = Some((cand, p));
                }
            }
            let (r, p) = best.expect("at least the direct route");
            routes[j] = Some(r);
            scores[j] = p.first().copied().unwrap_or(f64::INFINITY);
        }
    }
    for (o, &j) in order.iter().enumerate() {
        if moving[j] {
            scores[j] = route_profile(j, o, routes[j].as_ref().unwrap(), order, starts, exts, &routes)
                .first()
                .copied()
                .unwrap_or(f64::INFINITY);
            if !(scores[j] > MIN_SCORE) {
                return Err(Error::NoRoute(j));
            }
        }
    }
    Ok((routes, scores))
}

/// Gate samples for one projection: the moving piece's hull boundary (on) and every
/// other piece's hull boundary (off), with per-point tolerances.
struct Gate {
    on: Vec<Vec<Complex64>>,
    off: Vec<Vec<Complex64>>,
    off_owner: Vec<usize>,
}

fn build_gate(
    basis: &[Vec<Complex64>],
    clouds: &[Vec<Vec<Complex64>>],
    moving: usize,
    k0_disc: Option<(&[Complex64], f64)>,
    hull_points: usize,
) -> Gate {
    let vars = basis.len();
    let projected: Vec<Vec<Vec<Complex64>>> =
        clouds.iter().map(|c| c.iter().map(|z| project(basis, z)).collect()).collect();
    let boundary = |k: usize, count: usize| -> Vec<Vec<Complex64>> {
        let pts = &projected[k];
        if vars == 1 {
            let flat: Vec<Complex64> = pts.iter().map(|p| p[0]).collect();
            let diam = flat.iter().map(|a| (a - flat[0]).norm()).fold(0.0, f64::max);
            hull::densified_boundary(&flat, count, 0.03 * diam + 1e-9).into_iter().map(|z| vec![z]).collect()
        } else {
            pts.clone()
        }
    };
    let on = boundary(moving, hull_points);
    let mut off = Vec::new();
    let mut off_owner = Vec::new();
    for k in 0..clouds.len() {
        if k == moving {
            continue;
        }
        let pts = match (k, k0_disc) {
            (0, Some((center, radius))) if vars == 1 => {
                let c = project(basis, center)[0];
                hull::circle(c, radius, 6 * hull_points).into_iter().map(|z| vec![z]).collect()
            }
            (0, _) => boundary(0, 6 * hull_points),
            _ => boundary(k, hull_points),
        };
        off_owner.extend(std::iter::repeat(k).take(pts.len()));
        off.extend(pts);
    }
    Gate { on, off, off_owner }
}

fn apply_to_clouds(map: &ElementaryAut, clouds: &mut [Vec<Vec<Complex64>>]) -> Result<()> {
    let n = map.dim();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
    for cloud in clouds.iter_mut() {
        for z in cloud.iter_mut() {
            map.apply_in_place(z, &mut scratch);
            if !z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::EscapedToInfinity);
            }
        }
    }
    Ok(())
}

/// Builds `Psi` with `|Psi - Psi_j| < delta_j` on sampled `K_j` for every piece.
pub fn lemma_starshaped(spec: &MoveSpec, opts: &MoverOptions) -> Result<(AutChain, FitReport)> {
    spec.validate()?;
    let n = spec.pieces[0].center().dim();
    let m = spec.pieces.len();
    let mut chain = AutChain::identity(n);
    let mut moves = Vec::new();
    let moving: Vec<bool> = spec.motions.iter().map(|mo| !mo.is_identity()).collect();
    if moving.iter().any(|&b| b) && n < 2 {
        return Err(Error::InvalidInput("moving pieces needs n >= 2".into()));
    }

    let tol: Vec<f64> = (0..m).map(|j| spec.tolerance(j)).collect();
    if moving.iter().any(|&b| b) {
        let starts: Vec<Vec<Complex64>> = spec.pieces.iter().map(|p| p.center().coords.clone()).collect();
        let goals: Vec<Vec<Complex64>> = (0..m).map(|j| add(&starts[j], &spec.motions[j].translation)).collect();
        let exts: Vec<f64> = (0..m).map(|j| spec.pieces[j].extent() + tol[j]).collect();
        // decreasing distance from K_0, ties by index
        let mut order: Vec<usize> = (1..m).collect();
        let d0 = |j: usize| separation(&spec.pieces[0], &spec.pieces[j]);
        order.sort_by(|&a, &b| d0(b).total_cmp(&d0(a)).then(a.cmp(&b)));
        let translating: Vec<bool> =
            (0..m).map(|j| moving[j] && norm(&spec.motions[j].translation) > 0.0).collect();
        let (routes, scores) = plan_routes(&order, &starts, &goals, &exts, &translating)?;

        let mut r = rng(opts.seed);
        let mut clouds: Vec<Vec<Vec<Complex64>>> =
            spec.pieces.iter().map(|p| sample_piece(&mut r, p, opts.fit_samples, 0.7)).collect();
        let k0_disc = match &spec.pieces[0] {
            Convex::Ball { center, radius } => Some((center.coords.clone(), radius + tol[0])),
            _ => None,
        };

        // total "lever" of all legs: every gate's off-error is multiplied by it
        let span = 1.0 + goals.iter().map(|g| norm(g)).fold(0.0, f64::max);
        let squeeze_weight = |j: usize| n as f64 * spec.motions[j].scale.ln().abs() * span;
        let lever: f64 = routes
            .iter()
            .flatten()
            .flat_map(|r| r.legs.iter().map(|l| norm(l)))
            .sum::<f64>()
            + (0..m).map(squeeze_weight).sum::<f64>();
        let own: Vec<f64> = (0..m)
            .map(|j| {
                routes[j].as_ref().map_or(0.0, |r| r.legs.iter().map(|l| norm(l)).sum::<f64>())
                    + n as f64 * spec.motions[j].scale.ln().abs() * spec.pieces[j].extent()
            })
            .collect();

        let run_leg = |j: usize,
                       disp: &[Complex64],
                       score: f64,
                       clouds: &mut Vec<Vec<Vec<Complex64>>>,
                       chain: &mut AutChain,
                       moves: &mut Vec<MoveRecord>|
         -> Result<()> {
            let len = norm(disp);
            if len < 1e-14 {
                return Ok(());
            }
            let e = unit(disp);
            let basis = complement_basis(&e);
            let gate = build_gate(
                &basis,
                clouds,
                j,
                k0_disc.as_ref().map(|(c, r)| (c.as_slice(), *r)),
                opts.hull_points,
            );
            let off_tol: Vec<f64> = gate.off_owner.iter().map(|&k| tol[k] / (2.0 * lever)).collect();
            let fit = fit_plateau_weighted(&gate.on, tol[j] / (4.0 * own[j]), &gate.off, &off_tol, opts.max_degree)?;
            let map = ElementaryAut::shear(&e, fit.poly.scaled(Complex64::new(len, 0.0)))?;
            apply_to_clouds(&map, clouds)?;
            chain.push(map)?;
            moves.push(MoveRecord {
                piece: j,
                kind: "shear".into(),
                length: len,
                degree: fit.degree,
                error_on: fit.error_on,
                error_off: fit.error_off,
                score,
            });
            Ok(())
        };

        for phase in 0..2 {
            for &j in &order {
                if let Some(route) = &routes[j] {
                    if let Some(leg) = route.legs.get(phase) {
                        run_leg(j, leg, scores[j], &mut clouds, &mut chain, &mut moves)?;
                    }
                }
            }
        }

        // squeezes about the (moved) piece centers, one overshear per coordinate axis
        for &j in &order {
            let s = spec.motions[j].scale;
            if s == 1.0 {
                continue;
            }
            let at = goals[j].clone();
            let back: Vec<Complex64> = at.iter().map(|x| -x).collect();
            for axis in 0..n {
                let to_origin = ElementaryAut::translation(&back);
                apply_to_clouds(&to_origin, &mut clouds)?;
                chain.push(to_origin)?;
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[axis] = Complex64::new(1.0, 0.0);
                let basis = complement_basis(&e);
                let gate = build_gate(&basis, &clouds, j, None, opts.hull_points);
                let off_tol: Vec<f64> = gate.off_owner.iter().map(|&k| tol[k] / (2.0 * lever)).collect();
                let fit =
                    fit_plateau_weighted(&gate.on, tol[j] / (4.0 * own[j].max(1e-12)), &gate.off, &off_tol, opts.max_degree)?;
                let map = ElementaryAut::overshear(&e, fit.poly.scaled(Complex64::new(s.ln(), 0.0)))?;
                apply_to_clouds(&map, &mut clouds)?;
                chain.push(map)?;
                let home = ElementaryAut::translation(&at);
                apply_to_clouds(&home, &mut clouds)?;
                chain.push(home)?;
                moves.push(MoveRecord {
                    piece: j,
                    kind: "squeeze".into(),
                    length: s.ln().abs(),
                    degree: fit.degree,
                    error_on: fit.error_on,
                    error_off: fit.error_off,
                    score: f64::NAN,
                });
            }
        }
    }

    let per_piece_error = certify(spec, &chain, opts.heldout_samples, opts.seed ^ 0x5eed_0001)?;
    let pass = per_piece_error.iter().zip(&tol).all(|(e, t)| e < t);
    let report = FitReport {
        per_piece_error,
        per_piece_tolerance: tol,
        chain_length: chain.len(),
        fit_samples: opts.fit_samples,
        heldout_samples: opts.heldout_samples,
        seed: opts.seed,
        pass,
        moves,
    };
    Ok((chain, report))
}

/// Sampled sup over fresh samples of each piece of `|Psi(z) - Psi_j(z)|` (`inf` on escape).
pub fn certify(spec: &MoveSpec, chain: &AutChain, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(spec.pieces.len());
    for (piece, motion) in spec.pieces.iter().zip(&spec.motions) {
        let pts = sample_piece(&mut r, piece, samples, 0.5);
        let center = &piece.center().coords;
        let err = pts
            .par_iter()
            .map(|z| {
                let mut w = z.clone();
                match chain.eval_slice(&mut w) {
                    Ok(()) => dist(&w, &motion.apply(center, z)),
                    Err(_) => f64::INFINITY,
                }
            })
            .reduce(|| 0.0, f64::max);
        out.push(err);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainOptions {
    pub mover: MoverOptions,
    /// Truncation of the slab fibre, `|z_n| <= r_trunc`.
    pub r_trunc: f64,
    /// Target sites are drawn inside the ball of this radius.
    pub target_radius: f64,
    pub max_rejections: usize,
    /// Accepted target candidates per plate among which the best route is chosen.
    pub target_candidates: usize,
    /// Forward slab samples for the sampled form of the avoidance condition.
    pub slab_check_samples: usize,
    /// Samples of the ball for the closeness-to-identity condition.
    pub ball_check_samples: usize,
    /// Samples per piece for pull-back membership tests.
    pub pullback_samples: usize,
    /// Tolerance on moved plates, and the clearance required around target sites.
    pub landing_margin: f64,
}

impl Default for MainOptions {
    fn default() -> Self {
        MainOptions {
            mover: MoverOptions::default(),
            r_trunc: 10.0,
            target_radius: 3.0,
            max_rejections: 20_000,
            target_candidates: 8,
            slab_check_samples: 100_000,
            ball_check_samples: 10_000,
            pullback_samples: 200,
            landing_margin: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainReport {
    /// `None` when no plate had to move.
    pub fit: Option<FitReport>,
    pub moved: Vec<bool>,
    /// Target centers (the original center for plates that stay).
    pub targets: Vec<CPoint>,
    /// Sampled sup of `|Theta(z) - z|` over the ball.
    pub b_sup: f64,
    pub eps: f64,
    /// Per plate: min distance from the finite sampled `Theta(Phi(slab))` to the plate (diagnostic).
    pub avoidance_forward: Vec<f64>,
    /// Per plate: min over plate samples of `|(Phi^-1 Theta^-1 x)'|_inf - r`; NaN if a sample escaped.
    pub avoidance_pullback: Vec<f64>,
    pub slab_samples: usize,
    pub escaped_slab_samples: usize,
    pub pass: bool,
}

/// Uniform sample of the truncated slab `{|z_k| <= r for k < n, |z_n| <= r_trunc}`.
pub fn slab_sample<R: Rng>(rng: &mut R, n: usize, r: f64, r_trunc: f64) -> Vec<Complex64> {
    let disc = |rng: &mut R, rad: f64| {
        let u: f64 = rng.gen();
        Complex64::from_polar(rad * u.sqrt(), std::f64::consts::TAU * rng.gen::<f64>())
    };
    let mut z: Vec<Complex64> = (0..n - 1).map(|_| disc(rng, r)).collect();
    z.push(disc(rng, r_trunc));
    z
}

/// Worst `|(Phi^-1 x)'|_inf - r` over the points (`NaN` if any escapes).
fn pullback_clearance(phi: &AutChain, pts: &[Vec<Complex64>], r: f64) -> f64 {
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

/// Twists the plates off `Phi(r P x C)` while moving the ball by less than `eps`.
pub fn lemma_main(
    ball: &BallRegion,
    plates: &[Plate],
    phi: &AutChain,
    r: f64,
    eps: f64,
    delta_fit: f64,
    opts: &MainOptions,
) -> Result<(AutChain, MainReport)> {
    let n = ball.center.dim();
    if !(r > 0.0 && eps > 0.0 && delta_fit > 0.0) {
        return Err(Error::InvalidInput("r, eps and delta_fit must be positive".into()));
    }
    if phi.dim != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi.dim });
    }
    let mut r_gen = rng(opts.mover.seed ^ 0x7a11);
    let identity_report = |b_sup: f64| MainReport {
        fit: None,
        moved: vec![false; plates.len()],
        targets: plates.iter().map(|p| p.center.clone()).collect(),
        b_sup,
        eps,
        avoidance_forward: Vec::new(),
        avoidance_pullback: Vec::new(),
        slab_samples: 0,
        escaped_slab_samples: 0,
        pass: true,
    };
    if plates.is_empty() {
        return Ok((AutChain::identity(n), identity_report(0.0)));
    }

    // convex neighbourhoods: a slightly larger ball and slightly grown plates
    let gap0 = plates
        .iter()
        .map(|p| p.distance(&ball.center.coords) - ball.radius)
        .fold(f64::INFINITY, f64::min);
    if !(gap0 > 0.0) {
        return Err(Error::InvalidInput("plates must be disjoint from the ball".into()));
    }
    let pp = crate::labyrinth::plates_margin(plates);
    let pad0 = 0.05 * gap0;
    let k0 = Convex::Ball { center: ball.center.clone(), radius: ball.radius + pad0 };
    let kj: Vec<Convex> = plates
        .iter()
        .map(|p| {
            let pad = (0.1 * gap0).min(0.25 * pp).min(0.5 * p.radius);
            Convex::Plate(p.grown(pad))
        })
        .collect();

    let margin_r = 0.02 * r + 1e-3;
    let moved: Vec<bool> = kj
        .iter()
        .map(|k| {
            let pts = sample_piece(&mut r_gen, k, opts.pullback_samples, 0.7);
            let c = pullback_clearance(phi, &pts, r);
            !(c > margin_r)
        })
        .collect();
    if !moved.iter().any(|&b| b) {
        let mut rep = identity_report(0.0);
        rep.avoidance_pullback = kj
            .iter()
            .map(|k| pullback_clearance(phi, &sample_piece(&mut r_gen, k, opts.pullback_samples, 0.7), r))
            .collect();
        return Ok((AutChain::identity(n), rep));
    }

    // target sites
    let m = kj.len();
    let mut targets: Vec<Option<Vec<Complex64>>> = vec![None; m];
    let fixed: Vec<Convex> = (0..m).filter(|&j| !moved[j]).map(|j| kj[j].clone()).collect();
    let mut order: Vec<usize> = (0..m).filter(|&j| moved[j]).collect();
    order.sort_by(|&a, &b| separation(&k0, &kj[b]).total_cmp(&separation(&k0, &kj[a])).then(a.cmp(&b)));
    let clearance = 2.0 * opts.landing_margin + 0.01;
    for &j in &order {
        let ext = kj[j].extent();
        let reach = opts.target_radius - ext - opts.landing_margin;
        let mut accepted: Vec<Vec<Complex64>> = Vec::new();
        let mut tries = 0;
        while accepted.len() < opts.target_candidates && tries < opts.max_rejections {
            tries += 1;
            let tau = random_point_in_ball(&mut r_gen, n, reach).coords;
            let shift = sub(&tau, &kj[j].center().coords);
            let site = kj[j].translated(&shift);
            if !(separation(&site, &k0) > clearance) {
                continue;
            }
            let clash = fixed
                .iter()
                .chain(
                    targets
                        .iter()
                        .enumerate()
                        .filter_map(|(k, t)| t.as_ref().map(|t| (k, t)))
                        .map(|(k, t)| kj[k].translated(&sub(t, &kj[k].center().coords)))
                        .collect::<Vec<_>>()
                        .iter(),
                )
                .any(|o| !(separation(&site, o) > clearance))
                || kj.iter().any(|o| !(separation(&site, o) > clearance));
            if clash {
                continue;
            }
            let grown = match &site {
                Convex::Plate(p) => Convex::Plate(p.grown(2.0 * opts.landing_margin)),
                Convex::Ball { center, radius } => {
                    Convex::Ball { center: center.clone(), radius: radius + 2.0 * opts.landing_margin }
                }
            };
            let pts = sample_piece(&mut r_gen, &grown, opts.pullback_samples, 0.7);
            if !(pullback_clearance(phi, &pts, r) > margin_r) {
                continue;
            }
            accepted.push(tau);
        }
        if accepted.is_empty() {
            return Err(Error::ComplementCrowded);
        }
        // prefer the site whose best route separates most cleanly
        let starts: Vec<Vec<Complex64>> =
            std::iter::once(k0.center().coords.clone()).chain(kj.iter().map(|k| k.center().coords.clone())).collect();
        let exts: Vec<f64> = std::iter::once(k0.extent()).chain(kj.iter().map(|k| k.extent())).collect();
        let mut best: Option<(Vec<Complex64>, f64)> = None;
        for tau in accepted {
            let mut others: Vec<Blob> = (0..=m)
                .filter(|&k| k != j + 1)
                .map(|k| Blob { center: starts[k].clone(), ext: exts[k] })
                .collect();
            for (k, t) in targets.iter().enumerate() {
                if let Some(t) = t {
                    others[if k < j { k + 1 } else { k }] = Blob { center: t.clone(), ext: exts[k + 1] };
                }
            }
            let away = sub(&starts[j + 1], &starts[0]);
            let score = candidate_routes(&starts[j + 1], &tau, &away)
                .iter()
                .map(|route| {
                    let mut at = starts[j + 1].clone();
                    let mut worst = f64::INFINITY;
                    for leg in &route.legs {
                        if norm(leg) > 1e-14 {
                            worst = worst.min(leg_score(&at, leg, exts[j + 1], &others));
                        }
                        at = add(&at, leg);
                    }
                    worst
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if best.as_ref().map_or(true, |b| score > b.1 + 1e-12) {
                best = Some((tau, score));
            }
        }
        targets[j] = Some(best.expect("non-empty candidates").0);
    }

    let mut pieces = vec![k0.clone()];
    let mut motions = vec![Motion::identity(n)];
    for j in 0..m {
        pieces.push(kj[j].clone());
        motions.push(match &targets[j] {
            Some(t) => Motion::translation(&sub(t, &kj[j].center().coords)),
            None => Motion::identity(n),
        });
    }
    let spec = MoveSpec { pieces, motions, delta: delta_fit, piece_delta: Some(opts.landing_margin) };
    let (psi, fit) = lemma_starshaped(&spec, &opts.mover)?;
    let theta = psi.inverse();

    // (b): closeness to the identity on the ball
    let b_pts: Vec<Vec<Complex64>> = sample_piece(
        &mut r_gen,
        &Convex::Ball { center: ball.center.clone(), radius: ball.radius },
        opts.ball_check_samples,
        0.3,
    );
    let b_sup = b_pts
        .par_iter()
        .map(|z| {
            let mut w = z.clone();
            match theta.eval_slice(&mut w) {
                Ok(()) => dist(&w, z),
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);

    // (a): forward slab samples pushed through Phi then Theta
    let (forward, escaped) = forward_avoidance(phi, &theta, plates, r, opts.r_trunc, opts.slab_check_samples, opts.mover.seed ^ 0xa5a5)?;
    let pullback: Vec<f64> = plates
        .iter()
        .map(|p| {
            let pts = sample_piece(&mut r_gen, &Convex::Plate(p.clone()), opts.pullback_samples, 0.7);
            let through: Vec<Vec<Complex64>> = pts
                .into_iter()
                .map(|x| {
                    let mut w = x;
                    match psi.eval_slice(&mut w) {
                        Ok(()) => w,
                        Err(_) => vec![Complex64::new(f64::NAN, 0.0); n],
                    }
                })
                .collect();
            pullback_clearance(phi, &through, r)
        })
        .collect();
    // plate-side check: every sampled plate point pulls back off the slab; the forward
    // check is diagnostic only since most far slab samples overflow under Theta
    let pass = fit.pass && b_sup < eps && pullback.iter().all(|&d| d > 0.0);
    Ok((
        theta,
        MainReport {
            fit: Some(fit),
            moved,
            targets: (0..m)
                .map(|j| CPoint::new(targets[j].clone().unwrap_or_else(|| plates[j].center.coords.clone())))
                .collect(),
            b_sup,
            eps,
            avoidance_forward: forward,
            avoidance_pullback: pullback,
            slab_samples: opts.slab_check_samples,
            escaped_slab_samples: escaped,
            pass,
        },
    ))
}

/// Per plate, min distance from `theta(phi(s))` to the plate over sampled slab points `s`;
/// escaped samples are counted and skipped (they lie far outside every plate).
pub fn forward_avoidance(
    phi: &AutChain,
    theta: &AutChain,
    plates: &[Plate],
    r: f64,
    r_trunc: f64,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, usize)> {
    let n = phi.dim;
    let mut g = rng(seed);
    let pts: Vec<Vec<Complex64>> = (0..samples).map(|_| slab_sample(&mut g, n, r, r_trunc)).collect();
    let results: Vec<Option<Vec<f64>>> = pts
        .par_iter()
        .map(|s| {
            let mut w = s.clone();
            phi.eval_slice(&mut w).ok()?;
            theta.eval_slice(&mut w).ok()?;
            Some(plates.iter().map(|p| p.distance(&w)).collect())
        })
        .collect();
    let mut mins = vec![f64::INFINITY; plates.len()];
    let mut escaped = 0;
    for r in results {
        match r {
            Some(d) => mins.iter_mut().zip(d).for_each(|(m, x)| *m = m.min(x)),
            None => escaped += 1,
        }
    }
    Ok((mins, escaped))
}

#[cfg(test)]
mod tests;
