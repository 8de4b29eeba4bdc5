//! Concentric shells of the ball and the plates ("labyrinth") placed inside them,
//! plus a grid shortest-path oracle that certifies how long any path crossing a
//! shell while avoiding the plates has to be.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convex::{separation, Convex, Plate};
use crate::error::{Error, Result};
use crate::geometry::{BallRegion, CPoint};

/// Plate radius as a fraction of the shell width. Small plates keep the
/// projections used by the mover well separated from the inner ball.
pub const PLATE_RADIUS_FRAC: f64 = 0.05;

/// Default plate half-thickness as a fraction of the shell width.
pub const DEFAULT_THICKNESS_FRAC: f64 = 0.002;

/// Default node budget for the grid search.
pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    /// 1-based shell index.
    pub index: usize,
    pub inner: f64,
    pub outer: f64,
}

impl Shell {
    pub fn width(&self) -> f64 {
        self.outer - self.inner
    }
}

/// Shells `(rho_i, rho_{i+1})` from a strictly increasing schedule in (0, 1).
pub fn build_shells(rho: &[f64]) -> Result<Vec<Shell>> {
    if rho.len() < 2 {
        return Err(Error::InvalidRadiusSchedule("need at least two radii".into()));
    }
    for (k, r) in rho.iter().enumerate() {
        if !(*r > 0.0 && *r < 1.0) {
            return Err(Error::InvalidRadiusSchedule(format!("radius {r} at position {k} outside (0, 1)")));
        }
    }
    for k in 1..rho.len() {
        if !(rho[k] > rho[k - 1]) {
            return Err(Error::InvalidRadiusSchedule(format!("not increasing at position {k}")));
        }
    }
    Ok(rho
        .windows(2)
        .enumerate()
        .map(|(k, w)| Shell { index: k + 1, inner: w[0], outer: w[1] })
        .collect())
}

/// Fixed generic unitary applied to the plate directions so that no plate sits
/// on a coordinate axis (keeps the grid oracle's axis probes informative).
fn base_rotation(n: usize) -> Vec<Complex64> {
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        u[k * n + k] = Complex64::new(1.0, 0.0);
    }
    let (c, s) = (0.37f64.cos(), 0.37f64.sin());
    for k in 0..n.saturating_sub(1) {
        // rotate rows k, k+1 by a real angle, then twist row k by a phase
        let mut next = u.clone();
        for j in 0..n {
            let a = u[k * n + j];
            let b = u[(k + 1) * n + j];
            next[k * n + j] = a * c - b * s;
            next[(k + 1) * n + j] = a * s + b * c;
        }
        u = next;
    }
    for k in 0..n {
        let ph = Complex64::from_polar(1.0, 0.21 * (k + 1) as f64);
        for j in 0..n {
            u[k * n + j] *= ph;
        }
    }
    u
}

fn apply(u: &[Complex64], n: usize, v: &[Complex64]) -> Vec<Complex64> {
    (0..n).map(|i| (0..n).map(|j| u[i * n + j] * v[j]).sum()).collect()
}

/// Unit plate directions for one mid-sphere: the 4n points `±e_k, ±i e_k`, rotated.
fn sphere_directions(n: usize, sphere: usize, density: usize) -> Vec<Vec<Complex64>> {
    let u = base_rotation(n);
    let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * sphere as f64 / density as f64);
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)] {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = unit * phase;
            out.push(apply(&u, n, &e));
        }
    }
    out
}

/// Tangential plates on `density` concentric mid-spheres of the shell.
pub fn build_labyrinth_shell(shell: &Shell, n: usize, density: usize, thickness: f64) -> Result<Vec<Plate>> {
    if density == 0 {
        return Err(Error::InvalidInput("density must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !(thickness > 0.0) {
        return Err(Error::InvalidInput("thickness must be positive".into()));
    }
    let w = shell.width();
    let mut plates = Vec::new();
    for k in 0..density {
        let radius_mid = shell.inner + w * (k + 1) as f64 / (density + 1) as f64;
        let room = (shell.outer * shell.outer - (radius_mid + thickness).powi(2)).max(0.0).sqrt();
        let plate_radius = (PLATE_RADIUS_FRAC * w).min(0.5 * room);
        for dir in sphere_directions(n, k, density) {
            plates.push(Plate {
                center: CPoint::new(dir.iter().map(|x| x * radius_mid).collect()),
                normal: dir,
                radius: plate_radius,
                thickness,
            });
        }
    }
    let margin = plates_margin(&plates);
    let inner_gap = plates.iter().map(|p| p.norm_range().0 - shell.inner).fold(f64::INFINITY, f64::min);
    let outer_gap = plates.iter().map(|p| shell.outer - p.norm_range().1).fold(f64::INFINITY, f64::min);
    let worst = margin.min(inner_gap).min(outer_gap);
    if !(worst > 0.0) {
        return Err(Error::PlatesOverlap { margin: worst });
    }
    Ok(plates)
}

/// Minimum signed separation over all plate pairs (`+inf` for fewer than two plates).
pub fn plates_margin(plates: &[Plate]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..plates.len() {
        for j in i + 1..plates.len() {
            m = m.min(separation(&Convex::Plate(plates[i].clone()), &Convex::Plate(plates[j].clone())));
        }
    }
    m
}

/// Minimum over pairwise plate separations, plate-to-ball distances and plate-to-outer-sphere
/// distances. A negative value means the configuration is invalid.
pub fn check_disjoint_and_contained(ball: &BallRegion, plates: &[Plate], outer_radius: f64) -> f64 {
    let mut m = plates_margin(plates);
    for p in plates {
        let d = p.distance(&ball.center.coords) - ball.radius;
        m = m.min(d);
        m = m.min(outer_radius - p.norm_range().1);
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidingLength {
    /// Grid optimum (upper bound on the continuum optimum); `inf` when no grid path exists.
    pub grid_length: f64,
    /// `grid_length - h sqrt(2n)`, the certified per-shell increment.
    pub lower_estimate: f64,
    pub grid_step: f64,
    pub expanded: usize,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    f: f64,
    g: f64,
    key: u128,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, ties broken toward larger g, then key, for determinism
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Grid<'a> {
    dims: usize,
    h: f64,
    inner: f64,
    outer: f64,
    half: i64,
    plates: &'a [Plate],
    tol: f64,
}

impl<'a> Grid<'a> {
    fn point(&self, idx: &[i64]) -> Vec<Complex64> {
        idx.chunks(2)
            .map(|c| Complex64::new(c[0] as f64 * self.h, c.get(1).copied().unwrap_or(0) as f64 * self.h))
            .collect()
    }

    fn radius(&self, idx: &[i64]) -> f64 {
        idx.iter().map(|&k| (k as f64 * self.h).powi(2)).sum::<f64>().sqrt()
    }

    fn is_start(&self, idx: &[i64]) -> bool {
        self.radius(idx) <= self.inner + self.tol
    }

    fn is_goal(&self, idx: &[i64]) -> bool {
        self.radius(idx) >= self.outer - self.tol
    }

    fn blocked(&self, idx: &[i64]) -> bool {
        let x = self.point(idx);
        self.plates.iter().any(|p| p.contains(&x))
    }

    fn key(&self, idx: &[i64]) -> u128 {
        let base = (2 * self.half + 1) as u128;
        idx.iter().fold(0u128, |acc, &k| acc * base + (k + self.half) as u128)
    }

    fn unkey(&self, mut key: u128) -> Vec<i64> {
        let base = (2 * self.half + 1) as u128;
        let mut out = vec![0i64; self.dims];
        for d in (0..self.dims).rev() {
            out[d] = (key % base) as i64 - self.half;
            key /= base;
        }
        out
    }

    fn heuristic(&self, idx: &[i64]) -> f64 {
        (self.outer - self.radius(idx)).max(0.0)
    }
}

fn offsets(dims: usize) -> Vec<(Vec<i64>, f64)> {
    let total = 3usize.pow(dims as u32);
    let mut out = Vec::with_capacity(total - 1);
    for code in 0..total {
        let mut c = code;
        let mut v = vec![0i64; dims];
        let mut nz = 0;
        for d in v.iter_mut() {
            *d = (c % 3) as i64 - 1;
            c /= 3;
            if *d != 0 {
                nz += 1;
            }
        }
        if nz > 0 {
            out.push((v, (nz as f64).sqrt()));
        }
    }
    out
}

/// Straight lattice rays from the origin: cheapest unobstructed crossing found, if any.
fn probe_upper_bound(grid: &Grid, offs: &[(Vec<i64>, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for (d, len) in offs {
        let at = |k: i64| -> Vec<i64> { d.iter().map(|x| x * k).collect() };
        let mut k = 0i64;
        while grid.is_start(&at(k + 1)) {
            k += 1;
        }
        let start = k;
        let mut ok = true;
        loop {
            k += 1;
            let p = at(k);
            if grid.is_goal(&p) {
                break;
            }
            if grid.blocked(&p) || k > 4 * grid.half {
                ok = false;
                break;
            }
        }
        if ok {
            best = best.min((k - start) as f64 * len * grid.h);
        }
    }
    best
}

/// Lattice points with `lo < |x| <= inner`, i.e. starts whose A* key `outer - |x|` is below the bound.
fn band_starts(grid: &Grid, lo: f64, budget: usize) -> Result<Vec<Vec<i64>>> {
    let dims = grid.dims;
    let m = (grid.inner / grid.h).floor() as i64 + 1;
    let mut out = Vec::new();
    let mut idx = vec![-m; dims.saturating_sub(1)];
    loop {
        let partial: f64 = idx.iter().map(|&k| (k as f64 * grid.h).powi(2)).sum();
        let rmax2 = (grid.inner + grid.tol).powi(2) - partial;
        if rmax2 >= 0.0 {
            let kmax = (rmax2.sqrt() / grid.h).floor() as i64;
            for last in -kmax..=kmax {
                let mut full = idx.clone();
                full.push(last);
                if grid.radius(&full) > lo && grid.is_start(&full) {
                    out.push(full);
                    if out.len() > budget {
                        return Err(Error::SearchBudget(budget));
                    }
                }
            }
        }
        // odometer over the first dims-1 coordinates
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Ok(out);
            }
            idx[d] += 1;
            if idx[d] <= m {
                break;
            }
            idx[d] = -m;
            d += 1;
        }
    }
}

/// Shortest grid path from the inner sphere to the outer sphere of `shell` avoiding the
/// thickened plates, on the lattice `h Z^{2n}` with all 3^{2n}-1 neighbour moves.
///
/// The dimension is taken from the plates (n = 2 when there are none).
pub fn estimate_min_avoiding_length(shell: &Shell, plates: &[Plate], grid_step: f64) -> Result<AvoidingLength> {
    let n = plates.first().map(|p| p.center.dim()).unwrap_or(2);
    estimate_min_avoiding_length_in(n, shell, plates, grid_step, DEFAULT_NODE_BUDGET)
}

/// As [`estimate_min_avoiding_length`] with an explicit dimension and node budget.
pub fn estimate_min_avoiding_length_in(
    n: usize,
    shell: &Shell,
    plates: &[Plate],
    grid_step: f64,
    budget: usize,
) -> Result<AvoidingLength> {
    if !(grid_step > 0.0) {
        return Err(Error::InvalidInput("grid step must be positive".into()));
    }
    for p in plates {
        if p.thickness < 2.0 * grid_step * (1.0 - 1e-9) {
            return Err(Error::UnresolvedObstacles { thickness: p.thickness, step: grid_step });
        }
    }
    if plates.iter().any(|p| p.center.dim() != n) {
        return Err(Error::InvalidInput("plate dimension differs from the grid dimension".into()));
    }
    let dims = 2 * n;
    let grid = Grid {
        dims,
        h: grid_step,
        inner: shell.inner,
        outer: shell.outer,
        half: (shell.outer / grid_step).ceil() as i64 + 4,
        plates,
        tol: 1e-9 * grid_step,
    };
    let offs = offsets(dims);
    let finish = |len: f64, expanded: usize| AvoidingLength {
        grid_length: len,
        lower_estimate: if len.is_finite() { len - grid_step * (dims as f64).sqrt() } else { len },
        grid_step,
        expanded,
    };

    let upper = probe_upper_bound(&grid, &offs);
    // every start has key outer - |s| >= width, so a probe of exactly that cost is optimal
    let lo = if upper.is_finite() { shell.outer - upper } else { shell.inner - 2.0 * grid_step * (dims as f64).sqrt() };
    if lo >= shell.inner - grid.tol {
        return Ok(finish(upper, 0));
    }
    // rough lattice count of the start band, to fail fast instead of exhausting memory
    let unit_sphere_area = 2.0 * std::f64::consts::PI.powf(n as f64) / (1..n).map(|k| k as f64).product::<f64>();
    let band = unit_sphere_area * shell.inner.powi(dims as i32 - 1) * (shell.inner - lo.max(0.0) + grid_step);
    if band / grid_step.powi(dims as i32) > budget as f64 {
        return Err(Error::SearchBudget(budget));
    }
    let mut starts = band_starts(&grid, lo.max(0.0) - grid.tol, budget)?;
    starts.sort_by(|a, b| grid.heuristic(a).total_cmp(&grid.heuristic(b)).then_with(|| a.cmp(b)));

    let mut best_g: HashMap<u128, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut next_start = 0usize;
    let mut expanded = 0usize;
    loop {
        // feed starts lazily in key order
        while next_start < starts.len() {
            let s = &starts[next_start];
            let f = grid.heuristic(s);
            if heap.peek().map_or(true, |top: &Entry| f <= top.f) {
                let key = grid.key(s);
                if best_g.get(&key).map_or(true, |&g| g > 0.0) {
                    best_g.insert(key, 0.0);
                    heap.push(Entry { f, g: 0.0, key });
                }
                next_start += 1;
            } else {
                break;
            }
        }
        let Some(Entry { f, g, key }) = heap.pop() else {
            return Ok(finish(upper, expanded));
        };
        if f >= upper {
            return Ok(finish(upper, expanded));
        }
        if best_g.get(&key).map_or(false, |&b| g > b) {
            continue;
        }
        let idx = grid.unkey(key);
        if g > 0.0 && grid.is_goal(&idx) {
            return Ok(finish(g, expanded));
        }
        expanded += 1;
        if expanded > budget {
            return Err(Error::SearchBudget(budget));
        }
        for (d, len) in &offs {
            let nb: Vec<i64> = idx.iter().zip(d).map(|(a, b)| a + b).collect();
            if grid.is_start(&nb) {
                continue;
            }
            if !grid.is_goal(&nb) && grid.blocked(&nb) {
                continue;
            }
            let ng = g + len * grid.h;
            let nkey = grid.key(&nb);
            if best_g.get(&nkey).map_or(true, |&b| ng < b) {
                best_g.insert(nkey, ng);
                heap.push(Entry { f: ng + grid.heuristic(&nb), g: ng, key: nkey });
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labyrinth {
    pub dim: usize,
    pub shells: Vec<Shell>,
    pub plates: Vec<Vec<Plate>>,
    /// Certified per-shell length increments (lower estimates from the grid oracle).
    pub deltas: Vec<f64>,
    pub grid_steps: Vec<f64>,
    /// Per-shell geometric margin from [`check_disjoint_and_contained`].
    pub margins: Vec<f64>,
}

impl Labyrinth {
    /// Builds every shell's plates and certifies each shell with the grid oracle.
    pub fn build(n: usize, rho: &[f64], density: usize, thickness_frac: f64, grid_frac: f64) -> Result<Labyrinth> {
        let shells = build_shells(rho)?;
        let mut plates = Vec::with_capacity(shells.len());
        let mut deltas = Vec::with_capacity(shells.len());
        let mut grid_steps = Vec::with_capacity(shells.len());
        let mut margins = Vec::with_capacity(shells.len());
        for s in &shells {
            let ps = build_labyrinth_shell(s, n, density, thickness_frac * s.width())?;
            let h = grid_frac * s.width();
            let est = estimate_min_avoiding_length(s, &ps, h)?;
            margins.push(check_disjoint_and_contained(&BallRegion::centered(n, s.inner)?, &ps, s.outer));
            deltas.push(est.lower_estimate);
            grid_steps.push(h);
            plates.push(ps);
        }
        Ok(Labyrinth { dim: n, shells, plates, deltas, grid_steps, margins })
    }

    /// All plates of shells `1..=i` (1-based), flattened.
    pub fn plates_up_to(&self, i: usize) -> Vec<Plate> {
        self.plates.iter().take(i).flatten().cloned().collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shell(a: f64, b: f64) -> Shell {
        Shell { index: 1, inner: a, outer: b }
    }

    #[test]
    fn shell_widths() {
        let rho: Vec<f64> = (1..6).map(|i| 1.0 - 0.5f64.powi(i)).collect();
        let shells = build_shells(&rho).unwrap();
        for (k, s) in shells.iter().enumerate() {
            assert!((s.width() - 0.5f64.powi(k as i32 + 2)).abs() < 1e-15);
        }
        let one = build_shells(&[0.5, 0.9]).unwrap();
        assert_eq!(one, vec![shell(0.5, 0.9)]);
        let harmonic: Vec<f64> = (1..6).map(|i| 1.0 - 1.0 / (i as f64 + 1.0)).collect();
        for (k, s) in build_shells(&harmonic).unwrap().iter().enumerate() {
            let i = (k + 1) as f64;
            assert!((s.width() - 1.0 / ((i + 1.0) * (i + 2.0))).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_schedules_rejected() {
        assert!(matches!(build_shells(&[0.5, 0.4]), Err(Error::InvalidRadiusSchedule(_))));
        assert!(matches!(build_shells(&[0.5, 1.0]), Err(Error::InvalidRadiusSchedule(_))));
        assert!(matches!(build_shells(&[0.5]), Err(Error::InvalidRadiusSchedule(_))));
    }

    #[test]
    fn density_one_sits_on_mid_sphere() {
        let plates = build_labyrinth_shell(&shell(0.5, 0.9), 2, 1, 0.0008).unwrap();
        assert_eq!(plates.len(), 8);
        for p in &plates {
            assert!((p.center.norm() - 0.7).abs() < 1e-12);
            let (lo, hi) = p.norm_range();
            assert!(lo > 0.5 && hi < 0.9);
        }
        assert!(check_disjoint_and_contained(&BallRegion::centered(2, 0.5).unwrap(), &plates, 0.9) > 0.0);
    }

    #[test]
    fn density_zero_rejected() {
        assert!(build_labyrinth_shell(&shell(0.5, 0.9), 2, 0, 0.001).is_err());
    }

    #[test]
    fn dense_shell_margin_matches_pairwise_oracle() {
        let plates = build_labyrinth_shell(&shell(0.5, 0.9), 2, 3, 0.002).unwrap();
        assert_eq!(plates.len(), 24);
        // brute force: every pair, sampled points of each plate
        let mut sampled = f64::INFINITY;
        let clouds: Vec<Vec<Vec<Complex64>>> = plates.iter().map(|p| plate_cloud(p)).collect();
        for i in 0..plates.len() {
            for j in i + 1..plates.len() {
                for x in &clouds[i] {
                    for y in &clouds[j] {
                        sampled = sampled.min(crate::geometry::dist(x, y));
                    }
                }
            }
        }
        let m = plates_margin(&plates);
        assert!(m > 0.0);
        assert!(m <= sampled + 1e-12 && sampled - m < 0.01, "{m} {sampled}");
    }

    fn plate_cloud(p: &Plate) -> Vec<Vec<Complex64>> {
        // rim points in the plane spanned by i*normal and a few complex-tangent directions
        let n = p.center.dim();
        let basis = crate::automorphism::complement_basis(&p.normal);
        let mut dirs = vec![p.normal.iter().map(|x| x * Complex64::new(0.0, 1.0)).collect::<Vec<_>>()];
        for b in basis {
            dirs.push(b.clone());
            dirs.push(b.iter().map(|x| x * Complex64::new(0.0, 1.0)).collect());
        }
        let mut out = Vec::new();
        for a in 0..dirs.len() {
            for b in 0..dirs.len() {
                for k in 0..24 {
                    let t = k as f64 * std::f64::consts::TAU / 24.0;
                    for side in [-1.0, 1.0] {
                        let v: Vec<Complex64> = (0..n)
                            .map(|c| {
                                p.center.coords[c]
                                    + (dirs[a][c] * t.cos() + dirs[b][c] * t.sin()) * p.radius
                                    + p.normal[c] * (side * p.thickness)
                            })
                            .collect();
                        if p.contains(&v) || p.distance(&v) < 1e-9 {
                            out.push(v);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identical_plates_fail_margin() {
        let plates = build_labyrinth_shell(&shell(0.5, 0.9), 2, 1, 0.001).unwrap();
        let twice = vec![plates[0].clone(), plates[0].clone()];
        assert!(check_disjoint_and_contained(&BallRegion::centered(2, 0.5).unwrap(), &twice, 0.9) < 0.0);
    }

    #[test]
    fn empty_shell_matches_width() {
        let est = estimate_min_avoiding_length(&shell(0.5, 0.9), &[], 0.01).unwrap();
        assert!((est.grid_length - 0.4).abs() <= 0.02 * 0.4, "{est:?}");
        assert!(est.lower_estimate <= 0.4);
    }

    #[test]
    fn tiny_plate_changes_nothing() {
        let mut p = build_labyrinth_shell(&shell(0.5, 0.9), 2, 1, 0.02).unwrap().remove(0);
        p.radius = 1e-3;
        let est = estimate_min_avoiding_length(&shell(0.5, 0.9), &[p], 0.01).unwrap();
        assert!((est.grid_length - 0.4).abs() <= 0.02 * 0.4);
    }

    #[test]
    fn thin_plates_are_unresolved() {
        let plates = build_labyrinth_shell(&shell(0.5, 0.9), 2, 1, 0.001).unwrap();
        assert!(matches!(
            estimate_min_avoiding_length(&shell(0.5, 0.9), &plates, 0.01),
            Err(Error::UnresolvedObstacles { .. })
        ));
    }

    fn ring_plate(angle: f64, r: f64, radius: f64, thickness: f64) -> Plate {
        let dir = vec![Complex64::from_polar(1.0, angle)];
        Plate { center: CPoint::new(dir.iter().map(|x| x * r).collect()), normal: dir, radius, thickness }
    }

    #[test]
    fn planar_grid_converges_toward_width() {
        // n = 1: annulus in R^2 with radii off the lattice
        let s = shell(0.503, 0.897);
        let mut last = f64::INFINITY;
        for h in [0.04, 0.02, 0.01, 0.005] {
            let est = estimate_min_avoiding_length_in(1, &s, &[], h, DEFAULT_NODE_BUDGET).unwrap();
            let err = (est.grid_length - s.width()).abs();
            assert!(est.grid_length >= s.width() - 1e-12);
            assert!(err <= last + 1e-12, "h={h}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn blocking_plate_forces_detour() {
        // in the plane a wide plate across the axis ray adds a detour but leaves a path
        let s = shell(0.5, 0.9);
        let p = ring_plate(0.0, 0.7, 0.3, 0.02);
        let base = estimate_min_avoiding_length(&s, &[], 0.01).unwrap();
        let blocked = estimate_min_avoiding_length(&s, &[p], 0.01).unwrap();
        assert!(blocked.grid_length >= base.grid_length);
    }

    #[test]
    fn adding_plates_never_shortens() {
        let s = shell(0.3, 0.6);
        let mut plates = Vec::new();
        let mut last = estimate_min_avoiding_length(&s, &plates, 0.01).unwrap().grid_length;
        for k in 0..6 {
            plates.push(ring_plate(0.9 * k as f64, 0.45, 0.12, 0.02));
            let g = estimate_min_avoiding_length(&s, &plates, 0.01).unwrap().grid_length;
            assert!(g >= last - 1e-12, "{g} < {last}");
            last = g;
        }
    }

    #[test]
    fn closed_ring_has_no_path() {
        // overlapping tangential plates all around the planar annulus block every crossing
        let s = shell(0.3, 0.6);
        let plates: Vec<Plate> = (0..12).map(|k| ring_plate(k as f64 * std::f64::consts::TAU / 12.0, 0.45, 0.15, 0.02)).collect();
        let est = estimate_min_avoiding_length(&s, &plates, 0.01).unwrap();
        assert!(est.grid_length.is_infinite());
    }

    #[test]
    fn default_style_labyrinth_certifies_width() {
        let s = shell(0.7, 0.9);
        let plates = build_labyrinth_shell(&s, 2, 1, DEFAULT_THICKNESS_FRAC * s.width()).unwrap();
        let est = estimate_min_avoiding_length(&s, &plates, 0.001 * s.width()).unwrap();
        assert!(est.lower_estimate >= 0.05);
        assert!((est.grid_length - 0.2).abs() < 1e-9);
    }
}
