//! Plateau polynomials: close to 1 on one sample set and close to 0 on another.
//!
//! Fits are weighted least squares followed by Lawson reweighting toward the
//! minimax solution. One variable uses a Newton basis on Leja points of the sample
//! set, scaled by its estimated capacity, which stays well conditioned at high
//! degree; several variables use monomials of the normalized variable. The degree is
//! escalated until the sampled sup error drops below the requested tolerance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{monomials, PolyFunc};

const LAWSON_ITERS: usize = 16;

#[derive(Clone, Debug)]
pub struct PlateauFit {
    pub poly: PolyFunc,
    /// Sampled sup of |f - 1| on the on-set and |f| on the off-set.
    pub error: f64,
    /// Sampled sup of |f - 1| on the on-set alone.
    pub error_on: f64,
    /// Sampled sup of |f| on the off-set alone.
    pub error_off: f64,
    pub degree: usize,
}

fn min_cross_distance(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        for q in b {
            let d = crate::geometry::dist(p, q);
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Degrees tried in order when escalating up to `max_degree`.
fn degree_ladder(max_degree: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2usize;
    while d < max_degree {
        out.push(d);
        d = (d as f64 * 1.35).ceil() as usize + 1;
    }
    out.push(max_degree);
    out
}

/// Fits `f` with `|f - 1| < tol` on `on` and `|f| < tol` on `off`.
pub fn fit_plateau_poly(
    on: &[Vec<Complex64>],
    off: &[Vec<Complex64>],
    max_degree: usize,
    tol: f64,
) -> Result<PlateauFit> {
    fit_plateau_poly_split(on, off, max_degree, tol, tol)
}

/// As [`fit_plateau_poly`] with separate tolerances on the two sets.
pub fn fit_plateau_poly_split(
    on: &[Vec<Complex64>],
    off: &[Vec<Complex64>],
    max_degree: usize,
    tol_on: f64,
    tol_off: f64,
) -> Result<PlateauFit> {
    fit_plateau_weighted(on, tol_on, off, &vec![tol_off; off.len()], max_degree)
}

/// Plateau fit with a tolerance per off-sample: `|f - 1| < tol_on` on `on` and
/// `|f(p_k)| < off_tol[k]` on `off`. `error_off` reports the raw sup of `|f|`.
pub fn fit_plateau_weighted(
    on: &[Vec<Complex64>],
    tol_on: f64,
    off: &[Vec<Complex64>],
    off_tol: &[f64],
    max_degree: usize,
) -> Result<PlateauFit> {
    if off_tol.len() != off.len() {
        return Err(Error::InvalidInput("one tolerance per off-sample required".into()));
    }
    let tol_off = off_tol.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = tol_on.min(tol_off);
    let vars = on
        .first()
        .or(off.first())
        .map(|p| p.len())
        .ok_or_else(|| Error::InvalidInput("plateau fit needs samples".into()))?;
    if off.is_empty() {
        return Ok(PlateauFit {
            poly: PolyFunc::constant(vars, Complex64::new(1.0, 0.0)),
            error: 0.0,
            error_on: 0.0,
            error_off: 0.0,
            degree: 0,
        });
    }
    if on.is_empty() {
        return Ok(PlateauFit { poly: PolyFunc::zero(vars), error: 0.0, error_on: 0.0, error_off: 0.0, degree: 0 });
    }
    if !(min_cross_distance(on, off) > 0.0) {
        return Err(Error::OverlappingSets);
    }

    let pts: Vec<&Vec<Complex64>> = on.iter().chain(off).collect();
    let basis = if vars == 1 { Basis::newton(&pts, max_degree.max(1)) } else { Basis::monomial(&pts, vars) };
    let target: Vec<Complex64> = (0..pts.len())
        .map(|i| if i < on.len() { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect();
    // residuals are measured in units of the per-set tolerance
    let unit: Vec<f64> =
        (0..pts.len()).map(|i| if i < on.len() { 1.0 / tol_on } else { 1.0 / off_tol[i - on.len()] }).collect();
    let w_on = 0.5 / on.len() as f64;
    let w_off = 0.5 / off.len() as f64;

    let mut best: Option<(PlateauFit, f64)> = None;
    let full = if vars == 1 { Some(basis.design(&pts, basis.max_degree(max_degree.max(1)))) } else { None };
    for degree in degree_ladder(basis.max_degree(max_degree.max(1))) {
        let design = match &full {
            Some(f) => f.columns(0, degree + 1).into_owned(),
            None => basis.design(&pts, degree),
        };
        let mut weights: Vec<f64> = (0..pts.len())
            .map(|i| if i < on.len() { w_on } else { w_off } * unit[i] * unit[i])
            .collect();
        let mut local_best: Option<(Vec<Complex64>, f64, f64, f64)> = None;
        for _ in 0..LAWSON_ITERS {
            let coeffs = weighted_solve(&design, &target, &weights);
            let raw = residuals(&design, &coeffs, &target);
            let resid: Vec<f64> = raw.iter().zip(&unit).map(|(r, u)| r * u).collect();
            let score = resid.iter().cloned().fold(0.0, f64::max);
            let e_on = raw[..on.len()].iter().cloned().fold(0.0, f64::max);
            let e_off = raw[on.len()..].iter().cloned().fold(0.0, f64::max);
            if local_best.as_ref().map_or(true, |b| score < b.1) {
                local_best = Some((coeffs, score, e_on, e_off));
            }
            if score < 0.5 {
                break;
            }
            let total: f64 = weights.iter().zip(&resid).map(|(w, r)| w * r).sum();
            if !(total > 0.0) {
                break;
            }
            for (w, r) in weights.iter_mut().zip(&resid) {
                // keep a floor so no sample is ever dropped from the fit
                *w = (*w * r / total).max(1e-14);
            }
        }
        let (coeffs, score, error_on, error_off) = local_best.expect("at least one Lawson iteration");
        let poly = basis.poly(degree, coeffs);
        let fit = PlateauFit { poly, error: error_on.max(error_off), error_on, error_off, degree };
        if score < 1.0 {
            return Ok(fit);
        }
        if best.as_ref().map_or(true, |b: &(PlateauFit, f64)| score < b.1) {
            best = Some((fit, score));
        }
    }
    // report the achieved error in units of the tightest tolerance
    let achieved = best.map(|b| b.1 * tol).unwrap_or(f64::INFINITY);
    Err(Error::PlateauFitFailed { achieved, wanted: tol })
}

/// Normalization and basis shared by all degrees of one fit.
struct Basis {
    vars: usize,
    center: Vec<Complex64>,
    scale: f64,
    /// Normalized Leja nodes (one variable only).
    nodes: Vec<Complex64>,
}

impl Basis {
    fn monomial(pts: &[&Vec<Complex64>], vars: usize) -> Self {
        // affine normalization onto the unit polydisc-ish region
        let mut lo = vec![(f64::INFINITY, f64::INFINITY); vars];
        let mut hi = vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); vars];
        for p in pts {
            for k in 0..vars {
                lo[k].0 = lo[k].0.min(p[k].re);
                lo[k].1 = lo[k].1.min(p[k].im);
                hi[k].0 = hi[k].0.max(p[k].re);
                hi[k].1 = hi[k].1.max(p[k].im);
            }
        }
        let center: Vec<Complex64> =
            (0..vars).map(|k| Complex64::new(0.5 * (lo[k].0 + hi[k].0), 0.5 * (lo[k].1 + hi[k].1))).collect();
        let scale = pts
            .iter()
            .map(|p| p.iter().zip(&center).fold(0.0f64, |m, (z, c)| m.max((z - c).norm())))
            .fold(0.0f64, f64::max)
            .max(1e-12);
        Basis { vars, center, scale, nodes: Vec::new() }
    }

    fn newton(pts: &[&Vec<Complex64>], max_degree: usize) -> Self {
        let z: Vec<Complex64> = pts.iter().map(|p| p[0]).collect();
        let centroid = z.iter().sum::<Complex64>() / z.len() as f64;
        // Leja ordering: each node maximizes the product of distances to the previous ones
        let mut logsum = vec![0.0f64; z.len()];
        let mut taken = vec![false; z.len()];
        let first = (0..z.len()).max_by(|&a, &b| (z[a] - centroid).norm().total_cmp(&(z[b] - centroid).norm())).unwrap();
        let mut nodes = vec![z[first]];
        taken[first] = true;
        let mut last_gain = 0.0;
        while nodes.len() < max_degree {
            let x = *nodes.last().unwrap();
            let mut best: Option<usize> = None;
            for i in 0..z.len() {
                if taken[i] {
                    continue;
                }
                logsum[i] += (z[i] - x).norm().max(1e-300).ln();
                if best.map_or(true, |b| logsum[i] > logsum[b]) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            if !(logsum[b] > f64::NEG_INFINITY) || (z[b] - x).norm() == 0.0 {
                break;
            }
            last_gain = logsum[b] / nodes.len() as f64;
            taken[b] = true;
            nodes.push(z[b]);
        }
        // capacity estimate keeps the Newton basis of order one on the set
        let scale = if nodes.len() > 1 { last_gain.exp() } else { 1.0 }.max(1e-12);
        let nodes = nodes.iter().map(|x| (x - centroid) / scale).collect();
        Basis { vars: 1, center: vec![centroid], scale, nodes }
    }

    fn max_degree(&self, requested: usize) -> usize {
        if self.vars == 1 {
            requested.min(self.nodes.len())
        } else {
            requested
        }
    }

    fn design(&self, pts: &[&Vec<Complex64>], degree: usize) -> DMatrix<Complex64> {
        if self.vars > 1 {
            return design_matrix(pts, &monomials(self.vars, degree), &self.center, self.scale, degree);
        }
        let mut a = DMatrix::from_element(pts.len(), degree + 1, Complex64::new(0.0, 0.0));
        for (i, p) in pts.iter().enumerate() {
            let w = (p[0] - self.center[0]) / self.scale;
            let mut acc = Complex64::new(1.0, 0.0);
            for k in 0..=degree {
                a[(i, k)] = acc;
                if k < degree {
                    acc *= w - self.nodes[k];
                }
            }
        }
        a
    }

    fn poly(&self, degree: usize, coeffs: Vec<Complex64>) -> PolyFunc {
        if self.vars == 1 {
            PolyFunc {
                vars: 1,
                degree,
                center: self.center.clone(),
                scale: self.scale,
                exponents: Vec::new(),
                nodes: self.nodes[..degree].to_vec(),
                coeffs,
            }
        } else {
            PolyFunc {
                vars: self.vars,
                degree,
                center: self.center.clone(),
                scale: self.scale,
                exponents: monomials(self.vars, degree),
                nodes: Vec::new(),
                coeffs,
            }
        }
    }
}

fn design_matrix(
    pts: &[&Vec<Complex64>],
    exps: &[Vec<u32>],
    center: &[Complex64],
    scale: f64,
    degree: usize,
) -> DMatrix<Complex64> {
    let vars = center.len();
    let mut a = DMatrix::from_element(pts.len(), exps.len(), Complex64::new(0.0, 0.0));
    let mut powers = vec![vec![Complex64::new(0.0, 0.0); degree + 1]; vars];
    for (i, p) in pts.iter().enumerate() {
        for k in 0..vars {
            let w = (p[k] - center[k]) / scale;
            let mut acc = Complex64::new(1.0, 0.0);
            for d in 0..=degree {
                powers[k][d] = acc;
                acc *= w;
            }
        }
        for (j, e) in exps.iter().enumerate() {
            a[(i, j)] = e
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (k, &d)| acc * powers[k][d as usize]);
        }
    }
    a
}

fn weighted_solve(a: &DMatrix<Complex64>, b: &[Complex64], w: &[f64]) -> Vec<Complex64> {
    let mut aw = a.clone();
    let mut bw = DVector::from_column_slice(b);
    for i in 0..a.nrows() {
        let s = w[i].sqrt();
        aw.row_mut(i).iter_mut().for_each(|x| *x *= s);
        bw[i] *= s;
    }
    // QR is enough for the well-conditioned bases used here; SVD is the fallback
    let cols = aw.ncols();
    if aw.nrows() >= cols {
        let qr = aw.clone().qr();
        let r = qr.r();
        let rmax = r.diagonal().iter().map(|x| x.norm()).fold(0.0, f64::max);
        let rmin = r.diagonal().iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        if rmin > rmax * 1e-12 {
            let qtb = qr.q().adjoint() * &bw;
            if let Some(x) = r.solve_upper_triangular(&qtb) {
                return x.iter().cloned().collect();
            }
        }
    }
    let svd = aw.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let x = svd
        .solve(&bw, smax * 1e-13)
        .expect("svd computed with both factors");
    x.iter().cloned().collect()
}

fn residuals(a: &DMatrix<Complex64>, x: &[Complex64], b: &[Complex64]) -> Vec<f64> {
    let xv = DVector::from_column_slice(x);
    let ax = a * xv;
    ax.iter().zip(b).map(|(v, t)| (v - t).norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc_samples(center: Complex64, radius: f64, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
        let mut r = rng(seed);
        (0..count)
            .map(|k| {
                let t: f64 = r.gen::<f64>() * std::f64::consts::TAU;
                let rad = if k % 2 == 0 { radius } else { radius * r.gen::<f64>().sqrt() };
                vec![center + Complex64::from_polar(rad, t)]
            })
            .collect()
    }

    #[test]
    fn trivial_constant_one() {
        let fit = fit_plateau_poly(&[vec![c(0.0, 0.0)]], &[], 0, 1e-3).unwrap();
        assert_eq!(fit.error, 0.0);
        assert_eq!(fit.poly.eval(&[c(5.0, 1.0)]), c(1.0, 0.0));
    }

    #[test]
    fn overlapping_sets_rejected() {
        let on = disc_samples(c(0.0, 0.0), 0.2, 50, 1);
        let mut off = disc_samples(c(0.1, 0.0), 0.2, 50, 2);
        off.push(on[3].clone());
        assert!(matches!(fit_plateau_poly(&on, &off, 10, 1e-3), Err(Error::OverlappingSets)));
    }

    #[test]
    fn two_discs_dense_oracle() {
        let on = disc_samples(c(0.0, 0.0), 0.2, 400, 3);
        let off = disc_samples(c(2.0, 0.0), 0.2, 400, 4);
        let fit = fit_plateau_poly(&on, &off, 30, 1e-3).unwrap();
        assert!(fit.error < 1e-3);
        // dense held-out oracle, 10^4 points per disc
        let dense_on = disc_samples(c(0.0, 0.0), 0.2, 10_000, 5);
        let dense_off = disc_samples(c(2.0, 0.0), 0.2, 10_000, 6);
        let e_on = dense_on.iter().map(|p| (fit.poly.eval(p) - 1.0).norm()).fold(0.0, f64::max);
        let e_off = dense_off.iter().map(|p| fit.poly.eval(p).norm()).fold(0.0, f64::max);
        assert!(e_on < 1e-3 && e_off < 1e-3, "{e_on} {e_off}");
    }

    #[test]
    fn infeasible_degree_reports_failure() {
        let on = disc_samples(c(0.0, 0.0), 0.5, 200, 7);
        let off = disc_samples(c(1.02, 0.0), 0.5, 200, 8);
        assert!(matches!(
            fit_plateau_poly(&on, &off, 3, 1e-6),
            Err(Error::PlateauFitFailed { .. })
        ));
    }
}
