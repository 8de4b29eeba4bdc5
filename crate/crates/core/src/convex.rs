//! Compact convex pieces (balls and thickened plates) with support functions,
//! nearest-point projections and signed separation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{norm, rdot, CPoint};

/// A flat round disc of codimension one in R^{2n}, thickened to a slab.
///
/// The thickened plate is `{x : |<x - c, nu>| <= thickness, |(x - c)_perp| <= radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plate {
    pub center: CPoint,
    /// Unit normal in R^{2n}, stored as n complex numbers.
    pub normal: Vec<Complex64>,
    pub radius: f64,
    pub thickness: f64,
}

impl Plate {
    /// Splits `x - center` into its normal coordinate and in-plane remainder.
    fn split(&self, x: &[Complex64]) -> (f64, Vec<Complex64>) {
        let d: Vec<Complex64> = x.iter().zip(&self.center.coords).map(|(a, b)| a - b).collect();
        let h = rdot(&d, &self.normal);
        let v = d.iter().zip(&self.normal).map(|(a, nu)| a - nu * h).collect();
        (h, v)
    }

    /// Euclidean distance from `x` to the thickened plate (0 inside).
    pub fn distance(&self, x: &[Complex64]) -> f64 {
        let (h, v) = self.split(x);
        let dh = (h.abs() - self.thickness).max(0.0);
        let dv = (norm(&v) - self.radius).max(0.0);
        dh.hypot(dv)
    }

    pub fn contains(&self, x: &[Complex64]) -> bool {
        let (h, v) = self.split(x);
        h.abs() <= self.thickness && norm(&v) <= self.radius
    }

    /// Smallest and largest Euclidean norm over the thickened plate.
    pub fn norm_range(&self) -> (f64, f64) {
        let zero = vec![Complex64::new(0.0, 0.0); self.center.dim()];
        let (h, v) = self.split(&zero);
        let dh = (h.abs() - self.thickness).max(0.0);
        let dv = (norm(&v) - self.radius).max(0.0);
        let cn = rdot(&self.center.coords, &self.normal).abs();
        let cperp = norm(&v);
        let max = (cn + self.thickness).hypot(cperp + self.radius);
        (dh.hypot(dv), max)
    }

    /// The plate grown by `pad` in every direction (still convex, contains the pad-neighbourhood).
    pub fn grown(&self, pad: f64) -> Plate {
        Plate { radius: self.radius + pad, thickness: self.thickness + pad, ..self.clone() }
    }

    pub fn translated(&self, t: &[Complex64]) -> Plate {
        Plate { center: CPoint::new(self.center.coords.iter().zip(t).map(|(a, b)| a + b).collect()), ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Convex {
    Ball { center: CPoint, radius: f64 },
    Plate(Plate),
}

impl Convex {
    pub fn center(&self) -> &CPoint {
        match self {
            Convex::Ball { center, .. } => center,
            Convex::Plate(p) => &p.center,
        }
    }

    /// Circumradius about `center()`.
    pub fn extent(&self) -> f64 {
        match self {
            Convex::Ball { radius, .. } => *radius,
            Convex::Plate(p) => p.radius.hypot(p.thickness),
        }
    }

    /// `max_{x in K} <x, d>` for a real direction `d`.
    pub fn support(&self, d: &[Complex64]) -> f64 {
        match self {
            Convex::Ball { center, radius } => rdot(&center.coords, d) + radius * norm(d),
            Convex::Plate(p) => {
                let dn = rdot(d, &p.normal);
                let perp: Vec<Complex64> = d.iter().zip(&p.normal).map(|(a, nu)| a - nu * dn).collect();
                rdot(&p.center.coords, d) + p.thickness * dn.abs() + p.radius * norm(&perp)
            }
        }
    }

    pub fn project(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Convex::Ball { center, radius } => {
                let d: Vec<Complex64> = x.iter().zip(&center.coords).map(|(a, b)| a - b).collect();
                let nd = norm(&d);
                if nd <= *radius {
                    x.to_vec()
                } else {
                    center.coords.iter().zip(&d).map(|(c, v)| c + v * (radius / nd)).collect()
                }
            }
            Convex::Plate(p) => {
                let (h, v) = p.split(x);
                let hc = h.clamp(-p.thickness, p.thickness);
                let nv = norm(&v);
                let s = if nv > p.radius { p.radius / nv } else { 1.0 };
                p.center
                    .coords
                    .iter()
                    .zip(&p.normal)
                    .zip(&v)
                    .map(|((c, nu), vv)| c + nu * hc + vv * s)
                    .collect()
            }
        }
    }

    pub fn distance_to_point(&self, x: &[Complex64]) -> f64 {
        match self {
            Convex::Ball { center, radius } => (crate::geometry::dist(x, &center.coords) - radius).max(0.0),
            Convex::Plate(p) => p.distance(x),
        }
    }

    pub fn translated(&self, t: &[Complex64]) -> Convex {
        match self {
            Convex::Ball { center, radius } => Convex::Ball {
                center: CPoint::new(center.coords.iter().zip(t).map(|(a, b)| a + b).collect()),
                radius: *radius,
            },
            Convex::Plate(p) => Convex::Plate(p.translated(t)),
        }
    }

    /// Image under `z -> a + s (z - a)` followed by translation `t`, where `a` is the center.
    pub fn squeezed_translated(&self, s: f64, t: &[Complex64]) -> Convex {
        let shrunk = match self {
            Convex::Ball { center, radius } => Convex::Ball { center: center.clone(), radius: radius * s },
            Convex::Plate(p) => Convex::Plate(Plate { radius: p.radius * s, thickness: p.thickness * s, ..p.clone() }),
        };
        shrunk.translated(t)
    }

    pub fn contains(&self, x: &[Complex64]) -> bool {
        self.distance_to_point(x) == 0.0
    }
}

/// Signed separation of two convex pieces: the Euclidean distance when disjoint,
/// minus the penetration depth when they overlap.
pub fn separation(a: &Convex, b: &Convex) -> f64 {
    let d = alternating_distance(a, b);
    if d > 1e-12 {
        return d;
    }
    -penetration_depth(a, b)
}

/// Distance between disjoint convex sets by alternating projections.
pub fn alternating_distance(a: &Convex, b: &Convex) -> f64 {
    let mut y = b.project(&a.center().coords);
    let mut x = a.project(&y);
    let mut last = f64::INFINITY;
    for it in 0..20_000 {
        y = b.project(&x);
        x = a.project(&y);
        let d = crate::geometry::dist(&x, &y);
        if (last - d).abs() <= 1e-15 * (1.0 + d) && it > 10 {
            return d;
        }
        last = d;
    }
    last
}

/// `max_{|u|=1} (-h_a(-u) - h_b(u))` negated, i.e. the smallest translation that separates.
fn penetration_depth(a: &Convex, b: &Convex) -> f64 {
    let n = a.center().dim();
    let gap = |u: &[Complex64]| {
        let neg: Vec<Complex64> = u.iter().map(|x| -x).collect();
        -a.support(&neg) - b.support(u)
    };
    let mut starts: Vec<Vec<Complex64>> = Vec::new();
    let dc: Vec<Complex64> = a.center().coords.iter().zip(&b.center().coords).map(|(x, y)| x - y).collect();
    if norm(&dc) > 1e-14 {
        starts.push(dc);
    }
    for k in 0..n {
        for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            for sgn in [1.0, -1.0] {
                let mut u = vec![Complex64::new(0.0, 0.0); n];
                u[k] = unit * sgn;
                starts.push(u);
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for s in starts {
        let ns = norm(&s);
        let mut u: Vec<Complex64> = s.iter().map(|x| x / ns).collect();
        let mut val = gap(&u);
        let mut step = 0.5;
        // derivative-free ascent on the sphere
        while step > 1e-9 {
            let mut improved = false;
            for k in 0..n {
                for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                    for sgn in [1.0, -1.0] {
                        let mut cand = u.clone();
                        cand[k] += dir * (sgn * step);
                        let nc = norm(&cand);
                        cand.iter_mut().for_each(|x| *x /= nc);
                        let v = gap(&cand);
                        if v > val {
                            val = v;
                            u = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    (-best).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_point_in_ball, rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plate_at(center: [f64; 4], normal: [f64; 4], radius: f64, thickness: f64) -> Plate {
        let nn: f64 = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nrm: Vec<f64> = normal.iter().map(|x| x / nn).collect();
        Plate {
            center: CPoint::from_reals(&center),
            normal: CPoint::from_reals(&nrm).coords,
            radius,
            thickness,
        }
    }

    fn sample_plate(p: &Plate, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
        let mut r = rng(seed);
        let n = p.center.dim();
        let mut out = Vec::new();
        while out.len() < count {
            let x = random_point_in_ball(&mut r, n, p.radius.hypot(p.thickness) * 1.01);
            let y: Vec<Complex64> = p.center.coords.iter().zip(&x.coords).map(|(a, b)| a + b).collect();
            if p.contains(&y) {
                out.push(y);
            }
        }
        out
    }

    #[test]
    fn projection_lands_inside() {
        let p = plate_at([0.7, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], 0.1, 0.01);
        let k = Convex::Plate(p.clone());
        let mut r = rng(3);
        for _ in 0..200 {
            let x = random_point_in_ball(&mut r, 2, 2.0);
            let q = k.project(&x.coords);
            assert!(p.distance(&q) < 1e-12);
            assert!((crate::geometry::dist(&q, &x.coords) - p.distance(&x.coords)).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_range_matches_sampling() {
        let p = plate_at([0.5, 0.2, -0.1, 0.3], [0.3, 1.0, 0.0, -0.4], 0.12, 0.02);
        let (lo, hi) = p.norm_range();
        let pts = sample_plate(&p, 4000, 9);
        let smin = pts.iter().map(|x| norm(x)).fold(f64::INFINITY, f64::min);
        let smax = pts.iter().map(|x| norm(x)).fold(0.0, f64::max);
        assert!(lo <= smin + 1e-12 && smin - lo < 0.02);
        assert!(hi >= smax - 1e-12 && hi - smax < 0.02);
    }

    #[test]
    fn separation_of_disjoint_plates_matches_sampled_oracle() {
        let a = plate_at([0.7, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], 0.1, 0.01);
        let b = plate_at([0.0, 0.7, 0.1, 0.0], [0.0, 1.0, 0.2, 0.0], 0.15, 0.01);
        let d = separation(&Convex::Plate(a.clone()), &Convex::Plate(b.clone()));
        let sa = sample_plate(&a, 1500, 1);
        let sb = sample_plate(&b, 1500, 2);
        let oracle = sa
            .iter()
            .flat_map(|x| sb.iter().map(move |y| crate::geometry::dist(x, y)))
            .fold(f64::INFINITY, f64::min);
        assert!(d > 0.0);
        assert!(d <= oracle + 1e-12, "{d} {oracle}");
        assert!(oracle - d < 0.03, "{d} {oracle}");
    }

    #[test]
    fn identical_plates_have_negative_separation() {
        let a = plate_at([0.7, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], 0.1, 0.01);
        let s = separation(&Convex::Plate(a.clone()), &Convex::Plate(a));
        assert!(s < 0.0);
        assert!((s + 0.02).abs() < 1e-6, "{s}");
    }

    #[test]
    fn ball_ball_separation() {
        let a = Convex::Ball { center: CPoint::zero(2), radius: 0.3 };
        let b = Convex::Ball { center: CPoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)]), radius: 0.2 };
        assert!((separation(&a, &b) - 0.5).abs() < 1e-9);
        let b2 = Convex::Ball { center: CPoint::new(vec![c(0.4, 0.0), c(0.0, 0.0)]), radius: 0.2 };
        assert!((separation(&a, &b2) + 0.1).abs() < 1e-6);
    }
}
