//! Points of C^n and the handful of regions every other module measures against.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of C^n, stored as n complex coordinates (2n reals).
///
/// The last coordinate is the fibre coordinate `z_n`; the first n-1 form `z'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CPoint {
    pub coords: Vec<Complex64>,
}

impl CPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        CPoint { coords }
    }

    pub fn zero(n: usize) -> Self {
        CPoint { coords: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Builds a point from 2n reals `(re_1, im_1, ..., re_n, im_n)`.
    pub fn from_reals(reals: &[f64]) -> Self {
        assert!(reals.len() % 2 == 0, "odd number of real coordinates");
        CPoint {
            coords: reals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        }
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `z' = (z_1, ..., z_{n-1})`.
    pub fn head(&self) -> &[Complex64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn last(&self) -> Complex64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn dist(&self, other: &CPoint) -> f64 {
        dist(&self.coords, &other.coords)
    }

    /// Max modulus over the first n-1 coordinates (the polydisc gauge).
    pub fn head_sup(&self) -> f64 {
        head_sup(&self.coords)
    }

    pub fn add(&self, other: &CPoint) -> CPoint {
        CPoint::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &CPoint) -> CPoint {
        CPoint::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> CPoint {
        CPoint::new(self.coords.iter().map(|a| a * s).collect())
    }
}

/// Euclidean norm of the 2n real coordinates.
pub fn norm(z: &[Complex64]) -> f64 {
    // scaled accumulation avoids overflow for coordinates near the escape bound
    let big = z.iter().fold(0.0f64, |m, c| m.max(c.re.abs()).max(c.im.abs()));
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    let s: f64 = z
        .iter()
        .map(|c| {
            let (a, b) = (c.re / big, c.im / big);
            a * a + b * b
        })
        .sum();
    big * s.sqrt()
}

pub fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    s.sqrt()
}

pub fn head_sup(z: &[Complex64]) -> f64 {
    z[..z.len() - 1].iter().fold(0.0, |m, c| m.max(c.norm()))
}

/// Hermitian inner product `<a, b> = sum a_k conj(b_k)`.
pub fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Real inner product of the underlying R^{2n} vectors.
pub fn rdot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Sum of consecutive Euclidean distances along a sampled path.
pub fn polyline_length(pts: &[CPoint]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::DegeneratePath);
    }
    Ok(pts.windows(2).map(|w| w[0].dist(&w[1])).sum())
}

/// Closed Euclidean ball in C^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRegion {
    pub center: CPoint,
    pub radius: f64,
}

impl BallRegion {
    pub fn new(center: CPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(BallRegion { center, radius })
    }

    pub fn centered(n: usize, radius: f64) -> Result<Self> {
        BallRegion::new(CPoint::zero(n), radius)
    }
}

/// `r * closure(P) x C` with P the unit polydisc of C^{n-1}; `truncation` bounds |z_n| for sampling only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabRegion {
    pub polyradius: f64,
    pub truncation: f64,
}

impl SlabRegion {
    pub fn new(polyradius: f64, truncation: f64) -> Result<Self> {
        if !(polyradius > 0.0) || !(truncation > 0.0) {
            return Err(Error::InvalidInput("slab radii must be positive".into()));
        }
        Ok(SlabRegion { polyradius, truncation })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball(BallRegion),
    Slab(SlabRegion),
}

/// Membership in the region shrunk by `margin`.
pub fn region_contains(region: &Region, p: &CPoint, margin: f64) -> Result<bool> {
    if margin < 0.0 {
        return Err(Error::InvalidInput("margin must be nonnegative".into()));
    }
    match region {
        Region::Ball(b) => {
            if margin >= b.radius {
                return Err(Error::EmptyShrunkRegion);
            }
            Ok(p.dist(&b.center) <= b.radius - margin)
        }
        Region::Slab(s) => {
            if margin >= s.polyradius {
                return Err(Error::EmptyShrunkRegion);
            }
            Ok(p.head_sup() <= s.polyradius - margin)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(reals: &[f64]) -> CPoint {
        CPoint::from_reals(reals)
    }

    #[test]
    fn norm_basics() {
        assert_eq!(CPoint::zero(2).norm(), 0.0);
        assert_eq!(p(&[1.0, 0.0, 0.0, 0.0]).norm(), 1.0);
    }

    #[test]
    fn norm_matches_compensated_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let reals: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            // Kahan-summed squares as an independent route
            let (mut s, mut c) = (0.0f64, 0.0f64);
            for x in &reals {
                let y = x * x - c;
                let t = s + y;
                c = (t - s) - y;
                s = t;
            }
            let oracle = s.sqrt();
            let got = p(&reals).norm();
            assert!(((got - oracle) / oracle).abs() < 1e-14, "{got} vs {oracle}");
        }
    }

    #[test]
    fn polyline_cases() {
        let a = CPoint::zero(2);
        let b = p(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(polyline_length(&[a.clone(), b.clone()]).unwrap(), 1.0);
        assert!(matches!(polyline_length(&[a.clone()]), Err(Error::DegeneratePath)));

        let k = 11;
        let seg: Vec<CPoint> = (0..k).map(|i| b.scale(2.5 * i as f64 / (k - 1) as f64)).collect();
        assert!((polyline_length(&seg).unwrap() - 2.5).abs() < 1e-15);

        let k = 10_000;
        let circle: Vec<CPoint> = (0..=k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                p(&[t.cos(), 0.0, t.sin(), 0.0])
            })
            .collect();
        let len = polyline_length(&circle).unwrap();
        assert!((len - std::f64::consts::TAU).abs() < 1e-6, "{len}");
    }

    #[test]
    fn containment_cases() {
        let unit = Region::Ball(BallRegion::centered(2, 1.0).unwrap());
        assert!(region_contains(&unit, &CPoint::zero(2), 0.0).unwrap());
        assert!(!region_contains(&unit, &p(&[1.0, 0.0, 0.0, 0.0]), 0.01).unwrap());
        assert!(matches!(
            region_contains(&unit, &CPoint::zero(2), 1.0),
            Err(Error::EmptyShrunkRegion)
        ));
        let slab = Region::Slab(SlabRegion::new(2.0, 10.0).unwrap());
        assert!(region_contains(&slab, &p(&[1.5, 0.0, 1e6, 0.0]), 0.0).unwrap());
    }

    fn arb_point() -> impl Strategy<Value = CPoint> {
        proptest::collection::vec(-5.0f64..5.0, 4).prop_map(|v| CPoint::from_reals(&v))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert!(a.dist(&c) <= a.dist(&b) + b.dist(&c) + 1e-12);
        }

        #[test]
        fn refinement_never_shortens(a in arb_point(), b in arb_point(), off in arb_point(), t in 0.0f64..1.0) {
            let base = polyline_length(&[a.clone(), b.clone()]).unwrap();
            let mid = a.add(&b.sub(&a).scale(t));
            let on = polyline_length(&[a.clone(), mid, b.clone()]).unwrap();
            prop_assert!((on - base).abs() <= 1e-12 * (1.0 + base));
            let detour = polyline_length(&[a.clone(), off, b.clone()]).unwrap();
            prop_assert!(detour >= base - 1e-12);
        }

        #[test]
        fn shrinking_is_monotone(q in arb_point(), m1 in 0.0f64..0.9, m2 in 0.0f64..0.9) {
            let (hi, lo) = if m1 >= m2 { (m1, m2) } else { (m2, m1) };
            let ball = Region::Ball(BallRegion::centered(2, 3.0).unwrap());
            let slab = Region::Slab(SlabRegion::new(2.0, 10.0).unwrap());
            for r in [&ball, &slab] {
                if region_contains(r, &q, hi).unwrap() {
                    prop_assert!(region_contains(r, &q, lo).unwrap());
                }
            }
        }
    }
}
