//! Seeded sample generators shared by the certificates and the tests.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::automorphism::{AutChain, ElementaryAut};
use crate::geometry::CPoint;
use crate::poly::PolyFunc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller (keeps the dependency set small and the stream stable).
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform point on the unit sphere of R^{2n}.
pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
        let nv = crate::geometry::norm(&v);
        if nv > 1e-12 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

pub fn random_point_on_sphere<R: Rng>(rng: &mut R, n: usize, radius: f64) -> CPoint {
    CPoint::new(random_unit(rng, n).into_iter().map(|x| x * radius).collect())
}

/// Uniform point in the closed ball of radius `radius` about the origin of C^n.
pub fn random_point_in_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> CPoint {
    let u: f64 = rng.gen();
    let r = radius * u.powf(1.0 / (2 * n) as f64);
    random_point_on_sphere(rng, n, r)
}

/// Samples of a ball, a fraction `boundary_frac` on the boundary sphere.
pub fn ball_samples<R: Rng>(rng: &mut R, center: &CPoint, radius: f64, count: usize, boundary_frac: f64) -> Vec<CPoint> {
    let n = center.dim();
    let nb = (count as f64 * boundary_frac).round() as usize;
    (0..count)
        .map(|k| {
            let p = if k < nb {
                random_point_on_sphere(rng, n, radius)
            } else {
                random_point_in_ball(rng, n, radius)
            };
            center.add(&p)
        })
        .collect()
}

/// A random chain of shears, overshears and unitary/translation maps with small
/// coefficients, bounded on moderate balls; used by round-trip tests and benches.
pub fn random_chain<R: Rng>(rng: &mut R, n: usize, len: usize) -> AutChain {
    let mut maps = Vec::with_capacity(len);
    let amp = 0.1 / (len as f64).sqrt().max(1.0);
    for _ in 0..len {
        let kind = rng.gen_range(0..4);
        let m = match kind {
            0 => ElementaryAut::unitary(n, random_unitary(rng, n)),
            1 => {
                let t: Vec<Complex64> = random_unit(rng, n).into_iter().map(|x| x * amp).collect();
                ElementaryAut::translation(&t)
            }
            2 => {
                let f = random_poly(rng, n - 1, 3, amp);
                ElementaryAut::shear(&random_unit(rng, n), f).unwrap()
            }
            _ => {
                let g = random_poly(rng, n - 1, 2, amp);
                ElementaryAut::overshear(&random_unit(rng, n), g).unwrap()
            }
        };
        maps.push(m);
    }
    AutChain::from_maps(n, maps).unwrap()
}

pub fn random_poly<R: Rng>(rng: &mut R, vars: usize, degree: usize, amp: f64) -> PolyFunc {
    let terms: Vec<(Vec<u32>, Complex64)> = crate::poly::monomials(vars, degree)
        .into_iter()
        .map(|e| (e, Complex64::new(gaussian(rng), gaussian(rng)) * amp))
        .collect();
    PolyFunc::from_terms(vars, &terms)
}

/// Haar-ish random unitary via Gram-Schmidt of a complex Gaussian matrix (row-major).
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
        for _ in 0..2 {
            for r in &rows {
                let c = crate::geometry::hdot(&v, r);
                v.iter_mut().zip(r).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = crate::geometry::norm(&v);
        if nv > 1e-8 {
            rows.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    rows.concat()
}
