//! Complex polynomials in several variables over an affinely normalized variable
//! `w = (zeta - center) / scale`. Stored in monomial form, or for one variable
//! optionally in Newton form on a node sequence, which stays accurate at high degree
//! on sets far from a disc about the center.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// All exponent vectors of `vars` variables with total degree `<= degree`, graded order.
pub fn monomials(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut cur = vec![0u32; vars];
        push_degree(&mut out, &mut cur, 0, d as u32);
    }
    out
}

fn push_degree(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, idx: usize, left: u32) {
    if idx + 1 == cur.len() {
        cur[idx] = left;
        out.push(cur.clone());
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=left).rev() {
        cur[idx] = k;
        push_degree(out, cur, idx + 1, left - k);
    }
    cur[idx] = 0;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFunc {
    pub vars: usize,
    pub degree: usize,
    pub center: Vec<Complex64>,
    pub scale: f64,
    pub exponents: Vec<Vec<u32>>,
    pub coeffs: Vec<Complex64>,
    /// Normalized Newton nodes `x_0..x_{d-1}`; when non-empty the polynomial is
    /// `sum_k coeffs[k] prod_{j<k} (w - x_j)` and `exponents` is unused.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<Complex64>,
}

impl PolyFunc {
    pub fn zero(vars: usize) -> Self {
        PolyFunc {
            vars,
            degree: 0,
            center: vec![Complex64::new(0.0, 0.0); vars],
            scale: 1.0,
            exponents: vec![vec![0; vars]],
            coeffs: vec![Complex64::new(0.0, 0.0)],
            nodes: Vec::new(),
        }
    }

    pub fn constant(vars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(vars);
        p.coeffs[0] = c;
        p
    }

    /// Polynomial in the raw variables (center 0, scale 1) from `(exponent, coefficient)` terms.
    pub fn from_terms(vars: usize, terms: &[(Vec<u32>, Complex64)]) -> Self {
        let degree = terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0);
        PolyFunc {
            vars,
            degree,
            center: vec![Complex64::new(0.0, 0.0); vars],
            scale: 1.0,
            exponents: terms.iter().map(|(e, _)| e.clone()).collect(),
            coeffs: terms.iter().map(|(_, c)| *c).collect(),
            nodes: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c = -*c);
        p
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c *= s);
        p
    }

    pub fn eval(&self, zeta: &[Complex64]) -> Complex64 {
        debug_assert_eq!(zeta.len(), self.vars);
        let inv = 1.0 / self.scale;
        if !self.nodes.is_empty() {
            let w = (zeta[0] - self.center[0]) * inv;
            let d = self.coeffs.len() - 1;
            let mut acc = self.coeffs[d];
            for k in (0..d).rev() {
                acc = self.coeffs[k] + (w - self.nodes[k]) * acc;
            }
            return acc;
        }
        if self.vars == 1 && self.is_dense_univariate() {
            // Horner on the graded (= ascending) coefficient list
            let w = (zeta[0] - self.center[0]) * inv;
            return self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c);
        }
        let w: Vec<Complex64> = zeta.iter().zip(&self.center).map(|(z, c)| (z - c) * inv).collect();
        let mut powers: Vec<Vec<Complex64>> = Vec::with_capacity(self.vars);
        for &wk in &w {
            let mut pw = Vec::with_capacity(self.degree + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=self.degree {
                pw.push(acc);
                acc *= wk;
            }
            powers.push(pw);
        }
        self.exponents
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| {
                e.iter()
                    .enumerate()
                    .fold(*c, |acc, (k, &p)| acc * powers[k][p as usize])
            })
            .sum()
    }

    fn is_dense_univariate(&self) -> bool {
        self.exponents.len() == self.degree + 1
            && self.exponents.iter().enumerate().all(|(i, e)| e[0] as usize == i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(1, 5).len(), 6);
        assert_eq!(monomials(2, 3).len(), 10);
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(1, 3), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn horner_and_general_agree() {
        let terms: Vec<(Vec<u32>, Complex64)> = (0..6)
            .map(|k| (vec![k], Complex64::new(0.3 * k as f64 - 0.5, 0.1 * k as f64)))
            .collect();
        let p = PolyFunc::from_terms(1, &terms);
        let mut q = p.clone();
        // break the dense layout to force the general path
        q.exponents.reverse();
        q.coeffs.reverse();
        let z = [Complex64::new(0.7, -0.4)];
        assert!((p.eval(&z) - q.eval(&z)).norm() < 1e-15);
    }

    #[test]
    fn newton_form_matches_monomials() {
        // (w - 1)(w + 2) = w^2 + w - 2 with nodes 1, -2 and coefficients 0, 0, 1
        let p = PolyFunc {
            vars: 1,
            degree: 2,
            center: vec![Complex64::new(0.0, 0.0)],
            scale: 1.0,
            exponents: Vec::new(),
            coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            nodes: vec![Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0)],
        };
        let q = PolyFunc::from_terms(
            1,
            &[
                (vec![0], Complex64::new(-2.0, 0.0)),
                (vec![1], Complex64::new(1.0, 0.0)),
                (vec![2], Complex64::new(1.0, 0.0)),
            ],
        );
        let z = [Complex64::new(0.3, 0.8)];
        assert!((p.eval(&z) - q.eval(&z)).norm() < 1e-14);
        assert!((p.scaled(Complex64::new(0.0, 2.0)).eval(&z) - q.eval(&z) * Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn bivariate_eval() {
        // 2 + z1*z2^2
        let p = PolyFunc::from_terms(
            2,
            &[(vec![0, 0], Complex64::new(2.0, 0.0)), (vec![1, 2], Complex64::new(1.0, 0.0))],
        );
        let v = p.eval(&[Complex64::new(3.0, 0.0), Complex64::new(0.0, 1.0)]);
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }
}
