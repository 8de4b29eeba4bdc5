//! Automorphisms of C^n as finite chains of elementary maps with closed-form inverses.
//!
//! Three kinds are supported:
//! - affine: `z -> A z + b` with `A` invertible,
//! - shear: `z -> z + f(pi(z)) e`,
//! - overshear: `z -> z + (exp(g(pi(z))) - 1) <z, e> e`,
//!
//! where `e` is a unit vector and `pi(z) = (<z, u_1>, ..., <z, u_{n-1}>)` is taken in an
//! orthonormal basis of the Hermitian complement of `e`. Because `pi` is invariant under
//! both shears and overshears, their inverses are the maps with `-f` and `-g`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hdot, CPoint};
use crate::poly::PolyFunc;

/// Coordinates beyond this modulus are treated as having left every controlled set.
pub const ESCAPE_BOUND: f64 = 1e100;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Orthonormal basis of the Hermitian complement of the unit vector `e`.
pub fn complement_basis(e: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = e.len();
    // skip the standard vector most aligned with e
    let skip = (0..n)
        .max_by(|&a, &b| e[a].norm().partial_cmp(&e[b].norm()).unwrap())
        .unwrap_or(0);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n - 1);
    for k in (0..n).filter(|&k| k != skip) {
        let mut v = vec![C0; n];
        v[k] = C1;
        for _ in 0..2 {
            for b in std::iter::once(e).chain(basis.iter().map(|b| b.as_slice())) {
                let c = hdot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = crate::geometry::norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    basis
}

fn normalized(e: &[Complex64]) -> Result<Vec<Complex64>> {
    let ne = crate::geometry::norm(e);
    if !(ne > 0.0) || !ne.is_finite() {
        return Err(Error::InvalidInput("shear direction must be a nonzero finite vector".into()));
    }
    Ok(e.iter().map(|x| x / ne).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    /// Row-major n x n.
    pub matrix: Vec<Complex64>,
    pub translation: Vec<Complex64>,
    pub inverse: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shear {
    pub direction: Vec<Complex64>,
    pub basis: Vec<Vec<Complex64>>,
    pub func: PolyFunc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementaryAut {
    Affine(Affine),
    Shear(Shear),
    Overshear(Shear),
}

impl ElementaryAut {
    pub fn affine(n: usize, matrix: Vec<Complex64>, translation: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != n * n || translation.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: translation.len() });
        }
        let m = DMatrix::from_row_slice(n, n, &matrix);
        let scale = matrix.iter().fold(0.0f64, |a, c| a.max(c.norm()));
        let det = m.clone().determinant();
        if !(scale > 0.0) || det.norm() <= 1e-12 * scale.powi(n as i32) {
            return Err(Error::NonInvertible);
        }
        let inv = m.try_inverse().ok_or(Error::NonInvertible)?;
        let mut inverse = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                inverse.push(inv[(i, j)]);
            }
        }
        Ok(ElementaryAut::Affine(Affine { matrix, translation, inverse }))
    }

    pub fn translation(t: &[Complex64]) -> Self {
        let n = t.len();
        let mut matrix = vec![C0; n * n];
        for i in 0..n {
            matrix[i * n + i] = C1;
        }
        ElementaryAut::Affine(Affine { inverse: matrix.clone(), matrix, translation: t.to_vec() })
    }

    /// Unitary `u` (row-major); the stored inverse is the exact conjugate transpose.
    pub fn unitary(n: usize, u: Vec<Complex64>) -> Self {
        let mut inverse = vec![C0; n * n];
        for i in 0..n {
            for j in 0..n {
                inverse[j * n + i] = u[i * n + j].conj();
            }
        }
        ElementaryAut::Affine(Affine { matrix: u, translation: vec![C0; n], inverse })
    }

    pub fn shear(direction: &[Complex64], func: PolyFunc) -> Result<Self> {
        let e = normalized(direction)?;
        if func.vars != e.len() - 1 {
            return Err(Error::DimensionMismatch { expected: e.len() - 1, got: func.vars });
        }
        let basis = complement_basis(&e);
        Ok(ElementaryAut::Shear(Shear { direction: e, basis, func }))
    }

    /// Shear along the coordinate axis `axis`, with `pi` reading the remaining coordinates in order.
    pub fn coordinate_shear(n: usize, axis: usize, func: PolyFunc) -> Result<Self> {
        if func.vars != n - 1 || axis >= n {
            return Err(Error::DimensionMismatch { expected: n - 1, got: func.vars });
        }
        let mut e = vec![C0; n];
        e[axis] = C1;
        let basis = (0..n)
            .filter(|&k| k != axis)
            .map(|k| {
                let mut v = vec![C0; n];
                v[k] = C1;
                v
            })
            .collect();
        Ok(ElementaryAut::Shear(Shear { direction: e, basis, func }))
    }

    pub fn overshear(direction: &[Complex64], func: PolyFunc) -> Result<Self> {
        match Self::shear(direction, func)? {
            ElementaryAut::Shear(s) => Ok(ElementaryAut::Overshear(s)),
            _ => unreachable!(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ElementaryAut::Affine(a) => a.translation.len(),
            ElementaryAut::Shear(s) | ElementaryAut::Overshear(s) => s.direction.len(),
        }
    }

    pub fn inverse(&self) -> ElementaryAut {
        match self {
            ElementaryAut::Affine(a) => {
                let n = a.translation.len();
                // (A z + b)^{-1} = A^{-1} z - A^{-1} b
                let t: Vec<Complex64> = (0..n)
                    .map(|i| -(0..n).map(|j| a.inverse[i * n + j] * a.translation[j]).sum::<Complex64>())
                    .collect();
                ElementaryAut::Affine(Affine { matrix: a.inverse.clone(), translation: t, inverse: a.matrix.clone() })
            }
            ElementaryAut::Shear(s) => ElementaryAut::Shear(Shear { func: s.func.negated(), ..s.clone() }),
            ElementaryAut::Overshear(s) => ElementaryAut::Overshear(Shear { func: s.func.negated(), ..s.clone() }),
        }
    }

    /// Applies the map in place. `scratch` must hold n-1 entries.
    pub fn apply_in_place(&self, z: &mut [Complex64], scratch: &mut [Complex64]) {
        match self {
            ElementaryAut::Affine(a) => affine_apply(&a.matrix, &a.translation, z, false),
            ElementaryAut::Shear(s) => {
                project(&s.basis, z, scratch);
                let f = s.func.eval(scratch);
                z.iter_mut().zip(&s.direction).for_each(|(x, e)| *x += f * e);
            }
            ElementaryAut::Overshear(s) => {
                project(&s.basis, z, scratch);
                let g = s.func.eval(scratch);
                let along = hdot(z, &s.direction);
                let k = (g.exp() - C1) * along;
                z.iter_mut().zip(&s.direction).for_each(|(x, e)| *x += k * e);
            }
        }
    }

    /// Applies the inverse in place without materializing it.
    pub fn apply_inverse_in_place(&self, z: &mut [Complex64], scratch: &mut [Complex64]) {
        match self {
            ElementaryAut::Affine(a) => affine_apply(&a.inverse, &a.translation, z, true),
            ElementaryAut::Shear(s) => {
                project(&s.basis, z, scratch);
                let f = s.func.eval(scratch);
                z.iter_mut().zip(&s.direction).for_each(|(x, e)| *x -= f * e);
            }
            ElementaryAut::Overshear(s) => {
                project(&s.basis, z, scratch);
                let g = s.func.eval(scratch);
                let along = hdot(z, &s.direction);
                let k = ((-g).exp() - C1) * along;
                z.iter_mut().zip(&s.direction).for_each(|(x, e)| *x += k * e);
            }
        }
    }
}

fn project(basis: &[Vec<Complex64>], z: &[Complex64], out: &mut [Complex64]) {
    for (o, u) in out.iter_mut().zip(basis) {
        *o = hdot(z, u);
    }
}

fn affine_apply(m: &[Complex64], t: &[Complex64], z: &mut [Complex64], inverse: bool) {
    let n = z.len();
    let src: Vec<Complex64> = if inverse {
        z.iter().zip(t).map(|(a, b)| a - b).collect()
    } else {
        z.to_vec()
    };
    for i in 0..n {
        let mut acc = if inverse { C0 } else { t[i] };
        for j in 0..n {
            acc += m[i * n + j] * src[j];
        }
        z[i] = acc;
    }
}

fn check_escape(z: &[Complex64]) -> Result<()> {
    if z.iter().all(|c| c.re.abs() <= ESCAPE_BOUND && c.im.abs() <= ESCAPE_BOUND) {
        Ok(())
    } else {
        Err(Error::EscapedToInfinity)
    }
}

/// Ordered composition: `maps[0]` is applied first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutChain {
    pub dim: usize,
    pub maps: Vec<ElementaryAut>,
}

impl AutChain {
    pub fn identity(dim: usize) -> Self {
        AutChain { dim, maps: Vec::new() }
    }

    pub fn from_maps(dim: usize, maps: Vec<ElementaryAut>) -> Result<Self> {
        if let Some(m) = maps.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
        }
        Ok(AutChain { dim, maps })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn push(&mut self, m: ElementaryAut) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
        }
        self.maps.push(m);
        Ok(())
    }

    pub fn eval_slice(&self, z: &mut [Complex64]) -> Result<()> {
        let mut scratch = vec![C0; self.dim.saturating_sub(1)];
        for m in &self.maps {
            m.apply_in_place(z, &mut scratch);
            check_escape(z)?;
        }
        Ok(())
    }

    pub fn eval_inverse_slice(&self, z: &mut [Complex64]) -> Result<()> {
        let mut scratch = vec![C0; self.dim.saturating_sub(1)];
        for m in self.maps.iter().rev() {
            m.apply_inverse_in_place(z, &mut scratch);
            check_escape(z)?;
        }
        Ok(())
    }

    pub fn eval(&self, p: &CPoint) -> Result<CPoint> {
        self.check_dim(p)?;
        let mut z = p.coords.clone();
        self.eval_slice(&mut z)?;
        Ok(CPoint::new(z))
    }

    pub fn eval_inverse(&self, p: &CPoint) -> Result<CPoint> {
        self.check_dim(p)?;
        let mut z = p.coords.clone();
        self.eval_inverse_slice(&mut z)?;
        Ok(CPoint::new(z))
    }

    fn check_dim(&self, p: &CPoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.dim() });
        }
        Ok(())
    }

    /// The explicit inverse chain.
    pub fn inverse(&self) -> AutChain {
        AutChain { dim: self.dim, maps: self.maps.iter().rev().map(|m| m.inverse()).collect() }
    }

    /// Complex Jacobian by central differences (diagnostics only).
    pub fn jacobian_fd(&self, p: &CPoint) -> Result<Vec<Vec<Complex64>>> {
        const H: f64 = 1e-5;
        let n = self.dim;
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.coords[k] += H;
            minus.coords[k] -= H;
            let fp = self.eval(&plus)?;
            let fm = self.eval(&minus)?;
            cols.push((0..n).map(|i| (fp.coords[i] - fm.coords[i]) / (2.0 * H)).collect::<Vec<_>>());
        }
        // transpose to rows
        Ok((0..n).map(|i| (0..n).map(|k| cols[k][i]).collect()).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: AutChain = serde_json::from_str(s)?;
        AutChain::from_maps(c.dim, c.maps)
    }
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &AutChain, b: &AutChain) -> Result<AutChain> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, got: b.dim });
    }
    let mut maps = b.maps.clone();
    maps.extend(a.maps.iter().cloned());
    Ok(AutChain { dim: a.dim, maps })
}
