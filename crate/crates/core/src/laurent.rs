//! Complex Laurent polynomials and 2×2 Laurent matrices.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Relative threshold used when trimming floating coefficients.
pub const TRIM_REL: f64 = 1e-14;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

/// Frobenius norm of a 2×2 complex matrix.
pub fn norm(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn adjugate2(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

pub fn det2(m: &Mat2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d == C64::new(0.0, 0.0) || !d.is_finite() {
        return None;
    }
    Some(adjugate2(m) / d)
}

/// Laurent polynomial Σ coeffs[i] λ^{lo+i}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentPoly {
    lo: i32,
    coeffs: Vec<C64>,
}

fn trim_range(mags: impl Iterator<Item = f64> + Clone, len: usize) -> Option<(usize, usize)> {
    let max = mags.clone().fold(0.0f64, f64::max);
    if max == 0.0 {
        return None;
    }
    let cut = TRIM_REL * max;
    let v: Vec<f64> = mags.collect();
    let first = v.iter().position(|&m| m >= cut)?;
    let last = v.iter().rposition(|&m| m >= cut)?;
    debug_assert!(last < len);
    Some((first, last))
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly { lo: 0, coeffs: Vec::new() }
    }

    /// Builds and normalizes.
    pub fn new(lo: i32, coeffs: Vec<C64>) -> Self {
        let mut p = Self::raw(lo, coeffs);
        p.normalize();
        p
    }

    /// Builds without trimming; exponents are kept exactly as given.
    pub fn raw(lo: i32, coeffs: Vec<C64>) -> Self {
        LaurentPoly { lo, coeffs }
    }

    pub fn from_real(lo: i32, coeffs: &[f64]) -> Self {
        Self::new(lo, coeffs.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn constant(z: C64) -> Self {
        Self::new(0, vec![z])
    }

    pub fn monomial(z: C64, k: i32) -> Self {
        Self::new(k, vec![z])
    }

    /// Trims leading and trailing coefficients below `TRIM_REL · max|c|`.
    pub fn normalize(&mut self) {
        match trim_range(self.coeffs.iter().map(|z| z.norm()), self.coeffs.len()) {
            None => {
                self.lo = 0;
                self.coeffs.clear();
            }
            Some((a, b)) => {
                self.coeffs = self.coeffs[a..=b].to_vec();
                self.lo += a as i32;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    /// Highest exponent; equals `lo - 1` for the empty polynomial.
    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> C64 {
        let i = k - self.lo;
        if i < 0 || i as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn eval(&self, lam: C64) -> C64 {
        if self.coeffs.is_empty() {
            return C64::new(0.0, 0.0);
        }
        // Horner in λ, then shift by λ^lo
        let mut acc = C64::new(0.0, 0.0);
        for z in self.coeffs.iter().rev() {
            acc = acc * lam + z;
        }
        acc * lam.powi(self.lo)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, z)| z * (self.lo + i as i32) as f64)
            .collect();
        Self::new(self.lo - 1, coeffs)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|z| z * s).collect())
    }

    /// Multiplies by λ^k.
    pub fn shift(&self, k: i32) -> Self {
        Self::raw(self.lo + k, self.coeffs.clone())
    }

    /// λ ↦ conj(p(λ̄)): conjugates coefficients.
    pub fn star(&self) -> Self {
        Self::raw(self.lo, self.coeffs.iter().map(|z| z.conj()).collect())
    }

    /// λ ↦ p(1/λ).
    pub fn invert(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self::raw(-self.hi(), coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max coefficient distance over the union of both spans.
    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        if self.coeffs.is_empty() {
            return other.scale(C64::new(sign, 0.0));
        }
        if other.coeffs.is_empty() {
            return self.clone();
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + other.coeff(k) * sign).collect();
        Self::new(lo, coeffs)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, o: &LaurentPoly) -> LaurentPoly {
        self.combine(o, 1.0)
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, o: &LaurentPoly) -> LaurentPoly {
        self.combine(o, -1.0)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: &LaurentPoly) -> LaurentPoly {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return LaurentPoly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        LaurentPoly::new(self.lo + o.lo, out)
    }
}

/// 2×2 Laurent matrix stored as one coefficient block per exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrix {
    lo: i32,
    blocks: Vec<Mat2>,
}

impl LaurentMatrix {
    pub fn zero() -> Self {
        LaurentMatrix { lo: 0, blocks: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::constant(Mat2::identity())
    }

    pub fn constant(m: Mat2) -> Self {
        Self::new(0, vec![m])
    }

    pub fn monomial(m: Mat2, k: i32) -> Self {
        Self::new(k, vec![m])
    }

    pub fn new(lo: i32, blocks: Vec<Mat2>) -> Self {
        let mut x = Self::raw(lo, blocks);
        x.normalize();
        x
    }

    pub fn raw(lo: i32, blocks: Vec<Mat2>) -> Self {
        LaurentMatrix { lo, blocks }
    }

    /// Builds from four scalar entries `[[a, b], [c, d]]`.
    pub fn from_entries(e: [[&LaurentPoly; 2]; 2]) -> Self {
        let polys = [e[0][0], e[0][1], e[1][0], e[1][1]];
        let nonempty: Vec<&&LaurentPoly> = polys.iter().filter(|p| !p.coeffs.is_empty()).collect();
        if nonempty.is_empty() {
            return Self::zero();
        }
        let lo = nonempty.iter().map(|p| p.lo()).min().unwrap();
        let hi = nonempty.iter().map(|p| p.hi()).max().unwrap();
        let blocks = (lo..=hi)
            .map(|k| Mat2::new(e[0][0].coeff(k), e[0][1].coeff(k), e[1][0].coeff(k), e[1][1].coeff(k)))
            .collect();
        Self::new(lo, blocks)
    }

    pub fn entry(&self, i: usize, j: usize) -> LaurentPoly {
        LaurentPoly::new(self.lo, self.blocks.iter().map(|b| b[(i, j)]).collect())
    }

    pub fn normalize(&mut self) {
        match trim_range(self.blocks.iter().map(norm), self.blocks.len()) {
            None => {
                self.lo = 0;
                self.blocks.clear();
            }
            Some((a, b)) => {
                self.blocks = self.blocks[a..=b].to_vec();
                self.lo += a as i32;
            }
        }
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.blocks.len() as i32 - 1
    }

    pub fn blocks(&self) -> &[Mat2] {
        &self.blocks
    }

    pub fn coeff(&self, k: i32) -> Mat2 {
        let i = k - self.lo;
        if i < 0 || i as usize >= self.blocks.len() {
            Mat2::zeros()
        } else {
            self.blocks[i as usize]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    pub fn eval(&self, lam: C64) -> Mat2 {
        if self.blocks.is_empty() {
            return Mat2::zeros();
        }
        let mut acc = Mat2::zeros();
        for b in self.blocks.iter().rev() {
            acc = acc * lam + b;
        }
        acc * lam.powi(self.lo)
    }

    /// ∂/∂λ evaluated at λ.
    pub fn eval_derivative(&self, lam: C64) -> Mat2 {
        let mut acc = Mat2::zeros();
        for (i, b) in self.blocks.iter().enumerate() {
            let k = self.lo + i as i32;
            if k != 0 {
                acc += b * (lam.powi(k - 1) * k as f64);
            }
        }
        acc
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.lo, self.blocks.iter().map(|b| b * s).collect())
    }

    pub fn scale_by_poly(&self, p: &LaurentPoly) -> Self {
        if self.blocks.is_empty() || p.coeffs().is_empty() {
            return Self::zero();
        }
        let mut out = vec![Mat2::zeros(); self.blocks.len() + p.coeffs().len() - 1];
        for (i, b) in self.blocks.iter().enumerate() {
            for (j, z) in p.coeffs().iter().enumerate() {
                out[i + j] += b * *z;
            }
        }
        Self::new(self.lo + p.lo(), out)
    }

    /// Multiplies by λ^k.
    pub fn shift(&self, k: i32) -> Self {
        Self::raw(self.lo + k, self.blocks.clone())
    }

    /// λ ↦ conj(X(λ̄))ᵗ; conjugate-transposes every coefficient.
    pub fn star(&self) -> Self {
        Self::raw(self.lo, self.blocks.iter().map(|b| b.adjoint()).collect())
    }

    /// λ ↦ X(1/λ).
    pub fn invert(&self) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.reverse();
        Self::raw(-self.hi(), blocks)
    }

    pub fn transpose(&self) -> Self {
        Self::raw(self.lo, self.blocks.iter().map(|b| b.transpose()).collect())
    }

    pub fn det(&self) -> LaurentPoly {
        let a = self.entry(0, 0);
        let b = self.entry(0, 1);
        let cc = self.entry(1, 0);
        let d = self.entry(1, 1);
        &(&a * &d) - &(&b * &cc)
    }

    pub fn adjugate(&self) -> Self {
        Self::raw(self.lo, self.blocks.iter().map(adjugate2).collect())
    }

    pub fn trace(&self) -> LaurentPoly {
        LaurentPoly::new(self.lo, self.blocks.iter().map(|b| b[(0, 0)] + b[(1, 1)]).collect())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Max over coefficients of the Frobenius norm of the difference.
    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).blocks.iter().map(norm).fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.blocks.iter().map(norm).fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        if self.blocks.is_empty() {
            return other.scale(C64::new(sign, 0.0));
        }
        if other.blocks.is_empty() {
            return self.clone();
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let blocks = (lo..=hi).map(|k| self.coeff(k) + other.coeff(k) * C64::new(sign, 0.0)).collect();
        Self::new(lo, blocks)
    }
}

impl Add for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn add(self, o: &LaurentMatrix) -> LaurentMatrix {
        self.combine(o, 1.0)
    }
}

impl Sub for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn sub(self, o: &LaurentMatrix) -> LaurentMatrix {
        self.combine(o, -1.0)
    }
}

impl Neg for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn neg(self) -> LaurentMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn mul(self, o: &LaurentMatrix) -> LaurentMatrix {
        laurent_product(self, o)
    }
}

/// Product of two Laurent matrices.
pub fn laurent_product(a: &LaurentMatrix, b: &LaurentMatrix) -> LaurentMatrix {
    if a.blocks.is_empty() || b.blocks.is_empty() {
        return LaurentMatrix::zero();
    }
    let mut out = vec![Mat2::zeros(); a.blocks.len() + b.blocks.len() - 1];
    for (i, x) in a.blocks.iter().enumerate() {
        for (j, y) in b.blocks.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    LaurentMatrix::new(a.lo + b.lo, out)
}

pub fn involution_star(x: &LaurentMatrix) -> LaurentMatrix {
    x.star()
}

pub fn involution_invert(x: &LaurentMatrix) -> LaurentMatrix {
    x.invert()
}

pub fn determinant(x: &LaurentMatrix) -> LaurentPoly {
    x.det()
}

#[derive(Serialize, Deserialize)]
struct LaurentMatrixJson {
    lo: i32,
    coeffs: Vec<[[[f64; 2]; 2]; 2]>,
}

impl Serialize for LaurentMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coeffs = self
            .blocks
            .iter()
            .map(|b| {
                let e = |i, j| {
                    let z: C64 = b[(i, j)];
                    [z.re, z.im]
                };
                [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
            })
            .collect();
        LaurentMatrixJson { lo: self.lo, coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = LaurentMatrixJson::deserialize(d)?;
        let blocks = j
            .coeffs
            .iter()
            .map(|b| {
                let e = |i: usize, k: usize| c(b[i][k][0], b[i][k][1]);
                Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
            })
            .collect();
        Ok(LaurentMatrix::raw(j.lo, blocks))
    }
}
