//! Spectral curves ν² = −det ξ_λ, branch points and genus.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{q_from_f64, Q};
use crate::laurent::{c, LaurentPoly, C64};
use crate::potentials::Potential;

/// Clustering tolerances for floating root multiplicities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootTolerances {
    /// Plain clustering: |r₁−r₂| ≤ cluster·max(1,|r₁|).
    pub cluster: f64,
    /// A root s of a′ is a multiple root of a when |a(s)| ≤ multiple·Σ|a_k||s|^k.
    pub multiple: f64,
    /// Largest distance (relative) between a multiple-root centre and the roots assigned to it.
    pub assign: f64,
}

impl Default for RootTolerances {
    fn default() -> Self {
        RootTolerances { cluster: 1e-8, multiple: 1e-12, assign: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub root: [f64; 2],
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurve {
    /// a = λ(α² + βγ), exponents 0..2d.
    pub a: LaurentPoly,
    pub degree: usize,
    /// Nonzero roots of a with multiplicities.
    pub branch_points: Vec<(C64, usize)>,
    /// Order of vanishing of a at λ = 0.
    pub zero_multiplicity: usize,
    pub branch_at_zero: bool,
    pub branch_at_infinity: bool,
    pub genus: i64,
}

impl SpectralCurve {
    pub fn odd_points(&self) -> usize {
        self.branch_points.iter().filter(|(_, m)| m % 2 == 1).count()
            + self.branch_at_zero as usize
            + self.branch_at_infinity as usize
    }
}

/// Coefficients c_0..c_D (ascending) of an ordinary polynomial.
fn poly_eval(co: &[C64], z: C64) -> C64 {
    co.iter().rev().fold(C64::new(0.0, 0.0), |acc, x| acc * z + x)
}

fn poly_scale(co: &[C64], z: C64) -> f64 {
    let r = z.norm();
    co.iter().rev().fold(0.0, |acc, x| acc * r + x.norm())
}

fn poly_derivative(co: &[C64]) -> Vec<C64> {
    co.iter().enumerate().skip(1).map(|(k, x)| x * k as f64).collect()
}

/// All roots of Σ co_k z^k via companion-matrix eigenvalues, Newton-polished.
pub fn poly_roots(co: &[C64]) -> Vec<C64> {
    let mut co = co.to_vec();
    while co.len() > 1 && co.last().map(|x| x.norm() == 0.0).unwrap_or(false) {
        co.pop();
    }
    let n = co.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = co[n];
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -co[i] / lead;
    }
    let eig = nalgebra::linalg::Schur::new(m).eigenvalues().map(|v| v.iter().copied().collect::<Vec<_>>());
    let mut roots = eig.unwrap_or_default();
    let dco = poly_derivative(&co);
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let f = poly_eval(&co, *z);
            let df = poly_eval(&dco, *z);
            if df.norm() == 0.0 {
                break;
            }
            let cand = *z - f / df;
            if poly_eval(&co, cand).norm() < f.norm() {
                *z = cand;
            } else {
                break;
            }
        }
    }
    roots
}

/// Roots with multiplicities. Multiple roots are located as roots of a′ at which a vanishes,
/// and the remaining roots are clustered with the plain tolerance.
pub fn roots_with_multiplicity(co: &[C64], tol: &RootTolerances) -> Vec<(C64, usize)> {
    let mut remaining = poly_roots(co);
    let dco = poly_derivative(co);
    let mut centres: Vec<(C64, usize)> = Vec::new();
    for s in poly_roots(&dco) {
        if poly_eval(co, s).norm() > tol.multiple * poly_scale(co, s) {
            continue;
        }
        let merge = tol.assign * 1f64.max(s.norm());
        if let Some(e) = centres.iter_mut().find(|(t, _)| (t - s).norm() <= merge) {
            e.1 += 1;
        } else {
            centres.push((s, 1));
        }
    }
    let mut out = Vec::new();
    for (s, cnt) in centres {
        let m = cnt + 1;
        if remaining.len() < m {
            continue;
        }
        let mut idx: Vec<usize> = (0..remaining.len()).collect();
        idx.sort_by(|&i, &j| (remaining[i] - s).norm().partial_cmp(&(remaining[j] - s).norm()).unwrap());
        let far = (remaining[idx[m - 1]] - s).norm();
        // an m-fold root splits by about eps^(1/m) under rounding
        let radius = tol.assign.max(10.0 * f64::EPSILON.powf(1.0 / m as f64));
        if far > radius * 1f64.max(s.norm()) {
            continue;
        }
        let mut take: Vec<usize> = idx[..m].to_vec();
        take.sort_unstable_by(|a, b| b.cmp(a));
        for i in take {
            remaining.remove(i);
        }
        out.push((s, m));
    }
    // single-linkage clustering of what is left
    let mut used = vec![false; remaining.len()];
    for i in 0..remaining.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![remaining[i]];
        let mut grow = true;
        while grow {
            grow = false;
            for j in 0..remaining.len() {
                if used[j] {
                    continue;
                }
                let near = members
                    .iter()
                    .any(|r| (remaining[j] - r).norm() <= tol.cluster * 1f64.max(r.norm()));
                if near {
                    used[j] = true;
                    members.push(remaining[j]);
                    grow = true;
                }
            }
        }
        let mean = members.iter().sum::<C64>() / members.len() as f64;
        out.push((mean, members.len()));
    }
    out.sort_by(|x, y| (x.0.re, x.0.im).partial_cmp(&(y.0.re, y.0.im)).unwrap());
    out
}

/// a = λ(α_λ² + β_λγ_λ) = −λ det ξ_λ with exponents 0..2d.
pub fn curve_polynomial(xi: &Potential) -> LaurentPoly {
    let l = xi.to_laurent();
    let a = l.entry(0, 0);
    let b = l.entry(0, 1);
    let g = l.entry(1, 0);
    (&(&a * &a) + &(&b * &g)).shift(1)
}

pub fn spectral_curve(xi: &Potential) -> Result<SpectralCurve> {
    spectral_curve_with(xi, &RootTolerances::default())
}

pub fn spectral_curve_with(xi: &Potential, tol: &RootTolerances) -> Result<SpectralCurve> {
    let a = curve_polynomial(xi);
    curve_from_polynomial(a, xi.degree(), tol)
}

/// Builds the curve from a = −λ det ξ with exponents in 0..2d.
pub fn curve_from_polynomial(a: LaurentPoly, degree: usize, tol: &RootTolerances) -> Result<SpectralCurve> {
    if a.is_zero() || a.coeffs().is_empty() {
        return Err(Error::DegenerateDeterminant);
    }
    if a.lo() < 0 {
        return Err(Error::Domain("curve polynomial has negative exponents".into()));
    }
    let m0 = a.lo() as usize;
    let top = a.hi() as usize;
    let co: Vec<C64> = a.coeffs().to_vec();
    let branch_points = roots_with_multiplicity(&co, tol);
    // −det ξ = a/λ has order m0 − 1 at 0 and −(top − 1) at ∞
    let branch_at_zero = (m0 as i64 - 1).rem_euclid(2) == 1;
    let branch_at_infinity = (top as i64 - 1).rem_euclid(2) == 1;
    let mut curve = SpectralCurve {
        a,
        degree,
        branch_points,
        zero_multiplicity: m0,
        branch_at_zero,
        branch_at_infinity,
        genus: 0,
    };
    curve.genus = genus(&curve)?;
    Ok(curve)
}

/// Genus from the parity of branch orders: (#odd points)/2 − 1.
pub fn genus(curve: &SpectralCurve) -> Result<i64> {
    let odd = curve.odd_points();
    if odd % 2 == 1 {
        return Err(Error::InconsistentBranching);
    }
    Ok(odd as i64 / 2 - 1)
}

/// max_k |a_k − conj(a_{2d−k})|.
pub fn nu_symmetry_residual(a: &LaurentPoly, degree: usize) -> f64 {
    let n = 2 * degree as i32;
    (0..=n).map(|k| (a.coeff(k) - a.coeff(n - k).conj()).norm()).fold(0.0, f64::max)
}

/// max over |λ|=1 grid points of |Im(λ^{1−d}(−det ξ))|.
pub fn circle_reality_residual(xi: &Potential, n: usize) -> f64 {
    let l = xi.to_laurent();
    let d = xi.degree() as i32;
    (0..n)
        .map(|j| {
            let lam = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
            let v = -crate::laurent::det2(&l.eval(lam)) * lam.powi(1 - d);
            v.im.abs()
        })
        .fold(0.0, f64::max)
}

// ---------- exact mode ----------

/// Gaussian rationals.
pub type QC = Complex<Q>;

pub fn qc_from_c64(z: C64) -> QC {
    QC::new(q_from_f64(z.re), q_from_f64(z.im))
}

fn qc_zero() -> QC {
    QC::new(Q::zero(), Q::zero())
}

fn qc_is_zero(z: &QC) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

fn trim(mut p: Vec<QC>) -> Vec<QC> {
    while p.last().map(qc_is_zero).unwrap_or(false) {
        p.pop();
    }
    p
}

fn qpoly_mul(a: &[QC], b: &[QC]) -> Vec<QC> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![qc_zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    trim(out)
}

fn qpoly_add(a: &[QC], b: &[QC]) -> Vec<QC> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).cloned().unwrap_or_else(qc_zero) + b.get(i).cloned().unwrap_or_else(qc_zero))
        .collect();
    trim(out)
}

fn qpoly_sub(a: &[QC], b: &[QC]) -> Vec<QC> {
    let nb: Vec<QC> = b.iter().map(|x| -x.clone()).collect();
    qpoly_add(a, &nb)
}

fn qpoly_derivative(a: &[QC]) -> Vec<QC> {
    trim(a.iter().enumerate().skip(1).map(|(k, x)| x.clone() * QC::new(Q::from_integer((k as i64).into()), Q::zero())).collect())
}

/// Quotient and remainder.
fn qpoly_divrem(a: &[QC], b: &[QC]) -> (Vec<QC>, Vec<QC>) {
    let b = trim(b.to_vec());
    let mut r = trim(a.to_vec());
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lb = b.last().expect("nonzero divisor").clone();
    let mut q = vec![qc_zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap().clone() / lb.clone();
        for (i, y) in b.iter().enumerate() {
            r[shift + i] = r[shift + i].clone() - f.clone() * y.clone();
        }
        q[shift] = f;
        r.pop();
        r = trim(r);
    }
    (trim(q), r)
}

fn qpoly_monic(a: &[QC]) -> Vec<QC> {
    let a = trim(a.to_vec());
    match a.last() {
        None => a,
        Some(l) => {
            let l = l.clone();
            a.into_iter().map(|x| x / l.clone()).collect()
        }
    }
}

fn qpoly_gcd(a: &[QC], b: &[QC]) -> Vec<QC> {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while !y.is_empty() {
        let (_, r) = qpoly_divrem(&x, &y);
        x = y;
        y = qpoly_monic(&r);
    }
    qpoly_monic(&x)
}

/// Yun square-free decomposition: factor i has all its roots with multiplicity exactly i+1.
pub fn square_free_decomposition(f: &[QC]) -> Vec<Vec<QC>> {
    let f = trim(f.to_vec());
    if f.len() <= 1 {
        return Vec::new();
    }
    let df = qpoly_derivative(&f);
    let a0 = qpoly_gcd(&f, &df);
    let mut b = qpoly_divrem(&f, &a0).0;
    let cc = qpoly_divrem(&df, &a0).0;
    let mut d = qpoly_sub(&cc, &qpoly_derivative(&b));
    let mut out = Vec::new();
    while b.len() > 1 {
        let a = qpoly_gcd(&b, &d);
        let nb = qpoly_divrem(&b, &a).0;
        let nc = qpoly_divrem(&d, &a).0;
        d = qpoly_sub(&nc, &qpoly_derivative(&nb));
        b = nb;
        out.push(a);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactGenus {
    pub genus: i64,
    /// Number of distinct nonzero roots of odd multiplicity.
    pub odd_roots: usize,
    pub zero_multiplicity: usize,
    /// (multiplicity, number of distinct roots) pairs.
    pub multiplicities: Vec<(usize, usize)>,
}

/// Exact genus from Gaussian-rational coefficients a_0..a_D.
pub fn exact_genus(a: &[QC]) -> Result<ExactGenus> {
    let a = trim(a.to_vec());
    if a.is_empty() {
        return Err(Error::DegenerateDeterminant);
    }
    let m0 = a.iter().position(|z| !qc_is_zero(z)).unwrap();
    let core: Vec<QC> = a[m0..].to_vec();
    let top = a.len() - 1;
    let parts = square_free_decomposition(&core);
    let mut odd_roots = 0;
    let mut multiplicities = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let deg = p.len().saturating_sub(1);
        if deg == 0 {
            continue;
        }
        multiplicities.push((i + 1, deg));
        if (i + 1) % 2 == 1 {
            odd_roots += deg;
        }
    }
    let at_zero = (m0 as i64 - 1).rem_euclid(2) == 1;
    let at_inf = (top as i64 - 1).rem_euclid(2) == 1;
    let odd = odd_roots + at_zero as usize + at_inf as usize;
    if odd % 2 == 1 {
        return Err(Error::InconsistentBranching);
    }
    Ok(ExactGenus { genus: odd as i64 / 2 - 1, odd_roots, zero_multiplicity: m0, multiplicities })
}

/// Potential with Gaussian-rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPotential {
    pub d: usize,
    pub alpha: Vec<QC>,
    /// β₋₁..β_{d−1}.
    pub beta: Vec<QC>,
}

impl ExactPotential {
    /// Exact image of a floating potential (every double is a rational).
    pub fn from_potential(xi: &Potential) -> Self {
        ExactPotential {
            d: xi.degree(),
            alpha: xi.alpha().iter().map(|z| qc_from_c64(*z)).collect(),
            beta: xi.beta().iter().map(|z| qc_from_c64(*z)).collect(),
        }
    }

    fn gamma(&self) -> Vec<QC> {
        (0..=self.d).map(|k| -self.beta[self.d - k].clone().conj()).collect()
    }

    /// Coefficients of a = λ(α² + βγ), exponents 0..2d.
    pub fn curve_polynomial(&self) -> Vec<QC> {
        // λβ has exponents 0..d
        let lb = self.beta.clone();
        let g = self.gamma();
        let aa = qpoly_mul(&self.alpha, &self.alpha);
        let mut la = vec![qc_zero()];
        la.extend(aa);
        qpoly_add(&trim(la), &qpoly_mul(&lb, &g))
    }

    /// ξ·r for a real palindromic polynomial r (r_k = r_{m−k}), which keeps ξ real; the degree grows by m.
    pub fn times_real_poly(&self, r: &[Q]) -> Result<Self> {
        let m = r.len().saturating_sub(1);
        if r.is_empty() || r[0].is_zero() || (0..=m).any(|k| r[k] != r[m - k]) {
            return Err(Error::Domain("multiplier must be a palindromic real polynomial with r_0 ≠ 0".into()));
        }
        let rq: Vec<QC> = r.iter().map(|x| QC::new(x.clone(), Q::zero())).collect();
        let mut alpha = qpoly_mul(&self.alpha, &rq);
        let mut beta = qpoly_mul(&self.beta, &rq);
        alpha.resize(self.d + m, qc_zero());
        beta.resize(self.d + m + 1, qc_zero());
        Ok(ExactPotential { d: self.d + m, alpha, beta })
    }

    /// Exact point of the K-symmetric family with the given integer weights on the RREF basis.
    pub fn from_unknowns(d: usize, x: &[Q]) -> Self {
        let z = |i: usize| QC::new(x[2 * i].clone(), x[2 * i + 1].clone());
        ExactPotential { d, alpha: (0..d).map(z).collect(), beta: (d..2 * d + 1).map(z).collect() }
    }

    pub fn to_potential(&self) -> Result<Potential> {
        let f = |z: &QC| c(crate::exact::q_to_f64(&z.re), crate::exact::q_to_f64(&z.im));
        Potential::unchecked(self.d, self.alpha.iter().map(f).collect(), self.beta.iter().map(f).collect())
    }
}
