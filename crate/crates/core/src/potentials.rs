//! Finite-gap potentials and the K-symmetry constraint system.
//!
//! Unknown layout for degree d (4d+2 real unknowns):
//! `[Re α₀, Im α₀, …, Re α_{d−1}, Im α_{d−1}, Re β₋₁, Im β₋₁, …, Re β_{d−1}, Im β_{d−1}]`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circle::UnitCircleGrid;
use crate::error::{Error, Result};
use crate::exact::{self, q_from_f64, q_to_f64, Q};
use crate::kmatrix::{k_product_decompose, KMatrix};
use crate::laurent::{c, norm, LaurentMatrix, LaurentPoly, Mat2, C64};

/// Absolute tolerance for the reality and residue checks of `potential_assemble`.
pub const ASSEMBLE_TOL: f64 = 1e-12;
/// Singular value cutoff relative to σ_max in floating rank mode.
pub const SVD_CUTOFF: f64 = 1e-9;
/// Largest allowed ratio σ_dropped/σ_kept at the cutoff.
pub const SVD_GAP: f64 = 1e-6;
pub const MAX_REJECTIONS: usize = 100;
pub const MIN_IM_BETA: f64 = 1e-3;

/// Degree-d potential ξ = (α, β; γ, −α) with γ_k = −conj(β_{d−k−1}).
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    d: usize,
    alpha: Vec<C64>,
    beta: Vec<C64>,
}

impl Potential {
    /// Builds without the reality and residue checks (negative controls, intersections).
    pub fn unchecked(d: usize, alpha: Vec<C64>, beta: Vec<C64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidPotential("degree must be at least 1".into()));
        }
        if alpha.len() != d || beta.len() != d + 1 {
            return Err(Error::InvalidPotential(format!(
                "expected {} alpha and {} beta coefficients, got {} and {}",
                d,
                d + 1,
                alpha.len(),
                beta.len()
            )));
        }
        Ok(Potential { d, alpha, beta })
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    /// β₋₁..β_{d−1}; index i holds β_{i−1}.
    pub fn beta(&self) -> &[C64] {
        &self.beta
    }

    pub fn alpha_k(&self, k: i64) -> C64 {
        if k < 0 || k >= self.d as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.alpha[k as usize]
        }
    }

    pub fn beta_k(&self, k: i64) -> C64 {
        if k < -1 || k > self.d as i64 - 1 {
            C64::new(0.0, 0.0)
        } else {
            self.beta[(k + 1) as usize]
        }
    }

    pub fn gamma_k(&self, k: i64) -> C64 {
        if k < 0 || k > self.d as i64 {
            C64::new(0.0, 0.0)
        } else {
            -self.beta_k(self.d as i64 - k - 1).conj()
        }
    }

    /// ξ = Σ_{k=−1}^{d} ξ̂_k λ^k.
    pub fn to_laurent(&self) -> LaurentMatrix {
        let blocks = (-1..=self.d as i64)
            .map(|k| {
                let a = self.alpha_k(k);
                Mat2::new(a, self.beta_k(k), self.gamma_k(k), -a)
            })
            .collect();
        LaurentMatrix::raw(-1, blocks)
    }

    pub fn eval(&self, lam: C64) -> Mat2 {
        self.to_laurent().eval(lam)
    }

    pub fn to_unknowns(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(4 * self.d + 2);
        for z in self.alpha.iter().chain(&self.beta) {
            x.push(z.re);
            x.push(z.im);
        }
        x
    }

    pub fn from_unknowns(d: usize, x: &[f64]) -> Result<Self> {
        if x.len() != 4 * d + 2 {
            return Err(Error::InvalidPotential(format!("expected {} unknowns", 4 * d + 2)));
        }
        let z: Vec<C64> = x.chunks(2).map(|p| c(p[0], p[1])).collect();
        Self::unchecked(d, z[..d].to_vec(), z[d..].to_vec())
    }

    pub fn scale(&self, t: f64) -> Self {
        Potential {
            d: self.d,
            alpha: self.alpha.iter().map(|z| z * t).collect(),
            beta: self.beta.iter().map(|z| z * t).collect(),
        }
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_imaginary(&self, tol: f64) -> bool {
        self.alpha.iter().chain(&self.beta).all(|z| z.re.abs() <= tol)
    }

    pub fn is_off_diagonal(&self, tol: f64) -> bool {
        self.alpha.iter().all(|z| z.norm() <= tol)
    }

    /// Rescales so that Im β₋₁ · Im β_{d−1} = 1/16, the normalization under which the
    /// metric of the frame pipeline satisfies Δω + ½ sinh 2ω = 0 and ω_y = Ae^ω + Be^{−ω}
    /// along y = 0.
    pub fn normalized(&self) -> Result<Self> {
        let p = self.beta_k(-1).im * self.beta_k(self.d as i64 - 1).im;
        if !(p > 0.0) {
            return Err(Error::InvalidPotential(
                "normalization needs Im β₋₁ · Im β_{d−1} > 0".into(),
            ));
        }
        Ok(self.scale(1.0 / (4.0 * p.sqrt())))
    }

    pub fn normalization_product(&self) -> f64 {
        self.beta_k(-1).im * self.beta_k(self.d as i64 - 1).im
    }
}

/// Validating constructor: reality α_k = −conj(α_{d−k−1}) and residue Re β₋₁ = 0 < Im β₋₁.
pub fn potential_assemble(d: usize, alpha: Vec<C64>, beta: Vec<C64>) -> Result<Potential> {
    let p = Potential::unchecked(d, alpha, beta)?;
    let tol = ASSEMBLE_TOL * (1.0 + p.max_abs());
    for k in 0..d {
        let partner = p.alpha[d - k - 1];
        if (p.alpha[k] + partner.conj()).norm() > tol {
            return Err(Error::Reality(k));
        }
    }
    let b = p.beta_k(-1);
    if b.re.abs() > tol || b.im <= 0.0 {
        return Err(Error::Residue);
    }
    Ok(p)
}

/// Random potential satisfying reality and the residue sign (not K-symmetric in general),
/// scaled so that the largest coefficient has modulus `scale`.
pub fn random_potential(d: usize, scale: f64, seed: u64) -> Result<Potential> {
    if d == 0 || !(scale > 0.0) {
        return Err(Error::InvalidPotential("degree ≥ 1 and positive scale required".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    let mut alpha = vec![c(0.0, 0.0); d];
    for k in 0..d.div_ceil(2) {
        let z = c(g(), g());
        if k == d - k - 1 {
            alpha[k] = c(0.0, z.im);
        } else {
            alpha[k] = z;
            alpha[d - k - 1] = -z.conj();
        }
    }
    let mut beta: Vec<C64> = (0..=d).map(|_| c(g(), g())).collect();
    beta[0] = c(0.0, g().abs().max(0.1));
    let p = Potential { d, alpha, beta };
    let m = p.max_abs();
    potential_assemble(d, p.alpha.iter().map(|z| z * (scale / m)).collect(), p.beta.iter().map(|z| z * (scale / m)).collect())
}

/// The vacuum (i/4)(0, λ⁻¹+1; 1+λ, 0).
pub fn vacuum() -> Potential {
    let q = c(0.0, 0.25);
    Potential { d: 1, alpha: vec![c(0.0, 0.0)], beta: vec![q, q] }
}

// ---------- constraint assembly ----------

trait Field:
    Clone + Zero + One + Neg<Output = Self> + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
}
impl<T> Field for T where
    T: Clone + Zero + One + Neg<Output = T> + Add<Output = T> + Sub<Output = T> + Mul<Output = T>
{
}

fn int<T: Field>(n: i64) -> T {
    let mut acc = T::zero();
    for _ in 0..n.unsigned_abs() {
        acc = acc + T::one();
    }
    if n < 0 {
        -acc
    } else {
        acc
    }
}

/// ℝ-linear functional with complex values: Σ (re_i + i·im_i) x_i.
#[derive(Clone)]
struct Form<T> {
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Field> Form<T> {
    fn zero(n: usize) -> Self {
        Form { re: vec![T::zero(); n], im: vec![T::zero(); n] }
    }

    /// z = x_{i} + i x_{i+1}.
    fn complex_at(n: usize, i: usize) -> Self {
        let mut f = Self::zero(n);
        f.re[i] = T::one();
        f.im[i + 1] = T::one();
        f
    }

    fn conj(&self) -> Self {
        Form { re: self.re.clone(), im: self.im.iter().map(|x| -x.clone()).collect() }
    }

    fn add(&self, o: &Self) -> Self {
        Form {
            re: self.re.iter().zip(&o.re).map(|(a, b)| a.clone() + b.clone()).collect(),
            im: self.im.iter().zip(&o.im).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-T::one()))
    }

    fn scale(&self, s: &T) -> Self {
        Form {
            re: self.re.iter().map(|a| a.clone() * s.clone()).collect(),
            im: self.im.iter().map(|a| a.clone() * s.clone()).collect(),
        }
    }
}

struct Vars {
    d: i64,
    n: usize,
}

impl Vars {
    fn alpha<T: Field>(&self, k: i64) -> Form<T> {
        if k < 0 || k >= self.d {
            Form::zero(self.n)
        } else {
            Form::complex_at(self.n, 2 * k as usize)
        }
    }

    fn beta<T: Field>(&self, k: i64) -> Form<T> {
        if k < -1 || k > self.d - 1 {
            Form::zero(self.n)
        } else {
            Form::complex_at(self.n, (2 * self.d + 2 * (k + 1)) as usize)
        }
    }

    fn gamma<T: Field>(&self, k: i64) -> Form<T> {
        if k < 0 || k > self.d {
            Form::zero(self.n)
        } else {
            self.beta::<T>(self.d - k - 1).conj().scale(&-T::one())
        }
    }
}

/// Which of the four entry equations ([11], [12], [21], [22]) to include.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EquationMask(pub [bool; 4]);

impl EquationMask {
    pub const ALL: EquationMask = EquationMask([true; 4]);
}

fn assemble<T: Field>(d: usize, a: T, b: T, mask: EquationMask) -> (Vec<Vec<T>>, Vec<String>) {
    let n = 4 * d + 2;
    let v = Vars { d: d as i64, n };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let four = int::<T>(4);
    let (a4, b4) = (four.clone() * a, four * b);
    for k in 0..d as i64 {
        let s = v.alpha::<T>(k).add(&v.alpha::<T>(d as i64 - k - 1));
        let t = v.alpha::<T>(k).sub(&v.alpha::<T>(d as i64 - k - 1));
        rows.push(s.re);
        labels.push(format!("reality Re(α{k}+α{})", d as i64 - k - 1));
        rows.push(t.im);
        labels.push(format!("reality Im(α{k}−α{})", d as i64 - k - 1));
    }
    rows.push(v.beta::<T>(-1).re);
    labels.push("residue Re β₋₁".into());
    for k in -1..=(d as i64 + 1) {
        let al = |j| v.alpha::<T>(j);
        let be = |j| v.beta::<T>(j);
        let ga = |j| v.gamma::<T>(j);
        let mut eqs: Vec<Form<T>> = Vec::new();
        if mask.0[0] {
            let e = ga(k + 1).conj().add(&ga(k + 1)).scale(&-T::one())
                .add(&al(k).conj().add(&al(k)).scale(&a4))
                .add(&ga(k - 1).conj().add(&ga(k - 1)))
                .sub(&al(k - 1).conj().add(&al(k - 1)).scale(&b4));
            eqs.push(e);
        } else {
            eqs.push(Form::zero(0));
        }
        if mask.0[1] {
            let e = al(k + 1).sub(&al(k + 1).conj())
                .sub(&ga(k + 1).conj().scale(&b4))
                .add(&ga(k).conj().add(&be(k)).scale(&a4))
                .add(&al(k - 1).conj().sub(&al(k - 1)))
                .sub(&be(k - 1).scale(&b4));
            eqs.push(e);
        } else {
            eqs.push(Form::zero(0));
        }
        if mask.0[2] {
            let e = al(k + 1).conj().sub(&al(k + 1))
                .sub(&ga(k + 1).scale(&b4))
                .add(&be(k).conj().add(&ga(k)).scale(&a4))
                .add(&al(k - 1).sub(&al(k - 1).conj()))
                .sub(&be(k - 1).conj().scale(&b4));
            eqs.push(e);
        } else {
            eqs.push(Form::zero(0));
        }
        if mask.0[3] {
            let e = al(k + 1).conj().add(&al(k + 1)).scale(&b4)
                .sub(&be(k + 1).conj().add(&be(k + 1)))
                .sub(&al(k).conj().add(&al(k)).scale(&a4))
                .add(&be(k - 1).add(&be(k - 1).conj()));
            eqs.push(e);
        } else {
            eqs.push(Form::zero(0));
        }
        for (i, e) in eqs.into_iter().enumerate() {
            if e.re.is_empty() {
                continue;
            }
            rows.push(e.re);
            labels.push(format!("eq{} Re k={k}", i + 1));
            rows.push(e.im);
            labels.push(format!("eq{} Im k={k}", i + 1));
        }
    }
    (rows, labels)
}

pub fn unknown_layout(d: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(4 * d + 2);
    for k in 0..d {
        names.push(format!("Re α{k}"));
        names.push(format!("Im α{k}"));
    }
    for k in -1..d as i64 {
        names.push(format!("Re β{k}"));
        names.push(format!("Im β{k}"));
    }
    names
}

pub fn re_beta_index(d: usize, k: i64) -> usize {
    2 * d + 2 * (k + 1) as usize
}

pub fn im_beta_index(d: usize, k: i64) -> usize {
    re_beta_index(d, k) + 1
}

/// Real linear system whose nullspace is the space of K-symmetric potentials.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub d: usize,
    pub k: KMatrix,
    pub layout: Vec<String>,
    pub row_labels: Vec<String>,
    pub rows: DMatrix<f64>,
    pub exact_rows: Vec<Vec<Q>>,
}

impl ConstraintSystem {
    pub fn n_unknowns(&self) -> usize {
        4 * self.d + 2
    }

    /// Stacks the rows of two systems of the same degree.
    pub fn stack(&self, other: &ConstraintSystem) -> ConstraintSystem {
        assert_eq!(self.d, other.d);
        let n = self.n_unknowns();
        let m = self.rows.nrows() + other.rows.nrows();
        let mut rows = DMatrix::zeros(m, n);
        rows.rows_mut(0, self.rows.nrows()).copy_from(&self.rows);
        rows.rows_mut(self.rows.nrows(), other.rows.nrows()).copy_from(&other.rows);
        let mut exact_rows = self.exact_rows.clone();
        exact_rows.extend(other.exact_rows.iter().cloned());
        let mut row_labels = self.row_labels.clone();
        row_labels.extend(other.row_labels.iter().map(|l| format!("K1 {l}")));
        ConstraintSystem { d: self.d, k: self.k, layout: self.layout.clone(), row_labels, rows, exact_rows }
    }
}

pub fn ksym_constraints(d: usize, k: &KMatrix) -> Result<ConstraintSystem> {
    ksym_constraints_masked(d, k, EquationMask::ALL)
}

pub fn ksym_constraints_masked(d: usize, k: &KMatrix, mask: EquationMask) -> Result<ConstraintSystem> {
    if d == 0 {
        return Err(Error::InvalidPotential("degree must be at least 1".into()));
    }
    if !k.a.is_finite() || !k.b.is_finite() {
        return Err(Error::Domain("A and B must be finite".into()));
    }
    let (frows, labels) = assemble::<f64>(d, k.a, k.b, mask);
    let (qrows, _) = assemble::<Q>(d, q_from_f64(k.a), q_from_f64(k.b), mask);
    let n = 4 * d + 2;
    let rows = DMatrix::from_fn(frows.len(), n, |i, j| frows[i][j]);
    Ok(ConstraintSystem { d, k: *k, layout: unknown_layout(d), row_labels: labels, rows, exact_rows: qrows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Exact,
    Float,
}

#[derive(Clone, Debug)]
pub struct Nullspace {
    pub dim: usize,
    /// Orthonormal columns spanning the nullspace.
    pub basis: DMatrix<f64>,
    /// RREF-parametrized exact basis (exact mode only).
    pub exact: Option<Vec<Vec<Q>>>,
    pub singular_values: Vec<f64>,
    pub mode: RankMode,
}

fn orthonormalize(cols: &DMatrix<f64>) -> DMatrix<f64> {
    if cols.ncols() == 0 {
        return cols.clone();
    }
    cols.clone().qr().q()
}

fn sorted_svd(rows: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = rows.ncols();
    let m = rows.nrows().max(n);
    let mut padded = DMatrix::zeros(m, n);
    padded.rows_mut(0, rows.nrows()).copy_from(rows);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(n, n, |r, col| vt[(idx[col], r)]);
    (sv, v)
}

pub fn ksym_nullspace(sys: &ConstraintSystem) -> Result<Nullspace> {
    ksym_nullspace_with(sys, RankMode::Exact)
}

pub fn ksym_nullspace_with(sys: &ConstraintSystem, mode: RankMode) -> Result<Nullspace> {
    let n = sys.n_unknowns();
    let (sv, v) = sorted_svd(&sys.rows);
    match mode {
        RankMode::Exact => {
            let basis_q = exact::nullspace(&sys.exact_rows, n);
            let dim = basis_q.len();
            let raw = DMatrix::from_fn(n, dim, |i, j| q_to_f64(&basis_q[j][i]));
            Ok(Nullspace { dim, basis: orthonormalize(&raw), exact: Some(basis_q), singular_values: sv, mode })
        }
        RankMode::Float => {
            let smax = sv.first().copied().unwrap_or(0.0);
            let cut = SVD_CUTOFF * smax;
            let rank = sv.iter().filter(|&&s| s > cut).count();
            if rank > 0 && rank < n {
                let ratio = sv[rank] / sv[rank - 1];
                if ratio > SVD_GAP {
                    return Err(Error::RankIllConditioned);
                }
            }
            let dim = n - rank;
            let basis = v.columns(rank, dim).into_owned();
            Ok(Nullspace { dim, basis, exact: None, singular_values: sv, mode })
        }
    }
}

/// Dimension predicted for K-symmetric potentials of degree d.
pub fn theorem_dimension(d: usize) -> usize {
    if d % 2 == 0 {
        (3 * d - 2) / 2
    } else {
        (3 * d + 1) / 2
    }
}

/// Predicted (real-part, imaginary-part) freedom counts for β.
pub fn theorem_freedom(d: usize) -> (usize, usize) {
    if d % 2 == 0 {
        ((d - 2) / 2, d)
    } else {
        ((d - 1) / 2, d + 1)
    }
}

/// Ranks of the nullspace projected onto the Re-β and Im-β coordinates.
pub fn freedom_split(sys: &ConstraintSystem) -> Result<(usize, usize)> {
    let ns = ksym_nullspace(sys)?;
    let basis = ns.exact.expect("exact mode");
    let d = sys.d;
    let re: Vec<usize> = (-1..d as i64).map(|k| re_beta_index(d, k)).collect();
    let im: Vec<usize> = (-1..d as i64).map(|k| im_beta_index(d, k)).collect();
    Ok((exact::projected_rank(&basis, &re), exact::projected_rank(&basis, &im)))
}

// ---------- sampling and residuals ----------

pub fn ksym_sample(d: usize, k: &KMatrix, seed: u64) -> Result<Potential> {
    let sys = ksym_constraints(d, k)?;
    let ns = ksym_nullspace(&sys)?;
    sample_from_basis(d, &ns.basis, seed)
}

/// Uniform draw from the unit ball of nullspace coordinates with the residue sign fixed.
pub fn sample_from_basis(d: usize, basis: &DMatrix<f64>, seed: u64) -> Result<Potential> {
    let m = basis.ncols();
    let idx = im_beta_index(d, -1);
    if m == 0 {
        return Err(Error::NoAdmissibleDirection);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let g = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let gn = g.norm();
        if gn == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let coords = g * (u.powf(1.0 / m as f64) / gn);
        let mut x = basis * coords;
        if x[idx] < 0.0 {
            x = -x;
        }
        if x[idx].abs() < MIN_IM_BETA {
            continue;
        }
        let p = Potential::from_unknowns(d, x.as_slice())?;
        return potential_assemble(d, p.alpha, p.beta);
    }
    Err(Error::NoAdmissibleDirection)
}

/// Sample from the off-diagonal part (α = 0) of the K-symmetric family.
pub fn offdiag_sample(d: usize, k: &KMatrix, seed: u64) -> Result<Potential> {
    let sys = ksym_constraints(d, k)?;
    let n = sys.n_unknowns();
    let mut rows = sys.exact_rows.clone();
    for i in 0..2 * d {
        let mut r = vec![Q::zero(); n];
        r[i] = Q::one();
        rows.push(r);
    }
    let basis = exact::nullspace(&rows, n);
    let raw = DMatrix::from_fn(n, basis.len(), |i, j| q_to_f64(&basis[j][i]));
    sample_from_basis(d, &orthonormalize(&raw), seed)
}

/// Laurent matrix Kξ + star(ξ)K.
pub fn ksym_defect(xi: &LaurentMatrix, k: &KMatrix) -> LaurentMatrix {
    let kl = k.to_laurent();
    &(&kl * xi) + &(&xi.star() * &kl)
}

/// Sample points for residual checks: a 64-point circle grid plus 16 fixed points off the circle.
pub fn residual_points() -> Vec<C64> {
    let mut pts = UnitCircleGrid::new(64).expect("valid grid").points();
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    for _ in 0..16 {
        let r: f64 = rng.random_range(0.5..1.5);
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        pts.push(C64::from_polar(r, t));
    }
    pts
}

pub fn ksym_residual(xi: &Potential, k: &KMatrix) -> f64 {
    ksym_residual_matrix(&xi.to_laurent(), k)
}

pub fn ksym_residual_matrix(xi: &LaurentMatrix, k: &KMatrix) -> f64 {
    let r = ksym_defect(xi, k);
    residual_points().iter().map(|&l| norm(&r.eval(l))).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub ksym: f64,
    pub re_top: f64,
    /// |i Im α₀ + 2Aβ₋₁ + 2Bβ_{d−1}|, valid for every K-symmetric potential.
    pub alpha0_general: f64,
    /// |α₀ + 2Aβ₋₁ + 2Bβ_{d−1}|, reported for imaginary potentials only.
    pub alpha0: Option<f64>,
    /// |Σ(−1)^{k+1}β_k|, reported for even d with nonzero diagonal.
    pub alt_sum: Option<f64>,
    pub alpha_recursion: f64,
    pub beta_recursion1: f64,
    /// Deviation of ξ(ϱ)v, ξ(r)v from span(v) and of ξ(ϱ⁻¹)v⊥, ξ(r⁻¹)v⊥ from span(v⊥).
    pub kernel_eigen: Option<f64>,
    /// Eigenvalues of ξ on the kernels at ϱ, r, ϱ⁻¹, r⁻¹.
    pub kernel_eigenvalues: Option<[[f64; 2]; 4]>,
    pub imaginary: bool,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.re_top,
            self.alpha0_general,
            self.alpha0.unwrap_or(0.0),
            self.alt_sum.unwrap_or(0.0),
            self.alpha_recursion,
            self.beta_recursion1,
            self.kernel_eigen.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub const KSYM_PRE_TOL: f64 = 1e-9;

pub fn structural_identities(xi: &Potential, k: &KMatrix) -> Result<IdentityReport> {
    let ksym = ksym_residual(xi, k);
    if !(ksym <= KSYM_PRE_TOL) {
        return Err(Error::NotKSymmetric);
    }
    let d = xi.d as i64;
    let (a, b) = (k.a, k.b);
    let re_top = xi.beta_k(d - 1).re.abs();
    let i = c(0.0, 1.0);
    let alpha0_general = (i * xi.alpha_k(0).im + xi.beta_k(-1) * (2.0 * a) + xi.beta_k(d - 1) * (2.0 * b)).norm();
    let scale_tol = 1e-12 * (1.0 + xi.max_abs());
    let imaginary = xi.is_imaginary(scale_tol);
    let alpha0 = imaginary.then(|| (xi.alpha_k(0) + xi.beta_k(-1) * (2.0 * a) + xi.beta_k(d - 1) * (2.0 * b)).norm());
    let alt_sum = (d % 2 == 0 && !xi.is_off_diagonal(scale_tol)).then(|| {
        (-1..d)
            .map(|j| xi.beta_k(j) * if (j + 1) % 2 == 0 { 1.0 } else { -1.0 })
            .sum::<C64>()
            .norm()
    });
    let mut alpha_recursion = 0.0f64;
    let mut beta_recursion1 = 0.0f64;
    for kk in -1..=d + 1 {
        let r = 4.0 * b * (xi.alpha_k(kk + 1) - xi.alpha_k(kk - 1)).re
            - (xi.beta_k(d - kk) - xi.beta_k(d - kk - 2)).re
            + (xi.beta_k(kk - 1) - xi.beta_k(kk + 1)).re;
        alpha_recursion = alpha_recursion.max(r.abs());
        let s = i * (xi.alpha_k(kk + 1) - xi.alpha_k(kk - 1)).im
            + (xi.beta_k(kk) - xi.beta_k(d - kk - 1)) * (2.0 * a)
            + (xi.beta_k(d - kk - 2) - xi.beta_k(kk - 1)) * (2.0 * b);
        beta_recursion1 = beta_recursion1.max(s.norm());
    }
    let (kernel_eigen, kernel_eigenvalues) = match k.kernels() {
        Err(_) => (None, None),
        Ok((v, w)) => {
            let q = k.roots();
            let mut dev = 0.0f64;
            let mut eig = [[0.0; 2]; 4];
            for (n, (lam, u)) in [(q.varrho, v), (q.r, v), (q.varrho_inv, w), (q.r_inv, w)].into_iter().enumerate() {
                let uc = nalgebra::Vector2::new(c(u[0], 0.0), c(u[1], 0.0));
                let img = xi.eval(lam) * uc;
                // component orthogonal to u (u is a real unit vector)
                let along = img[0] * u[0] + img[1] * u[1];
                let perp = img - uc * along;
                dev = dev.max(perp.norm() / (1.0 + img.norm()));
                eig[n] = [along.re, along.im];
            }
            (Some(dev), Some(eig))
        }
    };
    Ok(IdentityReport {
        ksym,
        re_top,
        alpha0_general,
        alpha0,
        alt_sum,
        alpha_recursion,
        beta_recursion1,
        kernel_eigen,
        kernel_eigenvalues,
        imaginary,
    })
}

// ---------- off-diagonal factorization ----------

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationResult {
    /// Real polynomial p with exponents 0..d−1.
    pub p: Vec<f64>,
    /// i·(0, λ⁻¹−A/B; −A/B+λ, 0).
    pub core: LaurentMatrix,
    pub remainder: f64,
    pub reproduction: f64,
}

impl FactorizationResult {
    pub fn p_poly(&self) -> LaurentPoly {
        LaurentPoly::from_real(0, &self.p)
    }
}

pub fn factor_core(k: &KMatrix) -> Result<LaurentMatrix> {
    if k.b == 0.0 {
        return Err(Error::FactorizationCoreUndefined);
    }
    let t = k.a / k.b;
    let i = c(0.0, 1.0);
    let z = c(0.0, 0.0);
    Ok(LaurentMatrix::raw(
        -1,
        vec![Mat2::new(z, i, z, z), Mat2::new(z, -i * t, -i * t, z), Mat2::new(z, z, i, z)],
    ))
}

pub const FACTOR_TOL: f64 = 1e-11;

pub fn offdiag_factorize(xi: &Potential, k: &KMatrix) -> Result<FactorizationResult> {
    if k.b == 0.0 {
        return Err(Error::FactorizationCoreUndefined);
    }
    if !xi.is_off_diagonal(FACTOR_TOL * (1.0 + xi.max_abs())) {
        return Err(Error::NotOffDiagonal);
    }
    if !(ksym_residual(xi, k) <= KSYM_PRE_TOL) {
        return Err(Error::NotKSymmetric);
    }
    let d = xi.d;
    let t = k.a / k.b;
    let bim = |j: i64| xi.beta_k(j).im;
    // Im β_{j−1} = p_j − t·p_{j−1} (p₋₁ = p_d = 0); run the recursion in the direction that damps errors
    let mut p = vec![0.0; d];
    let remainder = if t.abs() <= 1.0 {
        p[0] = bim(-1);
        for j in 1..d {
            p[j] = bim(j as i64 - 1) + t * p[j - 1];
        }
        (bim(d as i64 - 1) + t * p[d - 1]).abs()
    } else {
        p[d - 1] = -bim(d as i64 - 1) / t;
        for j in (1..d).rev() {
            p[j - 1] = (p[j] - bim(j as i64 - 1)) / t;
        }
        (bim(-1) - p[0]).abs()
    };
    let core = factor_core(k)?;
    let rebuilt = core.scale_by_poly(&LaurentPoly::from_real(0, &p));
    let reproduction = rebuilt.dist(&xi.to_laurent());
    Ok(FactorizationResult { p, core, remainder, reproduction })
}

// ---------- double K-symmetry ----------

#[derive(Clone, Debug)]
pub struct Intersection {
    pub dim: usize,
    /// Orthonormal basis columns in the unknown layout.
    pub basis: DMatrix<f64>,
    /// Some direction has Im β₋₁ ≠ 0.
    pub admissible: bool,
    pub eta: LaurentMatrix,
    /// Per basis vector: multiplier r with element = r·η, and the residual.
    pub factors: Vec<(LaurentPoly, f64)>,
}

/// Least-squares multiplier r (exponents 0..d−1) with X ≈ r·η.
pub fn divide_by(x: &LaurentMatrix, eta: &LaurentMatrix, d: usize) -> (LaurentPoly, f64) {
    let lo = (eta.lo()).min(x.lo());
    let hi = (eta.hi() + d as i32 - 1).max(x.hi());
    let nrow = 4 * (hi - lo + 1) as usize;
    let mut m = DMatrix::<C64>::zeros(nrow, d);
    let mut rhs = DVector::<C64>::zeros(nrow);
    for e in lo..=hi {
        let base = 4 * (e - lo) as usize;
        let xe = x.coeff(e);
        for (q, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            rhs[base + q] = xe[(i, j)];
            for s in 0..d {
                m[(base + q, s)] = eta.coeff(e - s as i32)[(i, j)];
            }
        }
    }
    let svd = m.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).expect("svd solve");
    let r = LaurentPoly::raw(0, sol.iter().copied().collect());
    let resid = eta.scale_by_poly(&r).dist(x);
    (r, resid)
}

pub fn double_ksym_intersect(d: usize, k0: &KMatrix, k1: &KMatrix) -> Result<Intersection> {
    let pd = k_product_decompose(k0, k1)?;
    if k0 == k1 {
        return Err(Error::Domain("K₀ and K₁ must differ".into()));
    }
    let s0 = ksym_constraints(d, k0)?;
    let s1 = ksym_constraints(d, k1)?;
    let ns = ksym_nullspace(&s0.stack(&s1))?;
    let idx = im_beta_index(d, -1);
    let admissible = (0..ns.dim).any(|j| ns.basis[(idx, j)].abs() > 1e-12);
    let mut factors = Vec::new();
    for j in 0..ns.dim {
        let col: Vec<f64> = ns.basis.column(j).iter().copied().collect();
        let p = Potential::from_unknowns(d, &col)?;
        factors.push(divide_by(&p.to_laurent(), &pd.eta, d));
    }
    Ok(Intersection { dim: ns.dim, basis: ns.basis, admissible, eta: pd.eta, factors })
}

// ---------- JSON ----------

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct PotentialMeta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub created: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PotentialFile {
    pub degree: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: Vec<[f64; 2]>,
    pub beta: Vec<[f64; 2]>,
    #[serde(default)]
    pub meta: PotentialMeta,
}

impl PotentialFile {
    pub fn new(xi: &Potential, k: &KMatrix, meta: PotentialMeta) -> Self {
        PotentialFile {
            degree: xi.d,
            a: k.a,
            b: k.b,
            alpha: xi.alpha.iter().map(|z| [z.re, z.im]).collect(),
            beta: xi.beta.iter().map(|z| [z.re, z.im]).collect(),
            meta,
        }
    }

    pub fn kmatrix(&self) -> KMatrix {
        KMatrix::new(self.a, self.b)
    }

    /// Potential without validation.
    pub fn potential_unchecked(&self) -> Result<Potential> {
        Potential::unchecked(
            self.degree,
            self.alpha.iter().map(|p| c(p[0], p[1])).collect(),
            self.beta.iter().map(|p| c(p[0], p[1])).collect(),
        )
    }

    pub fn potential(&self) -> Result<Potential> {
        let p = self.potential_unchecked()?;
        potential_assemble(p.d, p.alpha, p.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn assemble_degree_one_chart() {
        for (a, b, t) in [(1.0, 2.0, 0.3), (-0.5, 0.0, -1.0), (0.0, 0.7, 2.0)] {
            let alpha = vec![c(0.0, -2.0 * (a + b * t))];
            let beta = vec![c(0.0, 1.0), c(0.0, t)];
            let p = potential_assemble(1, alpha, beta).unwrap();
            assert!(ksym_residual(&p, &KMatrix::new(a, b)) < 1e-11);
        }
    }

    #[test]
    fn assemble_rejects_bad_inputs() {
        let e = potential_assemble(1, vec![c(0.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(e, Err(Error::Residue));
        let (a, b) = (0.4, 1.0);
        // a d=2 chart potential with β₋₁−β₀+β₁ ≠ 0: α₀ = −2(Aβ₋₁+Bβ₁), α₁ from the recursion
        let (bm, b0, b1) = (1.0, 0.5, 0.2);
        let a0 = c(0.0, -2.0 * (a * bm + b * b1));
        let a1 = c(0.0, -2.0 * (a * (b0 - b1) + b * (b0 - bm)));
        let e = potential_assemble(2, vec![a0, a1], vec![c(0.0, bm), c(0.0, b0), c(0.0, b1)]);
        assert_eq!(e, Err(Error::Reality(0)));
        assert!(Potential::unchecked(0, vec![], vec![c(0.0, 1.0)]).is_err());
    }

    #[test]
    fn vacuum_residuals() {
        let v = vacuum();
        assert!(ksym_residual(&v, &KMatrix::new(0.0, 0.0)) < 1e-15);
        assert!(ksym_residual(&v, &KMatrix::new(1.0, -1.0)) < 1e-14);
        assert!(ksym_residual(&v, &KMatrix::new(1.0, 1.0)) > 0.1);
        assert!((v.normalization_product() - 1.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn reality_is_coefficientwise() {
        let k = KMatrix::new(0.3, 0.9);
        let xi = ksym_sample(4, &k, 11).unwrap().to_laurent();
        for j in -1..=4 {
            let lhs = xi.coeff(j).adjoint();
            let rhs = -xi.coeff(4 - j - 1);
            assert!(norm(&(lhs - rhs)) < 1e-14);
        }
        // equivalently star(ξ) = −λ^{d−1}·invert(ξ)
        assert!(xi.star().dist(&(-&xi.invert().shift(3))) < 1e-14);
    }

    /// Oracle: the ℝ-linear map x ↦ coefficients of Kξ + star(ξ)K, built from unit vectors
    /// with plain Laurent-matrix arithmetic, together with the reality and residue rows.
    fn direct_system(d: usize, k: &KMatrix) -> DMatrix<f64> {
        let n = 4 * d + 2;
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for j in 0..n {
            let mut x = vec![0.0; n];
            x[j] = 1.0;
            let p = Potential::from_unknowns(d, &x).unwrap();
            let r = ksym_defect(&p.to_laurent(), k);
            let mut col = Vec::new();
            for e in -2..=(d as i32 + 1) {
                for z in r.coeff(e).iter() {
                    col.push(z.re);
                    col.push(z.im);
                }
            }
            for kk in 0..d {
                let part = d - kk - 1;
                col.push(x[2 * kk] + x[2 * part]);
                col.push(x[2 * kk + 1] - x[2 * part + 1]);
            }
            col.push(x[re_beta_index(d, -1)]);
            cols.push(col);
        }
        DMatrix::from_fn(cols[0].len(), n, |i, j| cols[j][i])
    }

    fn nullity_float(m: &DMatrix<f64>) -> usize {
        let (sv, _) = sorted_svd(m);
        let cut = 1e-9 * sv[0];
        sv.iter().filter(|&&s| s <= cut).count()
    }

    #[test]
    fn assembled_rows_match_direct_route() {
        for d in 1..=5 {
            for (a, b) in [(0.3, 0.9), (-1.2, 0.4), (0.0, 0.5), (0.7, 0.0)] {
                let k = KMatrix::new(a, b);
                let sys = ksym_constraints(d, &k).unwrap();
                let ns = ksym_nullspace(&sys).unwrap();
                let direct = direct_system(d, &k);
                assert_eq!(nullity_float(&direct), ns.dim, "d={d} A={a} B={b}");
                // the assembled nullspace is annihilated by the direct system
                let r = &direct * &ns.basis;
                assert!(r.amax() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_examples() {
        let k = KMatrix::new(0.3, 0.9);
        for (d, want) in [(1, 2), (2, 2), (3, 5), (4, 5), (5, 8), (8, 11)] {
            let sys = ksym_constraints(d, &k).unwrap();
            let ns = ksym_nullspace(&sys).unwrap();
            assert_eq!(ns.dim, want, "d={d}");
            assert_eq!(theorem_dimension(d), want);
            if d == 1 {
                assert_eq!(exact::rank(&sys.exact_rows, 6), 4);
            }
        }
    }

    #[test]
    fn float_and_exact_modes_agree() {
        let k = KMatrix::new(0.3, 0.9);
        for d in 1..=6 {
            let sys = ksym_constraints(d, &k).unwrap();
            let e = ksym_nullspace_with(&sys, RankMode::Exact).unwrap();
            let f = ksym_nullspace_with(&sys, RankMode::Float).unwrap();
            assert_eq!(e.dim, f.dim);
            // same subspace: projector distance
            let pe = &e.basis * e.basis.transpose();
            let pf = &f.basis * f.basis.transpose();
            assert!((pe - pf).amax() < 1e-9);
            let ortho = e.basis.transpose() * &e.basis - DMatrix::identity(e.dim, e.dim);
            assert!(ortho.amax() < 1e-13);
        }
    }

    #[test]
    fn float_mode_flags_ambiguous_gap() {
        let k = KMatrix::new(0.3, 0.9);
        let mut sys = ksym_constraints(2, &k).unwrap();
        // perturb so the smallest kept and largest dropped singular values are close
        let n = sys.n_unknowns();
        let null = ksym_nullspace(&sys).unwrap().basis;
        // one kept value at 1e−7 and one dropped at 1e−11: ratio 1e−4 is not a clean gap
        for (col, s) in [(0, 1e-11), (1, 1e-7)] {
            let extra = null.column(col).transpose() * s;
            let m = sys.rows.nrows();
            sys.rows = sys.rows.clone().insert_row(m, 0.0);
            for j in 0..n {
                sys.rows[(m, j)] = extra[j];
            }
        }
        assert_eq!(ksym_nullspace_with(&sys, RankMode::Float).unwrap_err(), Error::RankIllConditioned);
    }

    #[test]
    fn sample_degree_one_matches_chart() {
        let k = KMatrix::new(1.0, 2.0);
        let p = ksym_sample(1, &k, 7).unwrap();
        let bm = p.beta_k(-1);
        let b0 = p.beta_k(0);
        assert!(bm.re.abs() < 1e-14 && b0.re.abs() < 1e-14 && bm.im > 0.0);
        let want = (bm.im * k.a + b0.im * k.b) * -2.0;
        assert!((p.alpha_k(0) - c(0.0, want)).norm() < 1e-14);
        assert_eq!(p, ksym_sample(1, &k, 7).unwrap());
        assert_ne!(p, ksym_sample(1, &k, 8).unwrap());
    }

    #[test]
    fn sample_degree_two_alternating_sum() {
        let k = KMatrix::new(-0.6, 1.1);
        for seed in 0..5 {
            let p = ksym_sample(2, &k, seed).unwrap();
            let s = p.beta_k(-1) - p.beta_k(0) + p.beta_k(1);
            assert!(s.norm() < 1e-13);
            assert!(ksym_residual(&p, &k) < 1e-10);
        }
    }

    #[test]
    fn structural_identities_degree_four() {
        let k = KMatrix::new(0.45, -0.8);
        for seed in 0..5 {
            let p = ksym_sample(4, &k, seed).unwrap();
            let r = structural_identities(&p, &k).unwrap();
            assert!(r.alt_sum.unwrap() <= 1e-10);
            assert!(r.max_residual() <= 1e-9, "{r:?}");
            // α₀, α₃ and α₁, α₂ pairing
            assert!((p.alpha_k(0) + p.alpha_k(3).conj()).norm() < 1e-12);
            assert!((p.alpha_k(1) + p.alpha_k(2).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn degree_four_imaginary_reality_chain() {
        let k = KMatrix::new(0.45, -0.8);
        let sys = ksym_constraints(4, &k).unwrap();
        // restrict to imaginary potentials: add Re rows
        let n = sys.n_unknowns();
        let mut rows = sys.exact_rows.clone();
        for i in (0..n).step_by(2) {
            let mut r = vec![Q::zero(); n];
            r[i] = Q::one();
            rows.push(r);
        }
        let basis = exact::nullspace(&rows, n);
        assert!(!basis.is_empty());
        for v in &basis {
            let x: Vec<f64> = v.iter().map(q_to_f64).collect();
            let p = Potential::from_unknowns(4, &x).unwrap();
            let s = p.beta_k(-1) - p.beta_k(0) + p.beta_k(1) - p.beta_k(2) + p.beta_k(3);
            assert!(s.norm() < 1e-12);
            assert!((p.alpha_k(0) - p.alpha_k(3)).norm() < 1e-12);
            assert!((p.alpha_k(1) - p.alpha_k(2)).norm() < 1e-12);
        }
    }

    #[test]
    fn degree_three_non_imaginary() {
        let k = KMatrix::new(0.5, 1.5);
        let mut found = false;
        for seed in 0..20 {
            let p = ksym_sample(3, &k, seed).unwrap();
            if p.beta_k(0).re.abs() < 1e-3 {
                continue;
            }
            found = true;
            let r = structural_identities(&p, &k).unwrap();
            assert!(!r.imaginary);
            let want = c(p.beta_k(0).re / (4.0 * k.b), 0.0) - (p.beta_k(-1) * k.a + p.beta_k(2) * k.b) * 2.0;
            assert!((p.alpha_k(0) - want).norm() < 1e-12);
            assert!((p.beta_k(1).re + k.a / k.b * p.beta_k(0).re).abs() < 1e-12);
            assert!(p.alpha_k(1).re.abs() < 1e-12);
        }
        assert!(found);
    }

    #[test]
    fn freedom_counts() {
        let k = KMatrix::new(0.3, 0.9);
        for d in 1..=8 {
            let sys = ksym_constraints(d, &k).unwrap();
            assert_eq!(freedom_split(&sys).unwrap(), theorem_freedom(d), "d={d}");
        }
        assert_eq!(theorem_freedom(4), (1, 4));
        assert_eq!(theorem_freedom(3), (1, 4));
        assert_eq!(theorem_freedom(1), (0, 2));
    }

    #[test]
    fn beta_projection_is_injective() {
        let k = KMatrix::new(-0.7, 0.35);
        for d in 1..=7 {
            let sys = ksym_constraints(d, &k).unwrap();
            let basis = ksym_nullspace(&sys).unwrap().exact.unwrap();
            let coords: Vec<usize> = (re_beta_index(d, -1)..4 * d + 2).collect();
            assert_eq!(exact::projected_rank(&basis, &coords), basis.len());
        }
    }

    #[test]
    fn rows_124_suffice() {
        let k = KMatrix::new(0.3, 0.9);
        for d in 1..=6 {
            let all = ksym_nullspace(&ksym_constraints(d, &k).unwrap()).unwrap();
            let sub = ksym_constraints_masked(d, &k, EquationMask([true, true, false, true])).unwrap();
            let sub = ksym_nullspace(&sub).unwrap();
            assert_eq!(all.dim, sub.dim);
            let pa = &all.basis * all.basis.transpose();
            let ps = &sub.basis * sub.basis.transpose();
            assert!((pa - ps).amax() < 1e-12);
        }
    }

    #[test]
    fn zero_constants_allowed() {
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)] {
            let k = KMatrix::new(a, b);
            for d in 1..=4 {
                let p = ksym_sample(d, &k, 3).unwrap();
                assert!(ksym_residual(&p, &k) < 1e-10);
            }
        }
    }

    #[test]
    fn factorization_examples() {
        let k = KMatrix::new(1.0, 2.0);
        let t = 0.5;
        // d = 1
        let p1 = potential_assemble(1, vec![c(0.0, 0.0)], vec![c(0.0, 1.3), c(0.0, -1.3 * t)]).unwrap();
        let f = offdiag_factorize(&p1, &k).unwrap();
        assert!((f.p[0] - 1.3).abs() < 1e-15 && f.remainder < 1e-11 && f.reproduction < 1e-11);
        // d = 2: p = β₋₁(λ+1)
        let bm = 0.8;
        let beta = vec![c(0.0, bm), c(0.0, bm * (1.0 - t)), c(0.0, -bm * t)];
        let p2 = potential_assemble(2, vec![c(0.0, 0.0); 2], beta).unwrap();
        let f = offdiag_factorize(&p2, &k).unwrap();
        assert!((f.p[0] - bm).abs() < 1e-14 && (f.p[1] - bm).abs() < 1e-14);
        assert!(f.reproduction < 1e-11);
        // d = 3 worked example
        let beta = vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.75), c(0.0, -0.5)];
        let p3 = potential_assemble(3, vec![c(0.0, 0.0); 3], beta).unwrap();
        assert!(ksym_residual(&p3, &k) < 1e-12);
        let f = offdiag_factorize(&p3, &k).unwrap();
        assert!((f.p[0] - 1.0).abs() < 1e-15 && (f.p[1] - 0.5).abs() < 1e-15 && (f.p[2] - 1.0).abs() < 1e-15);
        assert!(f.remainder < 1e-11 && f.reproduction < 1e-11);
    }

    #[test]
    fn factorization_errors() {
        let v = vacuum();
        assert_eq!(offdiag_factorize(&v, &KMatrix::new(0.0, 0.0)), Err(Error::FactorizationCoreUndefined));
        let k = KMatrix::new(0.5, 1.5);
        let p = (0..20).map(|s| ksym_sample(3, &k, s).unwrap()).find(|p| !p.is_off_diagonal(1e-6)).unwrap();
        assert_eq!(offdiag_factorize(&p, &k), Err(Error::NotOffDiagonal));
    }

    /// Long division of X₁₂ by η₁₂ followed by a full comparison, as an oracle for `divide_by`.
    fn long_division_residual(x: &LaurentMatrix, eta: &LaurentMatrix, d: usize) -> f64 {
        let num = x.entry(0, 1);
        let den = eta.entry(0, 1);
        // both have lowest exponent −1; divide from the bottom
        let mut rem: Vec<C64> = (num.lo()..=num.hi()).map(|e| num.coeff(e)).collect();
        let dc: Vec<C64> = (den.lo()..=den.hi()).map(|e| den.coeff(e)).collect();
        let shift = num.lo() - den.lo();
        let mut q = vec![C64::new(0.0, 0.0); d];
        for s in 0..d {
            let e = s as i32 - shift;
            if e < 0 || e as usize >= rem.len() {
                continue;
            }
            let f = rem[e as usize] / dc[0];
            q[s] = f;
            for (t, z) in dc.iter().enumerate() {
                if (e as usize + t) < rem.len() {
                    rem[e as usize + t] -= f * z;
                }
            }
        }
        let r = LaurentPoly::raw(0, q);
        eta.scale_by_poly(&r).dist(x)
    }

    #[test]
    fn double_intersection() {
        let k0 = KMatrix::new(1.0, 1.0);
        let k1 = KMatrix::new(2.0, -2.0);
        for d in 1..=6 {
            let inter = double_ksym_intersect(d, &k0, &k1).unwrap();
            // frozen from the exact rational computation
            assert_eq!(inter.dim, (d + 1) / 2, "d={d}");
            assert!(inter.admissible);
            for (j, (r, res)) in inter.factors.iter().enumerate() {
                assert!(*res < 1e-9, "d={d} res={res}");
                assert!(r.hi() <= d as i32 - 1);
                let col: Vec<f64> = inter.basis.column(j).iter().copied().collect();
                let x = Potential::from_unknowns(d, &col).unwrap().to_laurent();
                assert!(long_division_residual(&x, &inter.eta, d) < 1e-9);
            }
        }
        assert!(double_ksym_intersect(1, &k0, &KMatrix::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let k = KMatrix::new(0.1, 0.2);
        let p = ksym_sample(3, &k, 4).unwrap();
        let f = PotentialFile::new(&p, &k, PotentialMeta { seed: Some(4), created: None });
        let s = serde_json::to_string(&f).unwrap();
        let g: PotentialFile = serde_json::from_str(&s).unwrap();
        assert_eq!(g.potential().unwrap(), p);
        assert_eq!(g.kmatrix(), k);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn samples_satisfy_recursions(d in 1usize..=6, a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000) {
            let k = KMatrix::new(a, b);
            let p = ksym_sample(d, &k, seed).unwrap();
            prop_assert!(ksym_residual(&p, &k) <= 1e-10);
            let r = structural_identities(&p, &k).unwrap();
            prop_assert!(r.alpha_recursion <= 1e-10);
            prop_assert!(r.beta_recursion1 <= 1e-10);
            prop_assert!(r.re_top <= 1e-10);
            prop_assert!(r.alpha0_general <= 1e-10);
            if let Some(s) = r.alt_sum { prop_assert!(s <= 1e-10); }
            if let Some(e) = r.kernel_eigen { prop_assert!(e <= 1e-9); }
            if d % 2 == 1 {
                prop_assert!(p.alpha_k((d as i64 - 1) / 2).re.abs() <= 1e-12);
            }
        }

        #[test]
        fn imaginary_closure(d in 1usize..=6, a in -2.0f64..2.0, b in 0.1f64..2.0) {
            // nullspace intersected with Re β = 0 has Re α = 0
            let k = KMatrix::new(a, b);
            let sys = ksym_constraints(d, &k).unwrap();
            let n = sys.n_unknowns();
            let mut rows = sys.exact_rows.clone();
            for j in -1..d as i64 {
                let mut r = vec![Q::zero(); n];
                r[re_beta_index(d, j)] = Q::one();
                rows.push(r);
            }
            for v in exact::nullspace(&rows, n) {
                for i in 0..d {
                    prop_assert!(v[2 * i].is_zero());
                }
            }
        }
    }
}
