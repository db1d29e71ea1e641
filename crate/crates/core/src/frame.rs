//! Symes pipeline: Φ = exp(zξ), loop-group Iwasawa splitting Φ = F·B, extended frames over a
//! domain grid, Sym–Bobenko immersions, the conformal factor and the boundary diagnostics.
//!
//! Conventions. With Im β₋₁·Im β_{d−1} = 1/16 the frame satisfies F⁻¹F_x = U where
//! U = (i/4)(−2ω_y, e^ωλ⁻¹ + e^{−ω}; e^{−ω} + e^ωλ, 2ω_y), e^ω = 4ρ²Im β₋₁ with ρ = B(0)₁₁,
//! ω solves Δω + ½ sinh 2ω = 0 and K-symmetry yields ω_y = Ae^ω + Be^{−ω} on y = 0.
//! The induced metric of the Sym–Bobenko immersion is e^{2ω}/(4H²)·|dz|².

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{dft_all, LoopSample, UnitCircleGrid};
use crate::error::{Error, Result};
use crate::kmatrix::KMatrix;
use crate::laurent::{c, det2, identity, inv2, mat2, norm, Mat2, C64};
use crate::potentials::{ksym_residual, vacuum, Potential};

pub const DEFAULT_MODES: usize = 32;
/// Iwasawa residuals above this set the warning flag.
pub const IWASAWA_WARN: f64 = 1e-6;
/// λ-points closer than this to a K-matrix root are left out of residuals involving K⁻¹.
pub const ROOT_EXCLUSION: f64 = 1e-2;
pub const CALIBRATION_TOL: f64 = 1e-6;
/// Metric constant c in e^ω = c·ρ²·Im β₋₁, as fixed by the vacuum.
pub const METRIC_CONSTANT: f64 = 4.0;
/// Required value of Im β₋₁·Im β_{d−1}.
pub const NORMALIZATION: f64 = 1.0 / 16.0;

// ---------- domain ----------

/// Uniform grid on [x0, x1) × [y0, y1): nodes x0 + i·(x1−x0)/nx, so y = 0 is a node of
/// symmetric ranges with even counts and halving h nests the grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl DomainGrid {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(x_range) || !ok(y_range) || nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "domain {x_range:?}×{y_range:?} with {nx}×{ny} samples"
            )));
        }
        Ok(DomainGrid { x_range, y_range, nx, ny })
    }

    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new((-half, half), (-half, half), n, n)
    }

    pub fn hx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_range.0 + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_range.0 + j as f64 * self.hy()
    }

    pub fn z(&self, i: usize, j: usize) -> C64 {
        c(self.x(i), self.y(j))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Row whose node is exactly y (up to rounding).
    pub fn row_of(&self, y: f64) -> Option<usize> {
        let t = (y - self.y_range.0) / self.hy();
        let j = t.round();
        if j < 0.0 || j >= self.ny as f64 || (t - j).abs() > 1e-9 {
            return None;
        }
        Some(j as usize)
    }

    /// Nearest row to y and the snapping distance; error when y is off the grid.
    pub fn snap_row(&self, y: f64) -> Result<(usize, f64)> {
        let t = (y - self.y_range.0) / self.hy();
        let j = t.round();
        if !(0.0..self.ny as f64).contains(&j) || (t - j).abs() > 0.5 + 1e-12 {
            return Err(Error::MissingRow(y));
        }
        let j = j as usize;
        Ok((j, (self.y(j) - y).abs()))
    }

    fn zero_row(&self) -> Result<usize> {
        self.row_of(0.0).ok_or(Error::MissingRow(0.0))
    }
}

// ---------- matrix exponential and Φ ----------

fn cosh_sinhc(s2: C64) -> (C64, C64) {
    if s2.norm() < 1.0 {
        // even series in s, s² = s2
        let (mut ch, mut sh) = (c(0.0, 0.0), c(0.0, 0.0));
        let mut term = c(1.0, 0.0);
        for k in 0..12 {
            ch += term;
            let t2 = term / (2 * k + 1) as f64;
            sh += t2;
            term = term * s2 / ((2 * k + 1) * (2 * k + 2)) as f64;
        }
        (ch, sh)
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    }
}

/// exp(m) for a 2×2 matrix through cosh/sinh of the eigenvalue of its trace-free part.
pub fn expm2(m: &Mat2) -> Mat2 {
    let t = (m[(0, 0)] + m[(1, 1)]) / 2.0;
    let a = m - identity() * t;
    let (ch, sh) = cosh_sinhc(-det2(&a));
    (identity() * ch + a * sh) * t.exp()
}

fn xi_samples(xi: &Potential, grid: &UnitCircleGrid) -> Vec<Mat2> {
    grid.points().into_iter().map(|l| xi.eval(l)).collect()
}

/// Φ(λ_j) = exp(z·ξ(λ_j)).
pub fn holomorphic_frame(xi: &Potential, z: C64, grid: UnitCircleGrid) -> LoopSample {
    phi_from_samples(&xi_samples(xi, &grid), z, grid)
}

fn phi_from_samples(xs: &[Mat2], z: C64, grid: UnitCircleGrid) -> LoopSample {
    LoopSample { grid, values: xs.iter().map(|x| expm2(&(x * z))).collect() }
}

// ---------- Iwasawa ----------

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IwasawaResiduals {
    /// max ‖F*F − 𝟙‖ on the circle.
    pub unitarity: f64,
    /// Largest negative Fourier mode of F*Φ, which should equal B.
    pub analyticity: f64,
    /// max ‖F·B − Φ‖.
    pub reconstruction: f64,
    /// ‖B_N‖, the last retained coefficient.
    pub tail: f64,
}

impl IwasawaResiduals {
    pub fn max(&self) -> f64 {
        self.unitarity.max(self.analyticity).max(self.reconstruction)
    }

    fn merge(&self, o: &Self) -> Self {
        IwasawaResiduals {
            unitarity: self.unitarity.max(o.unitarity),
            analyticity: self.analyticity.max(o.analyticity),
            reconstruction: self.reconstruction.max(o.reconstruction),
            tail: self.tail.max(o.tail),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaFactors {
    pub f: LoopSample,
    /// B = Σ_{m=0}^{N} B_m λ^m; B_0 upper triangular with positive diagonal.
    pub b_coeffs: Vec<Mat2>,
    pub n_modes: usize,
    pub residuals: IwasawaResiduals,
    pub warning: bool,
}

fn poly_eval(co: &[Mat2], lam: C64) -> Mat2 {
    co.iter().rev().fold(Mat2::zeros(), |acc, m| acc * lam + m)
}

impl IwasawaFactors {
    pub fn b_at(&self, lam: C64) -> Mat2 {
        poly_eval(&self.b_coeffs, lam)
    }

    pub fn b(&self) -> LoopSample {
        LoopSample::from_fn(self.f.grid, |l| self.b_at(l))
    }

    pub fn b0(&self) -> Mat2 {
        self.b_coeffs[0]
    }
}

fn block(m: &DMatrix<C64>, i: usize, j: usize) -> Mat2 {
    mat2(m[(2 * i, 2 * j)], m[(2 * i, 2 * j + 1)], m[(2 * i + 1, 2 * j)], m[(2 * i + 1, 2 * j + 1)])
}

/// Fourier blocks P̂_k, |k| ≤ N, of P = Φ*Φ and the block Toeplitz matrix T_ij = P̂_{j−i}.
fn toeplitz(phi: &LoopSample, n_modes: usize) -> Result<DMatrix<C64>> {
    let n = phi.grid.n();
    if n < 4 * n_modes || n_modes == 0 {
        return Err(Error::InvalidGrid(format!("grid size {n} below 4N = {}", 4 * n_modes)));
    }
    let p = phi.map(|m| m.adjoint() * m);
    let hat = dft_all(&p);
    let at = |k: i64| hat[k.rem_euclid(n as i64) as usize];
    let dim = 2 * (n_modes + 1);
    let mut t = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..=n_modes {
        for j in 0..=n_modes {
            let b = at(j as i64 - i as i64);
            for r in 0..2 {
                for s in 0..2 {
                    t[(2 * i + r, 2 * j + s)] = b[(r, s)];
                }
            }
        }
    }
    // exact Hermitian symmetry before factoring
    let th = (&t + t.adjoint()) * c(0.5, 0.0);
    Ok(th)
}

fn assemble(phi: &LoopSample, mut b_coeffs: Vec<Mat2>, b_inv: Option<&[Mat2]>) -> Result<IwasawaFactors> {
    let grid = phi.grid;
    let n_modes = b_coeffs.len() - 1;
    b_coeffs[0][(1, 0)] = c(0.0, 0.0);
    let pts = grid.points();
    let mut f = Vec::with_capacity(grid.n());
    for (j, l) in pts.iter().enumerate() {
        let binv = match b_inv {
            Some(g) => poly_eval(g, *l),
            None => inv2(&poly_eval(&b_coeffs, *l)).ok_or(Error::NotPositiveDefinite)?,
        };
        f.push(phi.values[j] * binv);
    }
    let f = LoopSample { grid, values: f };
    let residuals = iwasawa_residuals(phi, &f, &b_coeffs);
    Ok(IwasawaFactors { f, b_coeffs, n_modes, warning: residuals.max() > IWASAWA_WARN, residuals })
}

fn iwasawa_residuals(phi: &LoopSample, f: &LoopSample, b: &[Mat2]) -> IwasawaResiduals {
    let grid = phi.grid;
    let n = grid.n();
    let mut unitarity: f64 = 0.0;
    let mut reconstruction: f64 = 0.0;
    for (j, l) in grid.points().iter().enumerate() {
        let fj = &f.values[j];
        unitarity = unitarity.max(norm(&(fj.adjoint() * fj - identity())));
        reconstruction = reconstruction.max(norm(&(fj * poly_eval(b, *l) - phi.values[j])));
    }
    let s = LoopSample { grid, values: f.values.iter().zip(&phi.values).map(|(a, p)| a.adjoint() * p).collect() };
    let hat = dft_all(&s);
    let analyticity = (n / 2 + 1..n).map(|k| norm(&hat[k])).fold(0.0, f64::max);
    let tail = norm(b.last().unwrap());
    IwasawaResiduals { unitarity, analyticity, reconstruction, tail }
}

/// Splits Φ = F·B by spectral factorization of Φ*Φ = B*B with a block Toeplitz Cholesky factor:
/// T = LL* and B_m = (L_{N,N−m})*.
pub fn iwasawa_factor(phi: &LoopSample, n_modes: usize) -> Result<IwasawaFactors> {
    let t = toeplitz(phi, n_modes)?;
    let chol = t.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let b: Vec<Mat2> = (0..=n_modes).map(|m| block(&l, n_modes, n_modes - m).adjoint()).collect();
    assemble(phi, b, None)
}

/// Independent route: dense LU solve of T·Y = E_N gives B⁻¹ = Σ Y_{N−m}B₀* λ^m with B₀*B₀ = Y_N⁻¹.
pub fn iwasawa_dense_oracle(phi: &LoopSample, n_modes: usize) -> Result<IwasawaFactors> {
    let t = toeplitz(phi, n_modes)?;
    let dim = t.nrows();
    let mut rhs = DMatrix::<C64>::zeros(dim, 2);
    rhs[(dim - 2, 0)] = c(1.0, 0.0);
    rhs[(dim - 1, 1)] = c(1.0, 0.0);
    let y = t.lu().solve(&rhs).ok_or(Error::NotPositiveDefinite)?;
    let yb = |k: usize| mat2(y[(2 * k, 0)], y[(2 * k, 1)], y[(2 * k + 1, 0)], y[(2 * k + 1, 1)]);
    let yn = yb(n_modes);
    let m = inv2(&yn).ok_or(Error::NotPositiveDefinite)?;
    // upper-triangular B₀ with B₀*B₀ = m: B₀ = (r, s; 0, q)
    let r = m[(0, 0)].re.max(0.0).sqrt();
    if r == 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let s = m[(0, 1)] / r;
    let q2 = m[(1, 1)].re - s.norm_sqr();
    if q2 <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let b0 = mat2(c(r, 0.0), s, c(0.0, 0.0), c(q2.sqrt(), 0.0));
    let g: Vec<Mat2> = (0..=n_modes).map(|k| yb(n_modes - k) * b0.adjoint()).collect();
    // B coefficients from the power series inverse of G
    let g0inv = inv2(&g[0]).ok_or(Error::NotPositiveDefinite)?;
    let mut b = vec![Mat2::zeros(); n_modes + 1];
    for k in 0..=n_modes {
        let mut acc = if k == 0 { identity() } else { Mat2::zeros() };
        for jj in 1..=k {
            acc -= g[jj] * b[k - jj];
        }
        b[k] = g0inv * acc;
    }
    assemble(phi, b, Some(&g))
}

// ---------- frame fields ----------

/// Iwasawa data over a domain grid; F is rebuilt from Φ and the stored B coefficients.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub dom: DomainGrid,
    pub grid: UnitCircleGrid,
    pub n_modes: usize,
    pub xi: Potential,
    xs: Vec<Mat2>,
    pub b_coeffs: Vec<Vec<Mat2>>,
    pub residuals: Vec<IwasawaResiduals>,
}

impl FrameField {
    pub fn phi(&self, idx: usize) -> LoopSample {
        let (i, j) = self.dom.coords(idx);
        phi_from_samples(&self.xs, self.dom.z(i, j), self.grid)
    }

    pub fn frame(&self, idx: usize) -> LoopSample {
        let phi = self.phi(idx);
        let values = self
            .grid
            .points()
            .iter()
            .zip(&phi.values)
            .map(|(l, p)| p * inv2(&poly_eval(&self.b_coeffs[idx], *l)).unwrap_or_else(Mat2::zeros))
            .collect();
        LoopSample { grid: self.grid, values }
    }

    pub fn b(&self, idx: usize) -> LoopSample {
        LoopSample::from_fn(self.grid, |l| poly_eval(&self.b_coeffs[idx], l))
    }

    pub fn b0(&self, idx: usize) -> Mat2 {
        self.b_coeffs[idx][0]
    }

    pub fn max_residuals(&self) -> IwasawaResiduals {
        self.residuals.iter().fold(IwasawaResiduals::default(), |a, r| a.merge(r))
    }

    pub fn xi_samples(&self) -> &[Mat2] {
        &self.xs
    }
}

pub fn frame_field(xi: &Potential, dom: DomainGrid, grid: UnitCircleGrid, n_modes: usize) -> Result<FrameField> {
    let xs = xi_samples(xi, &grid);
    let out: Vec<Result<(Vec<Mat2>, IwasawaResiduals)>> = (0..dom.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = dom.coords(idx);
            let phi = phi_from_samples(&xs, dom.z(i, j), grid);
            iwasawa_factor(&phi, n_modes)
                .map(|fac| (fac.b_coeffs, fac.residuals))
                .map_err(|e| Error::AtGridPoint { ix: i, iy: j, source: Box::new(e) })
        })
        .collect();
    let mut b_coeffs = Vec::with_capacity(dom.len());
    let mut residuals = Vec::with_capacity(dom.len());
    for r in out {
        let (b, res) = r?;
        b_coeffs.push(b);
        residuals.push(res);
    }
    Ok(FrameField { dom, grid, n_modes, xi: xi.clone(), xs, b_coeffs, residuals })
}

// ---------- spectral λ-calculus on loops ----------

fn signed_mode(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Value and λ-derivative at an arbitrary λ from the Fourier series of a loop sample.
/// The Nyquist mode is split evenly between ±n/2.
pub fn loop_value_and_derivative(s: &LoopSample, lam: C64) -> (Mat2, Mat2) {
    let n = s.grid.n();
    let hat = dft_all(s);
    let mut v = Mat2::zeros();
    let mut d = Mat2::zeros();
    for (k, h) in hat.iter().enumerate() {
        if k == n / 2 {
            let m = (n / 2) as i32;
            let half = h * c(0.5, 0.0);
            v += half * lam.powi(m) + half * lam.powi(-m);
            d += half * (lam.powi(m - 1) * m as f64) - half * (lam.powi(-m - 1) * m as f64);
            continue;
        }
        let m = signed_mode(k, n) as i32;
        v += h * lam.powi(m);
        if m != 0 {
            d += h * (lam.powi(m - 1) * m as f64);
        }
    }
    (v, d)
}

/// ∂_λ of a loop sample at every grid point.
pub fn loop_derivative(s: &LoopSample) -> LoopSample {
    let grid = s.grid;
    let n = grid.n();
    let hat = dft_all(s);
    let pts = grid.points();
    let values = pts
        .iter()
        .map(|&l| {
            let mut d = Mat2::zeros();
            for (k, h) in hat.iter().enumerate() {
                let m = signed_mode(k, n) as i32;
                if k == n / 2 {
                    continue;
                }
                if m != 0 {
                    d += h * (l.powi(m - 1) * m as f64);
                }
            }
            d
        })
        .collect();
    LoopSample { grid, values }
}

// ---------- Sym–Bobenko ----------

/// Basis e₁ = (0,i;i,0), e₂ = (0,−1;1,0), e₃ = (i,0;0,−i) of su(2); f = Σ x_k e_k, x_k = −½ tr(f e_k).
pub fn su2_basis() -> [Mat2; 3] {
    let z = c(0.0, 0.0);
    [
        mat2(z, c(0.0, 1.0), c(0.0, 1.0), z),
        mat2(z, c(-1.0, 0.0), c(1.0, 0.0), z),
        mat2(c(0.0, 1.0), z, z, c(0.0, -1.0)),
    ]
}

pub fn su2_coords(f: &Mat2) -> [f64; 3] {
    let e = su2_basis();
    let mut x = [0.0; 3];
    for k in 0..3 {
        x[k] = -0.5 * (f * e[k]).trace().re;
    }
    x
}

#[derive(Clone, Debug)]
pub struct ImmersionGrid {
    pub dom: DomainGrid,
    pub f: Vec<Mat2>,
    pub coords: Vec<[f64; 3]>,
    pub h: f64,
    pub sym_point: C64,
    /// Largest ‖f + f*‖ + |tr f|.
    pub reality: f64,
}

/// f_λ = −2iλH⁻¹(∂_λF)F⁻¹ at λ0 from the Fourier series of F.
pub fn sym_bobenko(frames: &FrameField, lam0: C64, h: f64) -> Result<ImmersionGrid> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Domain("mean curvature H must be a nonzero real".into()));
    }
    if (lam0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("sym point {lam0} is not on the unit circle")));
    }
    let f: Vec<Mat2> = (0..frames.dom.len())
        .into_par_iter()
        .map(|idx| {
            let fr = frames.frame(idx);
            let (v, d) = loop_value_and_derivative(&fr, lam0);
            let vi = inv2(&v).unwrap_or_else(Mat2::zeros);
            d * vi * (c(0.0, -2.0) * lam0 / h)
        })
        .collect();
    let reality = f.iter().map(|m| norm(&(m + m.adjoint())) + m.trace().norm()).fold(0.0, f64::max);
    let coords = f.iter().map(su2_coords).collect();
    Ok(ImmersionGrid { dom: frames.dom, f, coords, h, sym_point: lam0, reality })
}

/// max over the grid of ‖f_{λ0⁻¹} + f_{λ0}*‖ for two immersions of the same frames at λ0 and λ0⁻¹.
pub fn reflection_residual(at: &ImmersionGrid, at_inverse: &ImmersionGrid) -> f64 {
    at.f.iter().zip(&at_inverse.f).map(|(a, b)| norm(&(b + a.adjoint()))).fold(0.0, f64::max)
}

/// Discrete fundamental forms at interior nodes by central differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGeometry {
    /// Mean curvature with the normal f_x × f_y (NaN on the border).
    pub mean: Vec<f64>,
    pub gauss: Vec<f64>,
    /// max over the interior of |E − G|/E and |F|/E.
    pub conformality: f64,
}

pub fn surface_geometry(imm: &ImmersionGrid) -> SurfaceGeometry {
    let dom = imm.dom;
    let (hx, hy) = (dom.hx(), dom.hy());
    let p = |i: usize, j: usize| Vector3::from(imm.coords[dom.index(i, j)]);
    let mut mean = vec![f64::NAN; dom.len()];
    let mut gauss = vec![f64::NAN; dom.len()];
    let mut conformality: f64 = 0.0;
    for j in 1..dom.ny - 1 {
        for i in 1..dom.nx - 1 {
            let x = (p(i + 1, j) - p(i - 1, j)) / (2.0 * hx);
            let y = (p(i, j + 1) - p(i, j - 1)) / (2.0 * hy);
            let xx = (p(i + 1, j) - p(i, j) * 2.0 + p(i - 1, j)) / (hx * hx);
            let yy = (p(i, j + 1) - p(i, j) * 2.0 + p(i, j - 1)) / (hy * hy);
            let xy = (p(i + 1, j + 1) - p(i + 1, j - 1) - p(i - 1, j + 1) + p(i - 1, j - 1)) / (4.0 * hx * hy);
            let nrm = x.cross(&y).normalize();
            let (e, f, g) = (x.dot(&x), x.dot(&y), y.dot(&y));
            let (l, m, nn) = (xx.dot(&nrm), xy.dot(&nrm), yy.dot(&nrm));
            let w = e * g - f * f;
            let k = dom.index(i, j);
            mean[k] = (e * nn - 2.0 * f * m + g * l) / (2.0 * w);
            gauss[k] = (l * nn - m * m) / w;
            conformality = conformality.max(((e - g) / e).abs()).max((f / e).abs());
        }
    }
    SurfaceGeometry { mean, gauss, conformality }
}

/// ω recovered from the immersion: e^ω = 2|H|·|f_x| (central differences, interior only).
pub fn omega_from_immersion(imm: &ImmersionGrid) -> Vec<f64> {
    let dom = imm.dom;
    let hx = dom.hx();
    let mut out = vec![f64::NAN; dom.len()];
    for j in 0..dom.ny {
        for i in 1..dom.nx - 1 {
            let a = Vector3::from(imm.coords[dom.index(i + 1, j)]);
            let b = Vector3::from(imm.coords[dom.index(i - 1, j)]);
            let fx = (a - b).norm() / (2.0 * hx);
            out[dom.index(i, j)] = (2.0 * imm.h.abs() * fx).ln();
        }
    }
    out
}

// ---------- conformal factor ----------

fn check_normalized(xi: &Potential) -> Result<()> {
    let p = xi.normalization_product();
    if (p - NORMALIZATION).abs() > 1e-9 {
        return Err(Error::InvalidPotential(format!(
            "Im β₋₁·Im β_(d−1) = {p}, expected 1/16 (use Potential::normalized)"
        )));
    }
    Ok(())
}

/// ω = log(c·ρ²·Im β₋₁) with ρ = B(0)₁₁.
pub fn metric_extract(frames: &FrameField, c_metric: f64) -> Result<Vec<f64>> {
    check_normalized(&frames.xi)?;
    let im_b = frames.xi.beta()[0].im;
    frames
        .b_coeffs
        .iter()
        .map(|b| {
            let rho = b[0][(0, 0)];
            if rho.re <= 0.0 || rho.im.abs() > 1e-12 * rho.re.max(1.0) {
                return Err(Error::NormalizationViolated);
            }
            Ok((c_metric * rho.re * rho.re * im_b).ln())
        })
        .collect()
}

/// Fixes c by requiring ω ≡ 0 for the vacuum at several z; disagreement beyond 1e−6 is an error.
pub fn calibrate_metric(grid: UnitCircleGrid, n_modes: usize) -> Result<f64> {
    let xi = vacuum();
    let im_b = xi.beta()[0].im;
    let zs = [c(0.3, 0.2), c(-0.7, 0.5), c(0.9, -0.8), c(-0.2, -1.1)];
    let mut vals = Vec::new();
    for z in zs {
        let fac = iwasawa_factor(&holomorphic_frame(&xi, z, grid), n_modes)?;
        let rho = fac.b0()[(0, 0)].re;
        vals.push(1.0 / (rho * rho * im_b));
    }
    let c0 = vals[0];
    if vals.iter().any(|v| (v - c0).abs() > CALIBRATION_TOL * c0) {
        return Err(Error::Calibration(format!("vacuum constants disagree: {vals:?}")));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// ω_y from the λ⁰ diagonal of U = BξB⁻¹ − B_xB⁻¹: ω_y = −2 Im[(BξB⁻¹)₀]₁₁.
pub fn omega_y_spectral(frames: &FrameField, idx: usize) -> f64 {
    let b = &frames.b_coeffs[idx];
    let xi = frames.xi.to_laurent();
    let b0i = inv2(&b[0]).unwrap_or_else(Mat2::zeros);
    let b1 = if b.len() > 1 { b[1] } else { Mat2::zeros() };
    let binv1 = -b0i * b1 * b0i;
    let x0 = xi.coeff(0);
    let xm = xi.coeff(-1);
    let u0 = b[0] * x0 * b0i + b1 * xm * b0i + b[0] * xm * binv1;
    -2.0 * u0[(0, 0)].im
}

/// max over interior nodes of |Δ_hω + ½ sinh 2ω| (five-point Laplacian).
pub fn sinh_gordon_residual(omega: &[f64], dom: &DomainGrid) -> f64 {
    let (hx, hy) = (dom.hx(), dom.hy());
    let w = |i: usize, j: usize| omega[dom.index(i, j)];
    let mut r: f64 = 0.0;
    for j in 1..dom.ny - 1 {
        for i in 1..dom.nx - 1 {
            let lap = (w(i + 1, j) - 2.0 * w(i, j) + w(i - 1, j)) / (hx * hx)
                + (w(i, j + 1) - 2.0 * w(i, j) + w(i, j - 1)) / (hy * hy);
            r = r.max((lap + 0.5 * (2.0 * w(i, j)).sinh()).abs());
        }
    }
    r
}

/// max along y = 0 of |ω_y − (Ae^ω + Be^{−ω})| with the one-sided stencil (−3ω₀ + 4ω₁ − ω₂)/2h.
pub fn boundary_residual(omega: &[f64], dom: &DomainGrid, k: &KMatrix) -> Result<f64> {
    boundary_residual_at(omega, dom, k, 0.0)
}

pub fn boundary_residual_at(omega: &[f64], dom: &DomainGrid, k: &KMatrix, y: f64) -> Result<f64> {
    let j0 = dom.row_of(y).ok_or(Error::MissingRow(y))?;
    if j0 + 2 >= dom.ny {
        return Err(Error::MissingRow(y));
    }
    let hy = dom.hy();
    let w = |i: usize, j: usize| omega[dom.index(i, j)];
    let mut r: f64 = 0.0;
    for i in 0..dom.nx {
        let dy = (-3.0 * w(i, j0) + 4.0 * w(i, j0 + 1) - w(i, j0 + 2)) / (2.0 * hy);
        let e = w(i, j0).exp();
        r = r.max((dy - (k.a * e + k.b / e)).abs());
    }
    Ok(r)
}

// ---------- U and the K-identity ----------

/// U_λ = (i/8)(−2ω_y, e^ωλ⁻¹ + e^{−ω}; e^{−ω} + e^ωλ, 2ω_y) in the displayed normalization.
pub fn u_matrix(omega: f64, omega_y: f64, lam: C64) -> Mat2 {
    let (e, ei) = (omega.exp(), (-omega).exp());
    mat2(c(-2.0 * omega_y, 0.0), lam.inv() * e + ei, lam * e + ei, c(2.0 * omega_y, 0.0)) * c(0.0, 0.125)
}

/// ‖K U_λ − U_{λ⁻¹} K − (i/2)(λ⁻¹ − λ)(ω_y − Ae^ω − Be^{−ω})·(0,−1;1,0)‖.
pub fn lemma_identity_residual(omega: f64, omega_y: f64, lam: C64, k: &KMatrix) -> Result<f64> {
    let kk = k.eval(lam)?;
    let lhs = kk * u_matrix(omega, omega_y, lam) - u_matrix(omega, omega_y, lam.inv()) * kk;
    let defect = omega_y - (k.a * omega.exp() + k.b * (-omega).exp());
    let j = mat2(c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
    let rhs = j * (c(0.0, 0.5) * (lam.inv() - lam) * defect);
    Ok(norm(&(lhs - rhs)))
}

// ---------- K-symmetry diagnostics ----------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSymReport {
    /// ‖KΦ_λ(z) − (Φ_λ̄(z̄)*)⁻¹K‖ over all z and λ.
    pub phi_sym: f64,
    /// ‖KF_λ − F_{λ⁻¹}K‖ on y = 0.
    pub frame_sym: f64,
    /// ‖KB_λ − (B_λ̄*)⁻¹K‖ on y = 0.
    pub b_sym: f64,
    /// ‖Kζ_λ + ζ_λ̄*K‖ on y = 0.
    pub zeta_sym: f64,
    /// ‖K∂_λF_λ − ∂_λ(F_{λ⁻¹})K‖ on y = 0.
    pub family_sym: f64,
    /// ‖(K∂_λF − ∂_λ(F_{λ⁻¹})K) − (F_{λ⁻¹}K′ − K′F)‖ on y = 0: the differentiated frame symmetry.
    pub diff_kf: f64,
    /// ‖Kf + f*K + 2iλH⁻¹(K∂_λF − ∂_λ(F_{λ⁻¹})K)F⁻¹‖ on y = 0 with H = 1, f* the pointwise adjoint.
    pub f_identity: f64,
    /// The same with f* replaced by f_{λ⁻¹}.
    pub f_identity_reflected: f64,
}

fn k_samples(k: &KMatrix, grid: &UnitCircleGrid) -> Vec<Mat2> {
    grid.points().iter().map(|&l| k.eval_unchecked(l)).collect()
}

/// max over a row of ‖KF_λ − F_{λ⁻¹}K‖.
pub fn frame_sym_row(frames: &FrameField, k: &KMatrix, row: usize) -> f64 {
    let ks = k_samples(k, &frames.grid);
    let g = frames.grid;
    (0..frames.dom.nx)
        .into_par_iter()
        .map(|i| {
            let fr = frames.frame(frames.dom.index(i, row));
            (0..g.n())
                .map(|j| norm(&(ks[j] * fr.values[j] - fr.at_inverse(j) * ks[j])))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

pub fn ksym_report(frames: &FrameField, k: &KMatrix) -> Result<KSymReport> {
    if ksym_residual(&frames.xi, k) > 1e-9 {
        return Err(Error::NotKSymmetric);
    }
    let g = frames.grid;
    let n = g.n();
    let dom = frames.dom;
    let ks = k_samples(k, &g);
    let pts = g.points();
    let xs = frames.xi_samples();
    let phi_sym = (0..dom.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = dom.coords(idx);
            let z = dom.z(i, j);
            (0..n)
                .map(|jj| {
                    let p = expm2(&(xs[jj] * z));
                    let q = expm2(&(xs[g.inverse_index(jj)] * z.conj()));
                    let qi = inv2(&q.adjoint()).unwrap_or_else(Mat2::zeros);
                    norm(&(ks[jj] * p - qi * ks[jj]))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let row = dom.zero_row()?;
    let kl = k.to_laurent();
    let kd: Vec<Mat2> = pts.iter().map(|&l| kl.eval_derivative(l)).collect();
    let per_point: Vec<[f64; 7]> = (0..dom.nx)
        .into_par_iter()
        .map(|i| {
            let idx = dom.index(i, row);
            let fr = frames.frame(idx);
            let b = frames.b(idx);
            let df = loop_derivative(&fr);
            let mut r = [0.0f64; 7];
            for jj in 0..n {
                let inv = g.inverse_index(jj);
                let l = pts[jj];
                let kk = ks[jj];
                let f = fr.values[jj];
                let fi = inv2(&f).unwrap_or_else(Mat2::zeros);
                r[0] = r[0].max(norm(&(kk * f - fr.values[inv] * kk)));
                let bq = inv2(&b.values[inv].adjoint()).unwrap_or_else(Mat2::zeros);
                r[1] = r[1].max(norm(&(kk * b.values[jj] - bq * kk)));
                let zeta = |m: usize| {
                    let fm = fr.values[m];
                    inv2(&fm).unwrap_or_else(Mat2::zeros) * xs[m] * fm
                };
                let zj = zeta(jj);
                let zb = zeta(inv);
                r[2] = r[2].max(norm(&(kk * zj + zb.adjoint() * kk)));
                // ∂_λ[F(λ⁻¹)] = −λ⁻² F′(λ⁻¹)
                let d_comp = df.values[inv] * (-(l * l).inv());
                let fam = kk * df.values[jj] - d_comp * kk;
                r[3] = r[3].max(norm(&fam));
                r[4] = r[4].max(norm(&(fam - (fr.values[inv] * kd[jj] - kd[jj] * f))));
                let sym = |m: usize| {
                    let fm = inv2(&fr.values[m]).unwrap_or_else(Mat2::zeros);
                    df.values[m] * fm * (c(0.0, -2.0) * pts[m])
                };
                let (fl, fr_inv) = (sym(jj), sym(inv));
                let rhs = fam * fi * (c(0.0, -2.0) * l);
                r[5] = r[5].max(norm(&(kk * fl + fl.adjoint() * kk - rhs)));
                r[6] = r[6].max(norm(&(kk * fl + fr_inv * kk - rhs)));
            }
            r
        })
        .collect();
    let mx = |k: usize| per_point.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(KSymReport {
        phi_sym,
        frame_sym: mx(0),
        b_sym: mx(1),
        zeta_sym: mx(2),
        family_sym: mx(3),
        diff_kf: mx(4),
        f_identity: mx(5),
        f_identity_reflected: mx(6),
    })
}

// ---------- two boundaries ----------

#[derive(Clone, Debug)]
pub struct DressingData {
    pub c: LoopSample,
    pub m: LoopSample,
    pub k0: KMatrix,
    pub k1: KMatrix,
    pub y1: f64,
    pub row: usize,
    pub snap: f64,
    /// Grid points left out near roots of K₀ or K₁.
    pub excluded: Vec<bool>,
    /// max over the row of ‖C(x) − C(x₀)‖.
    pub z_independence: f64,
    pub det_residual: f64,
    pub unitarity: f64,
}

fn excluded_points(grid: &UnitCircleGrid, ks: &[&KMatrix]) -> Vec<bool> {
    grid.points()
        .iter()
        .map(|&l| ks.iter().any(|k| k.roots().distance(l) < ROOT_EXCLUSION))
        .collect()
}

fn c_matrix(fr: &LoopSample, k1s: &[Mat2], j: usize) -> Mat2 {
    let k1 = k1s[j];
    let k1i = inv2(&k1).unwrap_or_else(Mat2::zeros);
    k1 * fr.values[j] * k1i * inv2(fr.at_inverse(j)).unwrap_or_else(Mat2::zeros)
}

/// K₁ = K(A₁, B₁) with A₁ solved from ω_y = A₁e^ω + B₁e^{−ω} at (x₀, y₁); ω and ω_y come from
/// B(0) and its λ-expansion, not from finite differences. Only meaningful when ω does not depend on x.
pub fn matched_second_boundary(frames: &FrameField, y1: f64, b1: f64) -> Result<KMatrix> {
    let (row, _) = frames.dom.snap_row(y1)?;
    let idx = frames.dom.index(0, row);
    check_normalized(&frames.xi)?;
    let rho = frames.b_coeffs[idx][0][(0, 0)].re;
    if rho <= 0.0 {
        return Err(Error::NormalizationViolated);
    }
    let w = (METRIC_CONSTANT * rho * rho * frames.xi.beta()[0].im).ln();
    let wy = omega_y_spectral(frames, idx);
    Ok(KMatrix::new((wy - b1 * (-w).exp()) / w.exp(), b1))
}

/// C_λ = K₁F_λK₁⁻¹F_{λ⁻¹}⁻¹ along y = y₁ and M = K₁⁻¹CK₀.
pub fn dressing_matrix(frames: &FrameField, k0: &KMatrix, k1: &KMatrix, y1: f64) -> Result<DressingData> {
    let dom = frames.dom;
    let (row, snap) = dom.snap_row(y1)?;
    let g = frames.grid;
    let k1s = k_samples(k1, &g);
    let k0s = k_samples(k0, &g);
    let excluded = excluded_points(&g, &[k0, k1]);
    let cs: Vec<LoopSample> = (0..dom.nx)
        .into_par_iter()
        .map(|i| {
            let fr = frames.frame(dom.index(i, row));
            LoopSample { grid: g, values: (0..g.n()).map(|j| c_matrix(&fr, &k1s, j)).collect() }
        })
        .collect();
    let base = cs[0].clone();
    let mut z_independence: f64 = 0.0;
    for s in &cs[1..] {
        for j in 0..g.n() {
            if !excluded[j] {
                z_independence = z_independence.max(norm(&(s.values[j] - base.values[j])));
            }
        }
    }
    let mut det_residual: f64 = 0.0;
    let mut unitarity: f64 = 0.0;
    let mut m = Vec::with_capacity(g.n());
    for j in 0..g.n() {
        let cj = base.values[j];
        let k1i = inv2(&k1s[j]).unwrap_or_else(Mat2::zeros);
        m.push(k1i * cj * k0s[j]);
        if !excluded[j] {
            det_residual = det_residual.max((det2(&cj) - 1.0).norm());
            unitarity = unitarity.max(norm(&(cj.adjoint() * cj - identity())));
        }
    }
    Ok(DressingData {
        c: base,
        m: LoopSample { grid: g, values: m },
        k0: *k0,
        k1: *k1,
        y1,
        row,
        snap,
        excluded,
        z_independence,
        det_residual,
        unitarity,
    })
}

/// Dressing data from a prescribed M (used for synthetic commuting cases): C = K₁MK₀⁻¹.
pub fn dressing_from_m(m: LoopSample, k0: &KMatrix, k1: &KMatrix) -> DressingData {
    let g = m.grid;
    let excluded = excluded_points(&g, &[k0, k1]);
    let values = g
        .points()
        .iter()
        .zip(&m.values)
        .map(|(&l, mm)| k1.eval_unchecked(l) * mm * inv2(&k0.eval_unchecked(l)).unwrap_or_else(Mat2::zeros))
        .collect();
    let cc = LoopSample { grid: g, values };
    let mut det_residual: f64 = 0.0;
    let mut unitarity: f64 = 0.0;
    for (j, v) in cc.values.iter().enumerate() {
        if !excluded[j] {
            det_residual = det_residual.max((det2(v) - 1.0).norm());
            unitarity = unitarity.max(norm(&(v.adjoint() * v - identity())));
        }
    }
    DressingData {
        c: cc,
        m,
        k0: *k0,
        k1: *k1,
        y1: f64::NAN,
        row: 0,
        snap: 0.0,
        excluded,
        z_independence: 0.0,
        det_residual,
        unitarity,
    }
}

/// μ⁰₋/μ¹₋ and μ⁰₊/μ¹₊ at λ.
pub fn eigen_ratios(k0: &KMatrix, k1: &KMatrix, lam: C64) -> (C64, C64) {
    let (e0, e1) = (k0.eigen(), k1.eigen());
    (e0.mu_minus.eval(lam) / e1.mu_minus.eval(lam), e0.mu_plus.eval(lam) / e1.mu_plus.eval(lam))
}

/// f, g with f − gν = μ⁰₋/μ¹₋ and f + gν = μ⁰₊/μ¹₊ for a given ν.
pub fn fg_from_eigenvalues(k0: &KMatrix, k1: &KMatrix, lam: C64, nu: C64) -> (C64, C64) {
    let (rm, rp) = eigen_ratios(k0, k1, lam);
    ((rm + rp) * 0.5, (rp - rm) / (nu * 2.0))
}

#[derive(Clone, Debug)]
pub struct Commutant {
    /// Linear route M = f𝟙 + gξ.
    pub f: Vec<C64>,
    pub g: Vec<C64>,
    /// Eigenvalue route.
    pub f_eig: Vec<C64>,
    pub g_eig: Vec<C64>,
    /// Sheet of ν = ±√(−det ξ) used by the eigenvalue route (true = principal).
    pub principal: Vec<bool>,
    pub commutator: f64,
    pub reconstruction: f64,
    pub agreement: f64,
}

pub fn commutator_residual(dd: &DressingData, xi: &Potential) -> f64 {
    let g = dd.m.grid;
    g.points()
        .iter()
        .enumerate()
        .filter(|(j, _)| !dd.excluded[*j])
        .map(|(j, &l)| {
            let x = xi.eval(l);
            let m = dd.m.values[j];
            norm(&(m * x - x * m))
        })
        .fold(0.0, f64::max)
}

/// Splits M = f𝟙 + gξ two ways and cross-checks them.
pub fn commutant_decompose(dd: &DressingData, xi: &Potential) -> Result<Commutant> {
    let commutator = commutator_residual(dd, xi);
    if commutator > 1e-6 {
        return Err(Error::NotCommuting);
    }
    let g = dd.m.grid;
    let n = g.n();
    let (mut fs, mut gs, mut fe, mut ge, mut pr) = (vec![], vec![], vec![], vec![], vec![]);
    let (mut reconstruction, mut agreement): (f64, f64) = (0.0, 0.0);
    for (j, &l) in g.points().iter().enumerate() {
        let x = xi.eval(l);
        let m = dd.m.values[j];
        // least squares in the Frobenius product; 𝟙 ⟂ ξ since tr ξ = 0
        let f = m.trace() / 2.0;
        let xx = x.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let gg = if xx > 0.0 { x.iter().zip(m.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() / xx } else { c(0.0, 0.0) };
        let nu = (-det2(&x)).sqrt();
        let (f1, g1) = fg_from_eigenvalues(&dd.k0, &dd.k1, l, nu);
        let (f2, g2) = (f1, -g1);
        let e1 = (f1 - f).norm() + (g1 - gg).norm();
        let e2 = (f2 - f).norm() + (g2 - gg).norm();
        let principal = e1 <= e2;
        let (fb, gb) = if principal { (f1, g1) } else { (f2, g2) };
        if !dd.excluded[j] {
            reconstruction = reconstruction.max(norm(&(m - identity() * f - x * gg)));
            agreement = agreement.max(e1.min(e2));
        }
        fs.push(f);
        gs.push(gg);
        fe.push(fb);
        ge.push(gb);
        pr.push(principal);
    }
    debug_assert_eq!(fs.len(), n);
    Ok(Commutant { f: fs, g: gs, f_eig: fe, g_eig: ge, principal: pr, commutator, reconstruction, agreement })
}

/// C = K₁K₀⁻¹(f𝟙 − g·ξ_λ̄*) and its distance to the stored C away from K₀, K₁ roots.
pub fn dressing_reconstruct(dd: &DressingData, xi: &Potential, cm: &Commutant) -> (LoopSample, f64) {
    let g = dd.c.grid;
    let mut err: f64 = 0.0;
    let values: Vec<Mat2> = g
        .points()
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let xs = xi.eval(l.conj()).adjoint();
            let k0i = inv2(&dd.k0.eval_unchecked(l)).unwrap_or_else(Mat2::zeros);
            let v = dd.k1.eval_unchecked(l) * k0i * (identity() * cm.f[j] - xs * cm.g[j]);
            if !dd.excluded[j] {
                err = err.max(norm(&(v - dd.c.values[j])));
            }
            v
        })
        .collect();
    (LoopSample { grid: g, values }, err)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBoundaryReport {
    /// ‖K₀ζ + ζ*K₀‖ on y = 0.
    pub first_zeta: f64,
    /// ‖C⁻¹K₁ξ + ξ*C⁻¹K₁‖ on y = y₁ (pointwise C).
    pub dressed_potential: f64,
    /// ‖K₁ζ + ζ*K₁‖ on y = y₁.
    pub second_zeta: f64,
    /// ‖K₁Φ_λ(z) − CΦ_λ̄(z̄)*⁻¹C⁻¹K₁‖ on y = y₁.
    pub dressed_phi: f64,
    /// ‖K₁B_λ − B_λ̄*⁻¹C⁻¹K₁‖ on y = y₁.
    pub dressed_b: f64,
    /// ‖(K₁ζ + ζ*K₁) − F_{λ⁻¹}⁻¹K₀[K₀⁻¹C⁻¹K₁, ξ]F_λ‖ on y = y₁.
    pub k1pkf2: f64,
    pub z_independence: f64,
    /// dressed_potential and second_zeta within a factor 10 of each other (or both below 1e−7).
    pub equivalent: bool,
}

pub fn two_boundary_report(frames: &FrameField, k0: &KMatrix, k1: &KMatrix, y1: f64) -> Result<TwoBoundaryReport> {
    let dom = frames.dom;
    let g = frames.grid;
    let n = g.n();
    let (row, _) = dom.snap_row(y1)?;
    let row0 = dom.zero_row()?;
    let excluded = excluded_points(&g, &[k0, k1]);
    let k0s = k_samples(k0, &g);
    let k1s = k_samples(k1, &g);
    let xs: Vec<Mat2> = frames.xi_samples().to_vec();
    let zeta = |fr: &LoopSample, m: usize| {
        let f = fr.values[m];
        inv2(&f).unwrap_or_else(Mat2::zeros) * xs[m] * f
    };
    let first_zeta = (0..dom.nx)
        .into_par_iter()
        .map(|i| {
            let fr = frames.frame(dom.index(i, row0));
            (0..n)
                .map(|j| {
                    let (a, b) = (zeta(&fr, j), zeta(&fr, g.inverse_index(j)));
                    norm(&(k0s[j] * a + b.adjoint() * k0s[j]))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let dd = dressing_matrix(frames, k0, k1, y1)?;
    let per: Vec<[f64; 5]> = (0..dom.nx)
        .into_par_iter()
        .map(|i| {
            let idx = dom.index(i, row);
            let fr = frames.frame(idx);
            let b = frames.b(idx);
            let z = dom.z(i, row);
            let mut r = [0.0f64; 5];
            for j in 0..n {
                if excluded[j] {
                    continue;
                }
                let inv = g.inverse_index(j);
                let cj = c_matrix(&fr, &k1s, j);
                let ci = inv2(&cj).unwrap_or_else(Mat2::zeros);
                let xstar = xs[inv].adjoint();
                let dp = ci * k1s[j] * xs[j] + xstar * ci * k1s[j];
                r[0] = r[0].max(norm(&dp));
                let (a, bz) = (zeta(&fr, j), zeta(&fr, inv));
                let sz = k1s[j] * a + bz.adjoint() * k1s[j];
                r[1] = r[1].max(norm(&sz));
                let p = expm2(&(xs[j] * z));
                let q = inv2(&expm2(&(xs[inv] * z.conj())).adjoint()).unwrap_or_else(Mat2::zeros);
                r[2] = r[2].max(norm(&(k1s[j] * p - cj * q * ci * k1s[j])));
                let bq = inv2(&b.values[inv].adjoint()).unwrap_or_else(Mat2::zeros);
                r[3] = r[3].max(norm(&(k1s[j] * b.values[j] - bq * ci * k1s[j])));
                let k0i = inv2(&k0s[j]).unwrap_or_else(Mat2::zeros);
                let w = k0i * ci * k1s[j];
                let comm = w * xs[j] - xs[j] * w;
                let fii = inv2(fr.at_inverse(j)).unwrap_or_else(Mat2::zeros);
                r[4] = r[4].max(norm(&(sz - fii * k0s[j] * comm * fr.values[j])));
            }
            r
        })
        .collect();
    let mx = |k: usize| per.iter().map(|r| r[k]).fold(0.0, f64::max);
    let (dressed_potential, second_zeta) = (mx(0), mx(1));
    let equivalent = (dressed_potential <= 1e-7 && second_zeta <= 1e-7)
        || (dressed_potential <= 10.0 * second_zeta && second_zeta <= 10.0 * dressed_potential);
    Ok(TwoBoundaryReport {
        first_zeta,
        dressed_potential,
        second_zeta,
        dressed_phi: mx(2),
        dressed_b: mx(3),
        k1pkf2: mx(4),
        z_independence: dd.z_independence,
        equivalent,
    })
}

// ---------- synthetic commuting cases ----------

/// M = f𝟙 + gξ from the eigenvalue-ratio formulas with the principal ν, sampled on the grid.
pub fn synthetic_commuting(xi: &Potential, k0: &KMatrix, k1: &KMatrix, grid: UnitCircleGrid) -> DressingData {
    let m = LoopSample::from_fn(grid, |l| {
        let x = xi.eval(l);
        let nu = (-det2(&x)).sqrt();
        let (f, g) = fg_from_eigenvalues(k0, k1, l, nu);
        identity() * f + x * g
    });
    dressing_from_m(m, k0, k1)
}

/// K₁ = K(−A₀, −B₀).
pub fn complementary(k0: &KMatrix) -> KMatrix {
    KMatrix::new(-k0.a, -k0.b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementaryCheck {
    /// max |(f − gν)(f + gν) − 1|.
    pub product: f64,
    /// max |det M − 1|.
    pub det_m: f64,
    /// max |f − (−½)(μ₋/μ₊ + μ₊/μ₋)|.
    pub f_formula: f64,
    /// max |f(λ⁻¹) − f(λ)| on paired grid points.
    pub f_inversion: f64,
}

pub fn complementary_check(dd: &DressingData, xi: &Potential, cm: &Commutant) -> ComplementaryCheck {
    let g = dd.m.grid;
    let e0 = dd.k0.eigen();
    let mut out = ComplementaryCheck { product: 0.0, det_m: 0.0, f_formula: 0.0, f_inversion: 0.0 };
    for (j, &l) in g.points().iter().enumerate() {
        if dd.excluded[j] || dd.excluded[g.inverse_index(j)] {
            continue;
        }
        let x = xi.eval(l);
        let nu = (-det2(&x)).sqrt();
        let (f, gg) = (cm.f[j], cm.g[j]);
        out.product = out.product.max(((f - gg * nu) * (f + gg * nu) - 1.0).norm());
        out.det_m = out.det_m.max((det2(&dd.m.values[j]) - 1.0).norm());
        let (mm, mp) = (e0.mu_minus.eval(l), e0.mu_plus.eval(l));
        out.f_formula = out.f_formula.max((f + (mm / mp + mp / mm) * 0.5).norm());
        out.f_inversion = out.f_inversion.max((cm.f[g.inverse_index(j)] - f).norm());
    }
    out
}

fn newton_root(h: impl Fn(C64) -> C64, start: C64) -> Option<C64> {
    let mut x = start;
    for _ in 0..60 {
        let step = 1e-7 * (1.0 + x.norm());
        let dh = (h(x + step) - h(x - step)) / (2.0 * step);
        if dh.norm() == 0.0 || !dh.is_finite() {
            return None;
        }
        let dx = h(x) / dh;
        x -= dx;
        if dx.norm() < 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorCheck {
    pub zeros: Vec<[f64; 2]>,
    pub poles: Vec<[f64; 2]>,
    /// Largest distance of a located zero of f − gν to {ϱ₀, r₀} and pole to {ϱ₁, r₁}.
    pub distance: f64,
}

/// Locates zeros and poles of f − gν = μ⁰₋/μ¹₋ by Newton iteration started near the K roots,
/// and compares with the root quadruples of K₀ and K₁.
pub fn divisor_check(k0: &KMatrix, k1: &KMatrix) -> DivisorCheck {
    let (e0, e1) = (k0.eigen(), k1.eigen());
    let h = |l: C64| e0.mu_minus.eval(l) / e1.mu_minus.eval(l);
    let hinv = |l: C64| e1.mu_minus.eval(l) / e0.mu_minus.eval(l);
    let (r0, r1) = (k0.roots(), k1.roots());
    let kick = c(1e-3, 7e-4);
    let mut distance: f64 = 0.0;
    let mut zeros = vec![];
    let mut poles = vec![];
    for t in [r0.varrho, r0.r] {
        let z = newton_root(h, t + kick).unwrap_or(c(f64::NAN, f64::NAN));
        distance = distance.max(((z - r0.varrho).norm()).min((z - r0.r).norm()));
        zeros.push([z.re, z.im]);
    }
    for t in [r1.varrho, r1.r] {
        let z = newton_root(hinv, t + kick).unwrap_or(c(f64::NAN, f64::NAN));
        distance = distance.max(((z - r1.varrho).norm()).min((z - r1.r).norm()));
        poles.push([z.re, z.im]);
    }
    if distance.is_nan() {
        distance = f64::INFINITY;
    }
    DivisorCheck { zeros, poles, distance }
}
