//! Uniform unit-circle grids, loop samples and discrete Fourier analysis.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{c, norm, LaurentMatrix, Mat2, C64};

/// Grid λ_j = exp(2πij/n), n a power of two, n ≥ 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCircleGrid {
    n: usize,
}

impl UnitCircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n={n} must be a power of two ≥ 4")));
        }
        Ok(UnitCircleGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// λ_j; quarter points are exact.
    pub fn point(&self, j: usize) -> C64 {
        let j = j % self.n;
        let n = self.n;
        if j == 0 {
            c(1.0, 0.0)
        } else if 4 * j == n {
            c(0.0, 1.0)
        } else if 2 * j == n {
            c(-1.0, 0.0)
        } else if 4 * j == 3 * n {
            c(0.0, -1.0)
        } else {
            C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)
        }
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Index of λ_j⁻¹, which is also the index of conj(λ_j).
    pub fn inverse_index(&self, j: usize) -> usize {
        (self.n - j % self.n) % self.n
    }
}

/// Matrix-valued loop sampled on a unit-circle grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSample {
    pub grid: UnitCircleGrid,
    pub values: Vec<Mat2>,
}

impl LoopSample {
    pub fn new(grid: UnitCircleGrid, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of size {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(LoopSample { grid, values })
    }

    pub fn from_fn(grid: UnitCircleGrid, f: impl Fn(C64) -> Mat2) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        LoopSample { grid, values }
    }

    /// Value at λ_j⁻¹ = conj(λ_j).
    pub fn at_inverse(&self, j: usize) -> &Mat2 {
        &self.values[self.grid.inverse_index(j)]
    }

    pub fn map(&self, f: impl Fn(&Mat2) -> Mat2) -> Self {
        LoopSample { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    pub fn max_dist(&self, other: &LoopSample) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| norm(&(a - b)))
            .fold(0.0, f64::max)
    }
}

pub fn circle_sample(x: &LaurentMatrix, grid: UnitCircleGrid) -> LoopSample {
    LoopSample::from_fn(grid, |lam| x.eval(lam))
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

/// All n discrete Fourier coefficients; entry k holds the coefficient of λ^k (k mod n).
pub fn dft_all(s: &LoopSample) -> Vec<Mat2> {
    let n = s.grid.n();
    let fft = forward_plan(n);
    let mut out = vec![Mat2::zeros(); n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for (i, jj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        for (b, v) in buf.iter_mut().zip(&s.values) {
            *b = v[(i, jj)];
        }
        fft.process(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            o[(i, jj)] = b * scale;
        }
    }
    out
}

/// Fourier coefficients on `band`. Returns the coefficients unnormalized so that
/// exponents are exactly the band.
pub fn fourier_coefficients(s: &LoopSample, band: RangeInclusive<i32>) -> Result<LaurentMatrix> {
    let n = s.grid.n() as i32;
    let (lo, hi) = (*band.start(), *band.end());
    if lo > hi {
        return Ok(LaurentMatrix::zero());
    }
    if lo < -n / 2 || hi > n / 2 || hi - lo + 1 > n {
        return Err(Error::BandTooWide);
    }
    let all = dft_all(s);
    let blocks = (lo..=hi).map(|k| all[k.rem_euclid(n) as usize]).collect();
    Ok(LaurentMatrix::raw(lo, blocks))
}
