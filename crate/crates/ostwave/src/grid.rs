//! Periodic spectral calculus: grids, mean-free fields, signed-order
//! derivatives, the biquadratic resolvent, and the closed-form decay rate.

use crate::error::{OstError, Result};
use crate::fft::{irfft, rfft};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Periodic domain [-L, L) with n equispaced collocation nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(OstError::NonPositiveLength(half_length));
        }
        if n < 64 || !n.is_power_of_two() {
            return Err(OstError::NonPowerOfTwo(n));
        }
        Ok(Grid { half_length, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Collocation node x_j = -L + j dx.
    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + self.spacing() * j as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Wavenumber of half-complex bin k in [0, n/2]: xi_k = pi k / L.
    pub fn xi(&self, k: usize) -> f64 {
        PI * k as f64 / self.half_length
    }

    /// Index of the Nyquist bin in the half-complex layout.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.half_length == other.half_length && self.n == other.n
    }
}

/// Real-valued function sampled on a grid. `mean_free` asserts the xi = 0
/// coefficient vanishes, which gates antiderivatives (the discrete Hdot^-1
/// membership condition).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub mean_free: bool,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(OstError::GridMismatch(
                grid.half_length,
                grid.n,
                grid.half_length,
                values.len(),
            ));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(OstError::Diverged("non-finite field values".into()));
        }
        let mean_free = mean_abs(&values) <= 1e-12 * max_abs(&values).max(1e-300);
        Ok(Field {
            grid,
            values,
            mean_free,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.n],
            mean_free: true,
        }
    }

    /// Sample a closure on the nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n).map(|j| f(grid.node(j))).collect();
        Field::new(grid, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.n as f64
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        rfft(&self.values)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(OstError::GridMismatch(
                self.grid.half_length,
                self.grid.n,
                other.grid.half_length,
                other.grid.n,
            ));
        }
        Ok(())
    }
}

fn mean_abs(v: &[f64]) -> f64 {
    (v.iter().sum::<f64>() / v.len() as f64).abs()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

fn field_from_spectrum(grid: Grid, spec: Vec<Complex64>) -> Field {
    let values = irfft(spec, grid.n);
    let mean_free = mean_abs(&values) <= 1e-12 * max_abs(&values).max(1e-300);
    Field {
        grid,
        values,
        mean_free,
    }
}

/// Zero the xi = 0 coefficient; all other coefficients unchanged.
pub fn project_zero_mean(f: &Field) -> Field {
    let m = f.mean();
    let values: Vec<f64> = f.values.iter().map(|v| v - m).collect();
    Field {
        grid: f.grid,
        values,
        mean_free: true,
    }
}

/// Zero the mean and Nyquist bins: the subspace on which the rectangle-rule
/// quadrature of products is exact. Pure-Nyquist sawtooth content has zero
/// discrete quadratic energy but negative nonlinear energy, so minimizers
/// must be confined here.
pub fn project_solver_subspace(f: &Field) -> Field {
    let mut spec = f.spectrum();
    spec[0] = Complex64::new(0.0, 0.0);
    let nyq = f.grid.nyquist();
    spec[nyq] = Complex64::new(0.0, 0.0);
    field_from_spectrum(f.grid, spec)
}

/// Spectral derivative of signed order: multiplication by (i xi)^order.
/// Negative orders require a mean-free field; the zero mode maps to zero.
/// The Nyquist bin is zeroed for every nonzero order (it has no
/// well-defined signed derivative).
pub fn deriv(f: &Field, order: i32) -> Result<Field> {
    if order == 0 {
        return Ok(f.clone());
    }
    if order < 0 {
        let m = f.mean().abs();
        if m > 1e-12 * f.max_abs().max(1e-300) {
            return Err(OstError::NonZeroMean(m));
        }
    }
    let mut spec = f.spectrum();
    let nyq = f.grid.nyquist();
    spec[0] = Complex64::new(0.0, 0.0);
    spec[nyq] = Complex64::new(0.0, 0.0);
    for k in 1..nyq {
        let ix = Complex64::new(0.0, f.grid.xi(k));
        spec[k] *= ix.powi(order);
    }
    Ok(field_from_spectrum(f.grid, spec))
}

/// Apply the resolvent of the biquadratic symbol: division by
/// xi^4 - omega xi^2 + 1, positive for every real xi when omega < 2.
pub fn resolvent_biquadratic(f: &Field, omega: f64) -> Result<Field> {
    if !(omega < 2.0) {
        return Err(OstError::OmegaOutOfRange(omega));
    }
    let mut spec = f.spectrum();
    for (k, c) in spec.iter_mut().enumerate() {
        let xi2 = f.grid.xi(k).powi(2);
        *c /= xi2 * xi2 - omega * xi2 + 1.0;
    }
    Ok(field_from_spectrum(f.grid, spec))
}

/// Closed-form exponential decay rate of the wave tails, piecewise in omega
/// with a branch change at omega = -2 (continuous there, value 1).
pub fn decay_rate_kappa(omega: f64) -> Result<f64> {
    if !(omega < 2.0) {
        return Err(OstError::OmegaOutOfRange(omega));
    }
    if omega >= -2.0 {
        Ok(((2.0 - omega) / 4.0).sqrt())
    } else {
        Ok(((-omega - (omega * omega - 4.0).sqrt()) / 2.0).sqrt())
    }
}

/// Tail oscillation frequency for omega in (-2, 2).
pub fn tail_oscillation_beta(omega: f64) -> f64 {
    ((2.0 + omega).max(0.0) / 4.0).sqrt()
}

/// Rectangle-rule inner product, exact for trigonometric polynomials below
/// the Nyquist mode.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    let dot: f64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b)
        .sum();
    Ok(f.grid.spacing() * dot)
}

pub fn norm_l2(f: &Field) -> f64 {
    let dot: f64 = f.values.iter().map(|a| a * a).sum();
    (f.grid.spacing() * dot).sqrt()
}

/// Homogeneous Sobolev norm: multiplier |xi|^(2s) on the spectrum, zero mode
/// excluded (for s < 0 it must vanish; enforced via the mean-free gate).
pub fn norm_sobolev(f: &Field, s: f64) -> Result<f64> {
    if s < 0.0 {
        let m = f.mean().abs();
        if m > 1e-12 * f.max_abs().max(1e-300) {
            return Err(OstError::NonZeroMean(m));
        }
    }
    let spec = f.spectrum();
    let n = f.grid.n as f64;
    let w = 2.0 * f.grid.half_length / (n * n);
    let nyq = f.grid.nyquist();
    let mut acc = 0.0;
    for (k, c) in spec.iter().enumerate() {
        let mult = if k == 0 {
            if s == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            f.grid.xi(k).powf(2.0 * s)
        };
        let pair = if k == 0 || k == nyq { 1.0 } else { 2.0 };
        acc += mult * pair * c.norm_sqr();
    }
    Ok((w * acc).sqrt())
}

/// Pointwise-map helper used by the nonlinearity evaluations.
pub fn map_values(f: &Field, op: impl Fn(f64) -> f64) -> Field {
    let values: Vec<f64> = f.values.iter().map(|&v| op(v)).collect();
    let mean_free = mean_abs(&values) <= 1e-12 * max_abs(&values).max(1e-300);
    Field {
        grid: f.grid,
        values,
        mean_free,
    }
}

/// a*f + b*g on a shared grid.
pub fn lin_comb(a: f64, f: &Field, b: f64, g: &Field) -> Result<Field> {
    f.check_same_grid(g)?;
    let values: Vec<f64> = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(x, y)| a * x + b * y)
        .collect();
    Field::new(f.grid, values)
}

/// Circularly shift a field by an integer number of nodes (positive = toward
/// larger x).
pub fn roll(f: &Field, shift: isize) -> Field {
    let n = f.grid.n as isize;
    let s = ((shift % n) + n) % n;
    let mut values = vec![0.0; f.grid.n];
    for j in 0..f.grid.n {
        values[(j + s as usize) % f.grid.n] = f.values[j];
    }
    Field {
        grid: f.grid,
        values,
        mean_free: f.mean_free,
    }
}

/// Even part about x = 0 (node n/2): the solver pins this symmetry.
pub fn symmetrize_even(f: &Field) -> Field {
    let n = f.grid.n;
    let mut values = vec![0.0; n];
    values[0] = f.values[0];
    for j in 1..n {
        values[j] = 0.5 * (f.values[j] + f.values[n - j]);
    }
    Field {
        grid: f.grid,
        values,
        mean_free: f.mean_free,
    }
}
