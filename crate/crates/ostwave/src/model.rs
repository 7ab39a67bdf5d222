//! Model families, pointwise nonlinearities, and converged wave profiles.

use crate::error::{OstError, Result};
use crate::grid::{inner, norm_l2, Field, Grid};
use serde::{Deserialize, Serialize};

/// The two power-nonlinearity families. AbsPower uses N(u) = |u|^p with
/// admissible p in (1, 3); SignedPower uses N(u) = |u|^(p-1) u with p in
/// (1, 5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    AbsPower,
    SignedPower,
}

impl ModelFamily {
    pub fn admissible(&self) -> (f64, f64) {
        match self {
            ModelFamily::AbsPower => (1.0, 3.0),
            ModelFamily::SignedPower => (1.0, 5.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::AbsPower => "abs",
            ModelFamily::SignedPower => "signed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "abs" | "abs_power" | "AbsPower" => Ok(ModelFamily::AbsPower),
            "signed" | "signed_power" | "SignedPower" => Ok(ModelFamily::SignedPower),
            other => Err(OstError::OutOfRange(format!(
                "unknown family '{other}' (expected 'abs' or 'signed')"
            ))),
        }
    }
}

/// A validated (family, p) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub family: ModelFamily,
    pub p: f64,
}

impl Model {
    pub fn new(family: ModelFamily, p: f64) -> Result<Self> {
        let (lo, hi) = family.admissible();
        if !(p > lo && p < hi) {
            return Err(OstError::OutOfRange(format!(
                "p = {p} outside the admissible range {lo} < p < {hi} for the {} family",
                family.name()
            )));
        }
        Ok(Model { family, p })
    }

    /// N(u), the nonlinearity in the profile equation
    /// phi'' + dx^-2 phi + omega phi + N(phi) = 0.
    pub fn nonlin(&self, u: f64) -> f64 {
        match self.family {
            ModelFamily::AbsPower => u.abs().powf(self.p),
            ModelFamily::SignedPower => u.abs().powf(self.p - 1.0) * u,
        }
    }

    /// N'(u), the linearization potential.
    pub fn potential(&self, u: f64) -> f64 {
        match self.family {
            ModelFamily::AbsPower => self.p * u.signum() * u.abs().powf(self.p - 1.0),
            ModelFamily::SignedPower => self.p * u.abs().powf(self.p - 1.0),
        }
    }

    /// Integrand of the nonlinear energy term; the energy carries a
    /// 1/(p+1) factor outside. Equals N(u) * u pointwise for both families.
    pub fn energy_integrand(&self, u: f64) -> f64 {
        match self.family {
            ModelFamily::AbsPower => u.abs().powf(self.p) * u,
            ModelFamily::SignedPower => u.abs().powf(self.p + 1.0),
        }
    }

    pub fn nonlin_field(&self, u: &Field) -> Field {
        crate::grid::map_values(u, |v| self.nonlin(v))
    }

    pub fn potential_field(&self, u: &Field) -> Field {
        crate::grid::map_values(u, |v| self.potential(v))
    }

    pub fn energy_integrand_field(&self, u: &Field) -> Field {
        crate::grid::map_values(u, |v| self.energy_integrand(v))
    }
}

/// A converged constrained minimizer bundled with its certificate metadata.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub model: Model,
    pub lambda: f64,
    pub omega: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub phi: Field,
}

impl WaveProfile {
    /// Validates the constraint |norm^2 - lambda| <= 1e-10 lambda, finiteness,
    /// and mean-freeness. The multiplier bound omega < 2 is a *claim checked
    /// by diagnostics*, not a constructor invariant: near-threshold cells
    /// legitimately converge to discrete states with omega >= 2 and must be
    /// representable to be reported.
    pub fn new(
        model: Model,
        lambda: f64,
        omega: f64,
        el_residual: f64,
        iterations: usize,
        phi: Field,
    ) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(OstError::OutOfRange(format!("lambda = {lambda} must be positive")));
        }
        let nn = inner(&phi, &phi)?;
        if (nn - lambda).abs() > 1e-10 * lambda {
            return Err(OstError::OutOfRange(format!(
                "constraint defect |phi_norm^2 - lambda| = {:.3e} exceeds 1e-10 lambda",
                (nn - lambda).abs()
            )));
        }
        let m = phi.mean().abs();
        if m > 1e-10 * phi.max_abs().max(1e-300) {
            return Err(OstError::NonZeroMean(m));
        }
        if !omega.is_finite() || !el_residual.is_finite() {
            return Err(OstError::Diverged("non-finite profile metadata".into()));
        }
        Ok(WaveProfile {
            model,
            lambda,
            omega,
            el_residual,
            iterations,
            phi,
        })
    }

    pub fn grid(&self) -> Grid {
        self.phi.grid
    }

    pub fn norm(&self) -> f64 {
        norm_l2(&self.phi)
    }
}
