//! Spectral toolkit for normalized ground-state traveling waves of
//! generalized Ostrovsky equations.
//!
//! Profiles are computed by constrained energy minimization on a periodic
//! grid (preconditioned projected descent plus a constrained Newton polish),
//! then certified: Euler-Lagrange residuals in two discretizations, integral
//! identities, exponential tail rates against the closed-form decay law,
//! Morse index and kernel structure of the linearized operator, the slope
//! (Vakhitov-Kolokolov) quantity, the full advected linearization spectrum,
//! and direct time evolution with exponential integrators.

pub mod diag;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod functionals;
pub mod grid;
pub mod io;
mod lapack;
pub mod model;
pub mod solver;
pub mod stability;

pub use error::{OstError, Result};
