//! Real FFT plumbing shared by every module.
//!
//! All spectra use the half-complex layout of length n/2 + 1; bin k carries
//! the frequency xi_k = pi k / L on the box [-L, L). Plans are cached per
//! thread keyed by n.

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

struct Plans {
    planner: RealFftPlanner<f64>,
    fwd: HashMap<usize, Arc<dyn RealToComplex<f64>>>,
    inv: HashMap<usize, Arc<dyn ComplexToReal<f64>>>,
}

thread_local! {
    static PLANS: RefCell<Plans> = RefCell::new(Plans {
        planner: RealFftPlanner::new(),
        fwd: HashMap::new(),
        inv: HashMap::new(),
    });
}

/// Forward real FFT; unnormalized (matches the usual DFT sum).
pub fn rfft(u: &[f64]) -> Vec<Complex64> {
    let n = u.len();
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let plan = match p.fwd.get(&n) {
            Some(plan) => plan.clone(),
            None => {
                let plan = p.planner.plan_fft_forward(n);
                p.fwd.insert(n, plan.clone());
                plan
            }
        };
        let mut input = u.to_vec();
        let mut out = plan.make_output_vec();
        plan.process(&mut input, &mut out)
            .expect("forward FFT on matched buffer lengths");
        out
    })
}

/// Inverse real FFT with 1/n normalization, so irfft(rfft(u)) == u.
///
/// The half-complex buffer is taken by value because bins 0 and n/2 are
/// forced real first (realfft requires it; every operator here preserves
/// Hermitian symmetry anyway, this only clears rounding dust).
pub fn irfft(mut spec: Vec<Complex64>, n: usize) -> Vec<f64> {
    assert_eq!(spec.len(), n / 2 + 1, "half-complex length mismatch");
    spec[0].im = 0.0;
    let nyq = n / 2;
    spec[nyq].im = 0.0;
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let plan = match p.inv.get(&n) {
            Some(plan) => plan.clone(),
            None => {
                let plan = p.planner.plan_fft_inverse(n);
                p.inv.insert(n, plan.clone());
                plan
            }
        };
        let mut out = plan.make_output_vec();
        plan.process(&mut spec, &mut out)
            .expect("inverse FFT on matched buffer lengths");
        let scale = 1.0 / n as f64;
        for v in &mut out {
            *v *= scale;
        }
        out
    })
}
