//! Stability-layer tests: operator assembly, spectra, kernel structure, the
//! slope quantity, and the verdict logic.

use ostwave::error::OstError;
use ostwave::grid::{norm_l2, project_zero_mean, roll, Field, Grid};
use ostwave::model::{Model, ModelFamily};
use ostwave::solver::{minimize, SolverOptions};
use ostwave::stability::{
    assemble_about, assemble_operator, classify, full_linearization_spectrum, operator_action,
    stability_report, symmetric_spectrum, vk_quantity, weak_nondegeneracy, StabilityOptions,
    SymmetricSpectrum, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn quadratic_cell() -> ostwave::model::WaveProfile {
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let grid = Grid::new(51.0, 512).unwrap();
    minimize(grid, &model, 1.0, &SolverOptions::default()).unwrap().0
}

#[test]
fn assembled_operator_is_symmetric() {
    let profile = quadratic_cell();
    let op = assemble_about(&profile).unwrap();
    assert!(op.symmetry_defect() <= 1e-10, "defect {:.3e}", op.symmetry_defect());
}

#[test]
fn dense_assembly_matches_spectral_action() {
    let profile = quadratic_cell();
    let grid = profile.grid();
    let op = assemble_about(&profile).unwrap();
    let pot = profile.model.potential_field(&profile.phi);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10 {
        let raw: Vec<f64> = (0..grid.n).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let h = project_zero_mean(&Field::new(grid, raw).unwrap());
        let dense = op.apply(&h.values);
        let spectral = operator_action(grid, &pot.values, profile.omega, &h).unwrap();
        let scale = norm_l2(&spectral).max(1e-30);
        let mut diff = 0.0f64;
        for (a, b) in dense.iter().zip(&spectral.values) {
            diff += (a - b) * (a - b);
        }
        let rel = (grid.spacing() * diff).sqrt() / scale;
        assert!(rel <= 1e-8, "case {case}: dense vs spectral {rel:.3e}");
    }
}

#[test]
fn free_operator_spectrum_bottoms_at_two() {
    // V = 0, omega = 0: the symbol xi^2 + 1/xi^2 has minimum 2 at |xi| = 1
    let grid = Grid::new(51.0, 512).unwrap();
    let op = assemble_operator(grid, &vec![0.0; grid.n], 0.0).unwrap();
    let spec = symmetric_spectrum(&op).unwrap();
    let min_ev = spec.eigenvalues[0];
    let min_symbol = (1..=grid.nyquist())
        .map(|k| {
            let x2 = grid.xi(k).powi(2);
            x2 + 1.0 / x2
        })
        .fold(f64::INFINITY, f64::min);
    assert!(
        (min_ev - min_symbol).abs() <= 1e-9 * min_symbol,
        "min eigenvalue {min_ev} vs discrete symbol minimum {min_symbol}"
    );
    assert!((min_ev - 2.0).abs() <= 1e-2);
    assert_eq!(spec.n_minus, 0);
}

#[test]
fn translation_mode_spans_the_kernel() {
    let profile = quadratic_cell();
    let op = assemble_about(&profile).unwrap();
    let spec = symmetric_spectrum(&op).unwrap();
    assert_eq!(spec.n_minus, 1);
    assert!(spec.kernel_dim >= 1, "kernel dim {}", spec.kernel_dim);
    let kernel =
        weak_nondegeneracy(&spec, &profile.model, &profile.phi, profile.omega).unwrap();
    assert!(kernel.best_overlap >= 0.9999, "overlap {}", kernel.best_overlap);
    assert!(kernel.kov <= 1e-4, "kov {:.3e}", kernel.kov);
}

#[test]
fn doctored_potential_breaks_the_kernel() {
    // scaling the potential by 5 percent moves the translation eigenvalue
    // far off zero; the kernel check must flag the mismatch rather than
    // report success
    let profile = quadratic_cell();
    let pot = profile.model.potential_field(&profile.phi);
    let doctored: Vec<f64> = pot.values.iter().map(|v| 1.05 * v).collect();
    let op = assemble_operator(profile.grid(), &doctored, profile.omega).unwrap();
    let spec = symmetric_spectrum(&op).unwrap();
    let kernel =
        weak_nondegeneracy(&spec, &profile.model, &profile.phi, profile.omega).unwrap();
    assert!(
        kernel.kov > 1e-3,
        "doctored operator not flagged: kov {:.3e}",
        kernel.kov
    );
}

#[test]
fn slope_solve_matches_a_synthetic_decomposition() {
    // three hand-built orthonormal modes: vk = dx sum c_i^2 / ev_i exactly
    let grid = Grid::new(10.0, 64).unwrap();
    let n = grid.n;
    let mut basis = Vec::new();
    for i in 0..3 {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        basis.push(v);
    }
    let evs = vec![-2.0, 0.5, 4.0];
    let spec = SymmetricSpectrum {
        grid,
        eigenvalues: evs.clone(),
        eigenvectors: basis,
        threshold: 1e-8,
        n_minus: 1,
        kernel_dim: 0,
    };
    let (a, b, c) = (0.3, -0.7, 0.2);
    let mut uv = vec![0.0; n];
    uv[0] = a;
    uv[1] = b;
    uv[2] = c;
    let u = Field::new(grid, uv).unwrap();
    let slope = vk_quantity(&spec, &u, 1e-6).unwrap();
    let exact = grid.spacing() * (a * a / -2.0 + b * b / 0.5 + c * c / 4.0);
    assert!(
        (slope.vk - exact).abs() <= 1e-14,
        "vk {} vs exact {}",
        slope.vk,
        exact
    );
    assert!(slope.q_rel <= 1e-14);
    assert!(slope.kernel_fraction <= 1e-30);
}

#[test]
fn kernel_contamination_is_refused() {
    let grid = Grid::new(10.0, 64).unwrap();
    let n = grid.n;
    let mut v0 = vec![0.0; n];
    v0[0] = 1.0;
    let mut v1 = vec![0.0; n];
    v1[1] = 1.0;
    let spec = SymmetricSpectrum {
        grid,
        eigenvalues: vec![1e-12, 3.0],
        eigenvectors: vec![v0, v1],
        threshold: 1e-8,
        n_minus: 0,
        kernel_dim: 1,
    };
    let mut uv = vec![0.0; n];
    uv[0] = 0.1; // tenth of the mass in the kernel mode
    uv[1] = 0.3;
    let u = Field::new(grid, uv).unwrap();
    match vk_quantity(&spec, &u, 1e-6) {
        Err(OstError::KernelContamination(f)) => assert!(f > 0.05),
        other => panic!("expected KernelContamination, got {other:?}"),
    }
}

#[test]
fn profile_is_a_generalized_eigenfunction() {
    let profile = quadratic_cell();
    let report = stability_report(&profile, &StabilityOptions::default()).unwrap();
    assert!(
        report.quad_identity_residual <= 1e-6,
        "quadratic identity {:.3e}",
        report.quad_identity_residual
    );
    let slope = report.slope.as_ref().expect("slope must be available");
    assert!(slope.q_rel <= 1e-8, "q_rel {:.3e}", slope.q_rel);
    assert!(slope.vk < 0.0);
    assert!((slope.vk - (-3.0876)).abs() <= 2e-3, "vk {}", slope.vk);
    assert_eq!(report.verdict, Verdict::Stable);
}

#[test]
fn advected_spectrum_has_the_quadruple_symmetry() {
    let profile = quadratic_cell();
    let op = assemble_about(&profile).unwrap();
    let full = full_linearization_spectrum(&op, 0.25).unwrap();
    assert!(
        full.symmetry_defect <= 1e-10,
        "symmetry defect {:.3e}",
        full.symmetry_defect
    );
    for (i, r) in full.top_residuals.iter().enumerate() {
        assert!(*r <= 1e-6, "eigenpair {i}: residual {r:.3e}");
    }
    assert!(
        full.max_real_localized <= 1e-6 * full.scale,
        "growth {:.3e} vs scale {:.3e}",
        full.max_real_localized,
        full.scale
    );
}

#[test]
fn operator_commutes_with_translation_parity() {
    // L phi' computed two ways: on phi' directly, and by differentiating a
    // rolled profile's translation mode; both must vanish at the same rate
    let profile = quadratic_cell();
    let grid = profile.grid();
    let pot = profile.model.potential_field(&profile.phi);
    let dphi = ostwave::grid::deriv(&profile.phi, 1).unwrap();
    let l_dphi = operator_action(grid, &pot.values, profile.omega, &dphi).unwrap();
    let direct = norm_l2(&l_dphi) / norm_l2(&dphi);

    let rolled = roll(&profile.phi, 3);
    let pot_roll = profile.model.potential_field(&rolled);
    let drolled = ostwave::grid::deriv(&rolled, 1).unwrap();
    let l_droll = operator_action(grid, &pot_roll.values, profile.omega, &drolled).unwrap();
    let rolled_res = norm_l2(&l_droll) / norm_l2(&drolled);
    assert!(
        (direct - rolled_res).abs() <= 1e-10 + 0.1 * direct,
        "translation residual changed under rolling: {direct:.3e} vs {rolled_res:.3e}"
    );
}

#[test]
fn verdict_logic_contract() {
    let opts = StabilityOptions::default();
    let stable = classify(1, 1e-8, Some(-0.5), Some(1e-12), 1.0, 1.0, &opts);
    assert_eq!(stable, Verdict::Stable);
    // two negative directions: the constrained theory does not apply
    assert_eq!(classify(2, 1e-8, Some(-0.5), Some(1e-12), 1.0, 1.0, &opts), Verdict::Inconclusive);
    // kernel missing the translation mode
    assert_eq!(classify(1, 0.5, Some(-0.5), Some(1e-12), 1.0, 1.0, &opts), Verdict::Inconclusive);
    // wrong slope sign
    assert_eq!(classify(1, 1e-8, Some(0.5), Some(1e-12), 1.0, 1.0, &opts), Verdict::Inconclusive);
    // slope solve refused
    assert_eq!(classify(1, 1e-8, None, Some(1e-12), 1.0, 1.0, &opts), Verdict::Inconclusive);
    // measurable growth wins over everything
    assert_eq!(classify(1, 1e-8, Some(-0.5), Some(1e-2), 1.0, 1.0, &opts), Verdict::Unstable);
    assert_eq!(classify(2, 0.5, None, Some(1e-2), 1.0, 1.0, &opts), Verdict::Unstable);
    // zero slope within tolerance is not strictly negative
    assert_eq!(
        classify(1, 1e-8, Some(-1e-12), Some(0.0), 1.0, 1.0, &opts),
        Verdict::Inconclusive
    );
}

#[test]
fn sine_modes_diagonalize_the_free_operator() {
    // eigenvector check: cos(k pi x / L) is an exact eigenvector of the
    // assembled free operator with eigenvalue xi_k^2 + 1/xi_k^2
    let grid = Grid::new(20.0, 128).unwrap();
    let op = assemble_operator(grid, &vec![0.0; grid.n], 0.0).unwrap();
    for k in [1usize, 3, 17] {
        let xi = k as f64 * PI / grid.half_length;
        let v = Field::from_fn(grid, |x| (xi * x).cos()).unwrap();
        let av = op.apply(&v.values);
        let expected = xi * xi + 1.0 / (xi * xi);
        let mut worst = 0.0f64;
        for (a, b) in av.iter().zip(&v.values) {
            worst = worst.max((a - expected * b).abs());
        }
        assert!(worst <= 1e-9 * expected, "mode {k}: defect {worst:.3e}");
    }
}
