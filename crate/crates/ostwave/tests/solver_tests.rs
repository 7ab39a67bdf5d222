//! Solver tests: convergence, an independent derivative-free oracle for the
//! constrained minimum, translation quotienting, and the subadditivity
//! contract.

use ostwave::functionals::energy_second_order;
use ostwave::grid::{inner, norm_l2, Field, Grid};
use ostwave::model::{Model, ModelFamily};
use ostwave::solver::{
    check_subadditivity, cost_curve, max_half_length, minimize, solve_auto, CostCurve, CurveRow,
    SolverOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn quadratic_cell_converges_to_reference() {
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let grid = Grid::new(51.0, 256).unwrap();
    let opts = SolverOptions::default();
    let (profile, report) = minimize(grid, &model, 1.0, &opts).unwrap();
    assert!(profile.el_residual <= opts.tol, "residual {:.3e}", profile.el_residual);
    assert!((profile.omega - 1.7569).abs() <= 2e-3, "omega {}", profile.omega);
    assert!((report.energy - 0.92703).abs() <= 2e-3, "m {}", report.energy);
    assert!(profile.omega < 2.0);
    // accepted descent energies are monotone by the Armijo construction
    for w in report.energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "energy increased: {} -> {}", w[0], w[1]);
    }
    assert!(report.parity_defect <= 1e-8, "parity {:.3e}", report.parity_defect);
}

/// Independent minimizer: compass (coordinate) search over even cosine
/// coefficients, rescaled to the constraint sphere before each energy
/// evaluation. No gradients, no preconditioner, no shared code path with
/// `minimize` beyond the energy itself.
fn compass_minimum(model: &Model, grid: Grid, lambda: f64, n_modes: usize, seed: u64) -> f64 {
    let l = grid.half_length;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs: Vec<f64> = (0..n_modes)
        .map(|k| rng.gen_range(-1.0..1.0) * (-(k as f64) / 6.0).exp())
        .collect();
    let energy = |c: &[f64]| -> f64 {
        let v = Field::from_fn(grid, |x| {
            c.iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI / l * x).cos())
                .sum()
        })
        .unwrap();
        let q = inner(&v, &v).unwrap();
        if q <= 1e-12 {
            return f64::INFINITY;
        }
        let scaled = ostwave::grid::map_values(&v, |y| y * (lambda / q).sqrt());
        energy_second_order(model, &scaled).unwrap()
    };
    let mut best = energy(&coeffs);
    let mut step = 0.2;
    while step > 2e-6 {
        let mut improved = false;
        for k in 0..n_modes {
            for sgn in [1.0, -1.0] {
                let old = coeffs[k];
                coeffs[k] = old + sgn * step;
                let e = energy(&coeffs);
                if e < best - 1e-15 {
                    best = e;
                    improved = true;
                } else {
                    coeffs[k] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

#[test]
fn derivative_free_search_confirms_the_minimum() {
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let grid = Grid::new(51.0, 256).unwrap();
    let lambda = 1.0;
    let n_modes = 40;
    let (profile, report) = minimize(grid, &model, lambda, &SolverOptions::default()).unwrap();

    // the solver's own answer, truncated to the compass subspace and pushed
    // back to the sphere: an upper bound for the subspace minimum
    let l = grid.half_length;
    let coeffs: Vec<f64> = (1..=n_modes)
        .map(|k| {
            let basis =
                Field::from_fn(grid, |x| (k as f64 * std::f64::consts::PI / l * x).cos()).unwrap();
            inner(&profile.phi, &basis).unwrap() / inner(&basis, &basis).unwrap()
        })
        .collect();
    let truncated = Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * std::f64::consts::PI / l * x).cos())
            .sum()
    })
    .unwrap();
    let q = inner(&truncated, &truncated).unwrap();
    let projected = ostwave::grid::map_values(&truncated, |y| y * (lambda / q).sqrt());
    let e_projected = energy_second_order(&model, &projected).unwrap();

    let mut compass = Vec::new();
    for seed in [1u64, 2, 3] {
        compass.push(compass_minimum(&model, grid, lambda, n_modes, seed));
    }
    let spread = compass.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - compass.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 1e-6, "compass seeds disagree by {spread:.3e}");
    for (i, &e) in compass.iter().enumerate() {
        // sandwich: never below the full-space minimum, never above the
        // solver's answer restricted to the same subspace
        assert!(e >= report.energy - 1e-10, "seed {i} beat the minimum: {e:.10}");
        assert!(
            e <= e_projected + 1e-7,
            "seed {i} stalled: compass {e:.10}, projected solver {e_projected:.10}"
        );
        // the subspace gap itself is small, so both quantities pin the
        // constrained minimum
        let gap = (e - report.energy).abs() / report.energy.abs();
        assert!(gap <= 1e-3, "truncation gap {gap:.3e}");
    }
}

#[test]
fn shifted_seed_lands_on_the_centered_wave() {
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let grid = Grid::new(51.0, 256).unwrap();
    let base = minimize(grid, &model, 1.0, &SolverOptions::default()).unwrap().0;
    let mut opts = SolverOptions::default();
    opts.seed_shift_nodes = 17;
    let shifted = minimize(grid, &model, 1.0, &opts).unwrap().0;
    let mut diff = 0.0f64;
    for (a, b) in base.phi.values.iter().zip(&shifted.phi.values) {
        diff = diff.max((a - b).abs());
    }
    assert!(
        diff <= 1e-6 * base.phi.max_abs(),
        "translation quotient broken: {diff:.3e}"
    );
}

#[test]
fn near_critical_exponent_converges() {
    let model = Model::new(ModelFamily::SignedPower, 4.9).unwrap();
    let out = solve_auto(&model, 1.0, 256, None, &SolverOptions::default()).unwrap();
    assert!(out.profile.el_residual <= 1e-8);
    assert!(out.profile.omega < 2.0, "omega {}", out.profile.omega);
}

#[test]
fn abs_family_profile_keeps_a_negative_trough() {
    // the abs-family nonlinearity rewards positive mass; the minimizer still
    // has oscillating tails, so it must not be one-signed
    let model = Model::new(ModelFamily::AbsPower, 2.0).unwrap();
    let out = solve_auto(&model, 2.0, 256, Some(60.0), &SolverOptions::default()).unwrap();
    let min = out.profile.phi.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = out.profile.phi.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(max > 0.0 && min < 0.0, "range [{min}, {max}]");
    assert!(max > -min, "peak should dominate the trough");
}

#[test]
fn auto_box_respects_the_node_density_cap() {
    // floor(pi n / 4) at n = 1024
    assert_eq!(max_half_length(1024), 804.0);
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let out = solve_auto(&model, 1.0, 256, None, &SolverOptions::default()).unwrap();
    let l = out.profile.grid().half_length;
    assert!(l <= max_half_length(256));
    // the chosen box keeps at least twelve decay lengths
    let kappa = ostwave::grid::decay_rate_kappa(out.profile.omega).unwrap();
    assert!(kappa * l >= 12.0, "kappa L = {}", kappa * l);
}

#[test]
fn curve_needs_two_levels() {
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let err = cost_curve(&model, &[1.0], 128, &SolverOptions::default());
    assert!(err.is_err());
}

#[test]
fn real_curve_is_strictly_subadditive() {
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let curve = cost_curve(&model, &[0.5, 1.0, 2.0], 128, &SolverOptions::default()).unwrap();
    assert!(curve.failures.is_empty(), "failures: {:?}", curve.failures);
    let report = check_subadditivity(&curve).unwrap();
    assert!(report.ratios_strictly_decreasing);
    assert!(!report.triples.is_empty());
    assert!(report.violations.is_empty());
    for t in &report.triples {
        assert!(t.margin > 0.0);
    }
}

#[test]
fn fabricated_superadditive_curve_is_flagged() {
    // m(2) > m(1) + m(1): the 2-level must show up as a violation, and the
    // ratio sequence must not be reported as decreasing
    let curve = CostCurve {
        family: "signed".into(),
        p: 2.0,
        n: 128,
        rows: vec![
            CurveRow { lambda: 1.0, m_value: 0.9, omega: 1.7, el_residual: 1e-10 },
            CurveRow { lambda: 2.0, m_value: 2.1, omega: 1.6, el_residual: 1e-10 },
        ],
        failures: vec![],
    };
    let report = check_subadditivity(&curve).unwrap();
    assert!(!report.ratios_strictly_decreasing);
    assert_eq!(report.violations.len(), 1);
    assert!((report.violations[0].lambda - 2.0).abs() <= 1e-12);
    assert!(report.violations[0].margin <= 0.0);
}
