//! Property tests for the grid, spectral calculus, and quadrature layer.

use ostwave::grid::{
    decay_rate_kappa, deriv, inner, lin_comb, norm_l2, norm_sobolev, project_solver_subspace,
    project_zero_mean, resolvent_biquadratic, roll, symmetrize_even, Field, Grid,
};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (prop_oneof![Just(64usize), Just(128), Just(256)], 5.0f64..50.0)
        .prop_map(|(n, l)| Grid::new(l, n).unwrap())
}

fn field_strategy() -> impl Strategy<Value = Field> {
    grid_strategy().prop_flat_map(|g| {
        proptest::collection::vec(-1.0f64..1.0, g.n).prop_map(move |v| Field::new(g, v).unwrap())
    })
}

/// Band-limited field: a few low modes, mean and Nyquist free. On these the
/// spectral calculus is exact.
fn trig_strategy() -> impl Strategy<Value = Field> {
    (grid_strategy(), proptest::collection::vec(-1.0f64..1.0, 8))
        .prop_map(|(g, c)| {
            let l = g.half_length;
            Field::from_fn(g, |x| {
                c.iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let k = (i / 2 + 1) as f64 * std::f64::consts::PI / l;
                        if i % 2 == 0 {
                            a * (k * x).cos()
                        } else {
                            a * (k * x).sin()
                        }
                    })
                    .sum()
            })
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_is_symmetric_and_bilinear(f in field_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = roll(&f, 7);
        let h = roll(&f, 19);
        let fg = inner(&f, &g).unwrap();
        let gf = inner(&g, &f).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-12 * fg.abs().max(1.0));
        let comb = lin_comb(a, &f, b, &g).unwrap();
        let lhs = inner(&comb, &h).unwrap();
        let rhs = a * inner(&f, &h).unwrap() + b * inner(&g, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (lhs.abs() + rhs.abs()).max(1.0));
    }

    #[test]
    fn sobolev_zero_matches_l2(f in field_strategy()) {
        let a = norm_sobolev(&f, 0.0).unwrap();
        let b = norm_l2(&f);
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1e-30));
    }

    #[test]
    fn roll_is_an_isometry(f in field_strategy(), s in -400isize..400) {
        let r = roll(&f, s);
        prop_assert!((norm_l2(&r) - norm_l2(&f)).abs() <= 1e-12 * norm_l2(&f).max(1e-30));
        let g = roll(&f, 3);
        let rg = roll(&g, s);
        let lhs = inner(&r, &rg).unwrap();
        let rhs = inner(&f, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn projections_are_idempotent(f in field_strategy()) {
        let p = project_zero_mean(&f);
        prop_assert!(p.mean().abs() <= 1e-12 * p.max_abs().max(1e-30));
        let pp = project_zero_mean(&p);
        for (a, b) in p.values.iter().zip(&pp.values) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let s = project_solver_subspace(&f);
        let ss = project_solver_subspace(&s);
        for (a, b) in s.values.iter().zip(&ss.values) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn symmetrize_even_is_even_and_idempotent(f in field_strategy()) {
        let e = symmetrize_even(&f);
        let n = e.grid.n;
        for j in 1..n {
            prop_assert!((e.values[j] - e.values[n - j]).abs() <= 1e-12);
        }
        let ee = symmetrize_even(&e);
        for (a, b) in e.values.iter().zip(&ee.values) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn derivative_inverts_antiderivative(f in trig_strategy()) {
        let anti = deriv(&f, -1).unwrap();
        let back = deriv(&anti, 1).unwrap();
        let proj = project_solver_subspace(&f);
        let mut worst = 0.0f64;
        for (a, b) in back.values.iter().zip(&proj.values) {
            worst = worst.max((a - b).abs());
        }
        prop_assert!(worst <= 1e-9 * f.max_abs().max(1e-30));
    }

    #[test]
    fn integration_by_parts(f in trig_strategy()) {
        let g = roll(&f, 11);
        let lhs = inner(&deriv(&f, 1).unwrap(), &g).unwrap();
        let rhs = -inner(&f, &deriv(&g, 1).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (lhs.abs() + rhs.abs()).max(1.0));
    }

    #[test]
    fn resolvent_inverts_biquadratic_symbol(f in trig_strategy(), omega in -5.0f64..1.9) {
        let r = resolvent_biquadratic(&f, omega).unwrap();
        // xi^4 - omega xi^2 + 1 corresponds to d^4/dx^4 + omega d^2/dx^2 + 1
        let r4 = deriv(&r, 4).unwrap();
        let r2 = deriv(&r, 2).unwrap();
        let proj = project_solver_subspace(&f);
        let mut worst = 0.0f64;
        for j in 0..f.grid.n {
            let lhs = r4.values[j] + omega * r2.values[j] + r.values[j];
            // the resolvent keeps the mean while deriv drops it; compare on
            // the projected field plus the untouched mean
            let rhs = proj.values[j] + f.mean();
            worst = worst.max((lhs - rhs).abs());
        }
        prop_assert!(worst <= 1e-7 * f.max_abs().max(1e-30));
    }
}

#[test]
fn spectral_derivative_is_exact_on_modes() {
    let grid = Grid::new(17.0, 256).unwrap();
    let l = grid.half_length;
    for k in [1usize, 2, 5, 31, 100] {
        let xi = k as f64 * std::f64::consts::PI / l;
        let f = Field::from_fn(grid, |x| (xi * x).cos()).unwrap();
        let d = deriv(&f, 1).unwrap();
        let exact = Field::from_fn(grid, |x| -xi * (xi * x).sin()).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in d.values.iter().zip(&exact.values) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst <= 1e-10 * xi.max(1.0), "mode {k}: {worst:.3e}");
    }
}

#[test]
fn decay_rate_branches() {
    // right branch: kappa = sqrt((2 - omega) / 4)
    assert!((decay_rate_kappa(1.0).unwrap() - 0.5).abs() <= 1e-15);
    assert!((decay_rate_kappa(0.0).unwrap() - (0.5f64).sqrt()).abs() <= 1e-15);
    // continuity at the branch point omega = -2, value 1
    assert!((decay_rate_kappa(-2.0).unwrap() - 1.0).abs() <= 1e-12);
    assert!((decay_rate_kappa(-2.0 - 1e-9).unwrap() - 1.0).abs() <= 1e-4);
    // monotone decreasing on [-2, 2)
    let mut prev = f64::INFINITY;
    let mut om = -2.0;
    while om < 2.0 {
        let k = decay_rate_kappa(om).unwrap();
        assert!(k < prev, "kappa not decreasing at omega = {om}");
        prev = k;
        om += 0.05;
    }
    assert!(decay_rate_kappa(2.0).is_err());
    assert!(decay_rate_kappa(2.5).is_err());
}

#[test]
fn grid_rejects_bad_sizes() {
    assert!(Grid::new(10.0, 96).is_err());
    assert!(Grid::new(10.0, 32).is_err());
    assert!(Grid::new(-1.0, 128).is_err());
    assert!(Grid::new(10.0, 128).is_ok());
}

#[test]
fn field_rejects_non_finite() {
    let grid = Grid::new(10.0, 64).unwrap();
    let mut v = vec![0.0; 64];
    v[3] = f64::NAN;
    assert!(Field::new(grid, v).is_err());
}
