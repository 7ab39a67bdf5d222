//! Fast end-to-end pass over every module on one healthy cell.

use ostwave::diag::{fit_decay, pohozaev_fourth_order, pohozaev_residuals};
use ostwave::evolve::{integrate, EvolveOptions};
use ostwave::grid::Grid;
use ostwave::model::{Model, ModelFamily};
use ostwave::solver::{minimize, SolverOptions};
use ostwave::stability::{stability_report, StabilityOptions, Verdict};

#[test]
fn smoke_signed_p2_pipeline() {
    let grid = Grid::new(51.0, 512).unwrap();
    let model = Model::new(ModelFamily::SignedPower, 2.0).unwrap();
    let opts = SolverOptions::default();
    let (profile, report) = minimize(grid, &model, 1.0, &opts).unwrap();
    println!(
        "omega = {:.6}  residual = {:.3e}  descent = {}  newton = {}  energy = {:.6}",
        profile.omega,
        profile.el_residual,
        report.descent_iterations,
        report.newton_iterations,
        report.energy
    );
    assert!(profile.el_residual <= 1e-8);
    assert!((profile.omega - 1.7569).abs() < 2e-3);

    let poh = pohozaev_residuals(&profile).unwrap();
    println!("pohozaev r1 = {:.3e}  r2 = {:.3e}", poh.r1, poh.r2);
    // aliasing-level identity error at n = 512; shrinks with n
    assert!(poh.r1 <= 1e-4 && poh.r2 <= 1e-4);
    let poh4 = pohozaev_fourth_order(&profile).unwrap();
    println!("fourth order r1 = {:.3e}  r2 = {:.3e}", poh4.r1, poh4.r2);
    assert!(poh4.r1 <= 1e-4 && poh4.r2 <= 1e-4);

    let fit = fit_decay(&profile).unwrap();
    println!(
        "kappa_fit = {:.4}  kappa_omega = {:.4}  deviation = {:.3e}",
        fit.kappa_fit, fit.kappa_omega, fit.deviation
    );
    assert!(fit.deviation <= 0.1);

    let st = stability_report(&profile, &StabilityOptions::default()).unwrap();
    println!(
        "n_minus = {}  kernel_dim = {}  kov = {:.3e}  q_rel = {:.3e}",
        st.n_minus, st.kernel.kernel_dim, st.kernel.kov, st.quad_identity_residual
    );
    if let Some(s) = &st.slope {
        println!("vk = {:.4}  kernel_fraction = {:.3e}  q_rel = {:.3e}", s.vk, s.kernel_fraction, s.q_rel);
    }
    if let Some(f) = &st.full {
        println!(
            "max_real_localized = {:.3e}  scale = {:.3e}  sym_defect = {:.3e}",
            f.max_real_localized, f.scale, f.symmetry_defect
        );
    }
    println!("verdict = {}", st.verdict);
    assert_eq!(st.n_minus, 1);
    assert!(st.kernel.kov <= 1e-4);
    assert!(st.slope.as_ref().unwrap().vk < 0.0);
    assert_eq!(st.verdict, Verdict::Stable);

    let eopts = EvolveOptions::new(2.0, 1e-3);
    let trace = integrate(&model, &profile.phi, &eopts, Some(&profile)).unwrap();
    let m0 = trace.mass[0];
    let mdrift = trace
        .mass
        .iter()
        .fold(0.0f64, |w, &m| w.max((m - m0).abs() / m0));
    let tw = trace
        .tw_error
        .as_ref()
        .unwrap()
        .iter()
        .fold(0.0f64, |w, &e| w.max(e));
    println!("mass drift = {:.3e}  tw error = {:.3e}", mdrift, tw);
    assert!(mdrift <= 1e-9);
    // spatial aliasing dominates at n = 512; the n = 1024 level is 6e-5
    assert!(tw <= 5e-4);
    assert!(trace.blowup_time.is_none());
}
