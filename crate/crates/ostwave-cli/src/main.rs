//! Batch front-end: configuration, command dispatch, sweep orchestration,
//! and report aggregation. Every artifact is CSV or JSON, written atomically.
//!
//! Exit codes: 0 all checks passed; 1 a verification check evaluated false;
//! 2 usage or configuration error; 3 numerical failure (solver, eigensolver,
//! or integrator).

use clap::{Args, Parser, Subcommand};
use ostwave::diag::{fit_decay, pohozaev_fourth_order, pohozaev_residuals};
use ostwave::error::OstError;
use ostwave::evolve::perturbation_experiment;
use ostwave::functionals::el_residual_fourth_order;
use ostwave::io;
use ostwave::model::{Model, ModelFamily, WaveProfile};
use ostwave::solver::{
    check_subadditivity, cost_curve, solve_auto, SolveOutcome, SolverOptions,
};
use ostwave::stability::{stability_report, StabilityOptions, StabilityReport, Verdict};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ostwave",
    version,
    about = "Ground-state traveling waves of generalized Ostrovsky equations: solve, certify, evolve"
)]
struct Cli {
    /// JSON configuration file; command-line flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $OSTWAVE_OUT_DIR or ./out)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute one profile and write its CSV/JSON artifacts
    Solve(CellArgs),
    /// Solve a list of constraint levels and write the cost curve
    Sweep(SweepArgs),
    /// Spectrum, kernel, slope quantity, and stability verdict for one cell
    Stability(CellArgs),
    /// Integrate the (optionally perturbed) wave and report the excursion ratio
    Evolve(EvolveArgs),
    /// Cost curve plus the strict-subadditivity report
    Subadd(SweepArgs),
    /// Integral-identity residuals for one cell, both discretizations
    Pohozaev(CellArgs),
    /// Solve every requested cell and aggregate all module reports
    VerifyAll(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct CellArgs {
    /// Model family: abs | signed
    #[arg(long)]
    family: Option<String>,
    /// Nonlinearity exponent
    #[arg(long)]
    p: Option<f64>,
    /// Constraint level (squared L2 norm)
    #[arg(long)]
    lambda: Option<f64>,
    /// Grid size (power of two, >= 64)
    #[arg(long)]
    n: Option<usize>,
    /// Half-length of the box; omit for automatic sizing
    #[arg(long = "box")]
    l: Option<f64>,
    /// Solver tolerance on the profile-equation residual
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct SweepArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// Comma-separated constraint levels (at least two)
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
}

#[derive(Args, Clone, Default)]
struct EvolveArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// Integration horizon
    #[arg(long)]
    t_final: Option<f64>,
    /// Time step
    #[arg(long)]
    dt: Option<f64>,
    /// Perturbation amplitude relative to the wave norm; 0 = pure
    /// traveling-wave propagation test
    #[arg(long)]
    delta: Option<f64>,
    /// RNG seed; required whenever delta > 0
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct VerifyArgs {
    #[command(flatten)]
    evolve: EvolveArgs,
    /// Comma-separated constraint levels (single --lambda also accepted)
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
}

/// On-disk configuration mirror of the flags; flags override fields.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct FileConfig {
    family: Option<String>,
    p: Option<f64>,
    lambda: Option<f64>,
    lambdas: Option<Vec<f64>>,
    n: Option<usize>,
    #[serde(rename = "L")]
    l: Option<f64>,
    solver: Option<SolverOptions>,
    evolve: Option<EvolveFileSection>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct EvolveFileSection {
    t_final: Option<f64>,
    dt: Option<f64>,
    delta: Option<f64>,
    seed: Option<u64>,
}

struct Usage(String);
struct Numerical(String);

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}
impl From<Numerical> for Failure {
    fn from(n: Numerical) -> Self {
        Failure::Numerical(n.0)
    }
}
impl From<OstError> for Failure {
    fn from(e: OstError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

/// A fully resolved run: file config overlaid by flags, then defaults.
struct Resolved {
    model: Model,
    lambdas: Vec<f64>,
    n: usize,
    l: Option<f64>,
    solver: SolverOptions,
    t_final: f64,
    dt: f64,
    delta: f64,
    seed: Option<u64>,
    out_dir: PathBuf,
}

fn resolve(
    file: &FileConfig,
    cell: &CellArgs,
    lambdas_flag: &[f64],
    evolve: Option<&EvolveArgs>,
    out_dir: &Option<PathBuf>,
    need_multi: bool,
) -> Result<Resolved, Usage> {
    let family_name = cell
        .family
        .clone()
        .or_else(|| file.family.clone())
        .ok_or_else(|| Usage("missing --family (abs | signed)".into()))?;
    let family = ModelFamily::parse(&family_name).map_err(|e| Usage(e.to_string()))?;
    let p = cell
        .p
        .or(file.p)
        .ok_or_else(|| Usage("missing --p".into()))?;
    let model = Model::new(family, p).map_err(|e| Usage(e.to_string()))?;

    let mut lambdas: Vec<f64> = if !lambdas_flag.is_empty() {
        lambdas_flag.to_vec()
    } else if let Some(l) = cell.lambda {
        vec![l]
    } else if let Some(ls) = &file.lambdas {
        ls.clone()
    } else if let Some(l) = file.lambda {
        vec![l]
    } else {
        vec![]
    };
    if lambdas.is_empty() {
        return Err(Usage("missing --lambda (or --lambdas)".into()));
    }
    if need_multi && lambdas.len() < 2 {
        return Err(Usage(format!(
            "need at least 2 constraint levels, got {}",
            lambdas.len()
        )));
    }
    for &l in &lambdas {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Usage(format!("lambda = {l} must be positive and finite")));
        }
    }
    lambdas.dedup();

    let n = cell.n.or(file.n).unwrap_or(1024);
    if n < 64 || !n.is_power_of_two() {
        return Err(Usage(format!(
            "grid size n = {n} must be a power of two >= 64"
        )));
    }
    let l = cell.l.or(file.l);
    if let Some(lv) = l {
        if !(lv > 0.0) || !lv.is_finite() {
            return Err(Usage(format!("box half-length {lv} must be positive")));
        }
    }
    let mut solver = file.solver.clone().unwrap_or_default();
    if let Some(t) = cell.tol {
        solver.tol = t;
    }
    if !(solver.tol > 0.0) {
        return Err(Usage(format!("tol = {} must be positive", solver.tol)));
    }

    let fe = file.evolve.clone().unwrap_or_default();
    let t_final = evolve.and_then(|e| e.t_final).or(fe.t_final).unwrap_or(10.0);
    let dt = evolve.and_then(|e| e.dt).or(fe.dt).unwrap_or(1e-3);
    let delta = evolve.and_then(|e| e.delta).or(fe.delta).unwrap_or(0.0);
    let seed = evolve.and_then(|e| e.seed).or(fe.seed);
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(Usage(format!(
            "need positive t_final and dt, got {t_final}, {dt}"
        )));
    }
    if !(0.0..=0.1).contains(&delta) {
        return Err(Usage(format!(
            "delta = {delta} outside [0, 0.1] (0 = unperturbed propagation test)"
        )));
    }
    if delta > 0.0 && seed.is_none() {
        return Err(Usage(
            "a perturbed run draws random noise: --seed is required when delta > 0".into(),
        ));
    }

    let out_dir = out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os("OSTWAVE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Usage(format!("cannot create out_dir {}: {e}", out_dir.display())))?;

    Ok(Resolved {
        model,
        lambdas,
        n,
        l,
        solver,
        t_final,
        dt,
        delta,
        seed,
        out_dir,
    })
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, Usage> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => io::read_json(p).map_err(|e| Usage(format!("config {}: {e}", p.display()))),
    }
}

/// Tag for per-cell artifact names; f64 Display is shortest-roundtrip, so
/// tags are deterministic.
fn lam_tag(l: f64) -> String {
    format!("{l}").replace('.', "_")
}

fn solve_cell(r: &Resolved, lambda: f64) -> Result<SolveOutcome, Numerical> {
    solve_auto(&r.model, lambda, r.n, r.l, &r.solver).map_err(|e| Numerical(e.to_string()))
}

fn write_profile_artifacts(
    dir: &Path,
    tag: &str,
    profile: &WaveProfile,
) -> Result<(PathBuf, PathBuf), Numerical> {
    let csv = dir.join(format!("profile_{tag}.csv"));
    let js = dir.join(format!("profile_{tag}.json"));
    io::write_profile_csv(&csv, profile).map_err(|e| Numerical(e.to_string()))?;
    io::write_json(&js, &io::profile_json(profile)).map_err(|e| Numerical(e.to_string()))?;
    Ok((csv, js))
}

fn cmd_solve(r: &Resolved) -> Result<u8, Failure> {
    let lambda = r.lambdas[0];
    let out = solve_cell(r, lambda)?;
    let tag = lam_tag(lambda);
    write_profile_artifacts(&r.out_dir, &tag, &out.profile)?;
    println!(
        "solve: family={} p={} lambda={} -> omega={:.8} m={:.8} residual={:.3e} rounds={} L={} n={}",
        r.model.family.name(),
        r.model.p,
        lambda,
        out.profile.omega,
        out.report.energy,
        out.profile.el_residual,
        out.rounds,
        out.profile.grid().half_length,
        r.n,
    );
    if out.box_state || out.profile.omega >= 2.0 {
        println!("check FAILED: omega = {:.8} >= 2 (box-scale state)", out.profile.omega);
        return Ok(EXIT_CHECK_FAILED);
    }
    println!("check passed: omega < 2");
    Ok(0)
}

fn run_sweep(r: &Resolved) -> Result<(ostwave::solver::CostCurve, Vec<String>), Failure> {
    let curve = cost_curve(&r.model, &r.lambdas, r.n, &r.solver)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let mut files = Vec::new();
    for row in &curve.rows {
        // re-solve is avoided: cost_curve keeps only scalars, so emit
        // per-cell profiles in the same pass
        let out = solve_cell(r, row.lambda)?;
        let (csv, _) = write_profile_artifacts(&r.out_dir, &lam_tag(row.lambda), &out.profile)?;
        files.push(csv.file_name().unwrap().to_string_lossy().into_owned());
    }
    io::write_curve_csv(&r.out_dir.join("curve.csv"), &curve)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(
        &r.out_dir.join("curve_manifest.json"),
        &io::curve_manifest_json(&curve, &files),
    )
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok((curve, files))
}

fn cmd_sweep(r: &Resolved, with_subadd: bool) -> Result<u8, Failure> {
    let (curve, _) = run_sweep(r)?;
    for row in &curve.rows {
        println!(
            "lambda={:<6} omega={:.8} m={:.8} residual={:.3e}",
            row.lambda, row.omega, row.m_value, row.el_residual
        );
    }
    if !curve.failures.is_empty() {
        for (l, e) in &curve.failures {
            eprintln!("lambda={l}: FAILED: {e}");
        }
        if curve.rows.len() < 2 {
            eprintln!("sweep failed: fewer than two converged cells");
            return Ok(EXIT_NUMERICAL);
        }
    }
    let mut code = if curve.failures.is_empty() { 0 } else { EXIT_NUMERICAL };
    if with_subadd {
        let report = check_subadditivity(&curve).map_err(|e| Failure::Numerical(e.to_string()))?;
        io::write_json(&r.out_dir.join("subadditivity.json"), &report)
            .map_err(|e| Failure::Numerical(e.to_string()))?;
        let ok = report.ratios_strictly_decreasing && report.violations.is_empty();
        println!(
            "subadditivity: ratios strictly decreasing = {}, triples = {}, violations = {}",
            report.ratios_strictly_decreasing,
            report.triples.len(),
            report.violations.len()
        );
        if !ok && code == 0 {
            code = EXIT_CHECK_FAILED;
        }
    }
    Ok(code)
}

fn cmd_stability(r: &Resolved) -> Result<u8, Failure> {
    let lambda = r.lambdas[0];
    let out = solve_cell(r, lambda)?;
    let tag = lam_tag(lambda);
    write_profile_artifacts(&r.out_dir, &tag, &out.profile)?;
    let st = stability_report(&out.profile, &StabilityOptions::default())
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(&r.out_dir.join(format!("stability_{tag}.json")), &st)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let op = ostwave::stability::assemble_about(&out.profile)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let spec = ostwave::stability::symmetric_spectrum(&op)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_eigenvalues_csv(&r.out_dir.join(format!("eigenvalues_{tag}.csv")), &spec.eigenvalues)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    if let Some(full) = &st.full {
        io::write_full_eigenvalues_csv(
            &r.out_dir.join(format!("full_eigenvalues_{tag}.csv")),
            &full.modes,
        )
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    }
    println!(
        "stability: n_minus={} kernel_dim={} kov={:.3e} vk={} verdict={}",
        st.n_minus,
        st.kernel.kernel_dim,
        st.kernel.kov,
        st.slope
            .as_ref()
            .map(|s| format!("{:.6}", s.vk))
            .unwrap_or_else(|| "n/a".into()),
        st.verdict
    );
    Ok(if st.verdict == Verdict::Stable { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_evolve(r: &Resolved) -> Result<u8, Failure> {
    let lambda = r.lambdas[0];
    let out = solve_cell(r, lambda)?;
    let tag = lam_tag(lambda);
    write_profile_artifacts(&r.out_dir, &tag, &out.profile)?;
    let res = perturbation_experiment(&out.profile, r.delta, r.t_final, r.dt, r.seed.unwrap_or(0))
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_trace_csv(&r.out_dir.join(format!("trace_{tag}.csv")), &res.trace)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(
        &r.out_dir.join(format!("evolve_{tag}.json")),
        &io::trace_summary_json(res.ratio, res.trace.blowup_time),
    )
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    if let Some(t) = res.trace.blowup_time {
        println!("evolve: amplitude guard tripped at t = {t:.4}");
        return Ok(EXIT_CHECK_FAILED);
    }
    let (label, bound) = if res.flagged_tw_test {
        println!("evolve: delta = 0, running the unperturbed propagation test");
        ("propagation error", 1e-4)
    } else {
        ("excursion ratio", 10.0)
    };
    println!("evolve: {label} = {:.6e} over T = {}", res.ratio, r.t_final);
    if res.ratio <= bound {
        println!("check passed: {label} <= {bound}");
        Ok(0)
    } else {
        println!("check FAILED: {label} > {bound}");
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_pohozaev(r: &Resolved) -> Result<u8, Failure> {
    let lambda = r.lambdas[0];
    let out = solve_cell(r, lambda)?;
    let tag = lam_tag(lambda);
    write_profile_artifacts(&r.out_dir, &tag, &out.profile)?;
    let p2 = pohozaev_residuals(&out.profile).map_err(|e| Failure::Numerical(e.to_string()))?;
    let p4 =
        pohozaev_fourth_order(&out.profile).map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(
        &r.out_dir.join(format!("pohozaev_{tag}.json")),
        &json!({"second_order": p2, "fourth_order": p4}),
    )
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    println!(
        "pohozaev: r1={:.3e} r2={:.3e} (fourth order r1={:.3e} r2={:.3e})",
        p2.r1, p2.r2, p4.r1, p4.r2
    );
    let ok = p2.r1 <= 1e-4 && p2.r2 <= 1e-4 && p4.r1 <= 1e-4 && p4.r2 <= 1e-4;
    Ok(if ok { 0 } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct TableRow {
    family: String,
    p: f64,
    lambda: f64,
    omega: f64,
    m_value: f64,
    el_residual2: f64,
    el_residual4: f64,
    poh_r1: f64,
    poh_r2: f64,
    poh4_r1: f64,
    poh4_r2: f64,
    kappa_fit: Option<f64>,
    kappa_omega: Option<f64>,
    n_minus: usize,
    kernel_overlap: f64,
    vk_value: Option<f64>,
    max_real_full: Option<f64>,
    verdict: String,
    evolve_ratio: Option<f64>,
    pass: bool,
    notes: Vec<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn verify_cell(r: &Resolved, lambda: f64) -> Result<TableRow, Failure> {
    let out = solve_cell(r, lambda)?;
    let profile = &out.profile;
    let tag = lam_tag(lambda);
    write_profile_artifacts(&r.out_dir, &tag, profile)?;
    let mut notes = Vec::new();
    let mut pass = true;

    let el2 = profile.el_residual;
    let el4 = el_residual_fourth_order(&r.model, &profile.phi, profile.omega)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    if !(el2 <= 1e-7 && el4 <= 1e-6) {
        pass = false;
        notes.push(format!("profile-equation residuals {el2:.3e}/{el4:.3e}"));
    }
    if !(profile.omega < 2.0) {
        pass = false;
        notes.push(format!("omega = {:.8} >= 2", profile.omega));
    }
    let m_value = out.report.energy;
    if !(m_value < lambda) {
        pass = false;
        notes.push(format!("m = {m_value:.8} >= lambda"));
    }

    let p2 = pohozaev_residuals(profile).map_err(|e| Failure::Numerical(e.to_string()))?;
    let p4 = pohozaev_fourth_order(profile).map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(
        &r.out_dir.join(format!("pohozaev_{tag}.json")),
        &json!({"second_order": p2, "fourth_order": p4}),
    )
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    if !(p2.r1 <= 1e-4 && p2.r2 <= 1e-4 && p4.r1 <= 1e-4 && p4.r2 <= 1e-4) {
        pass = false;
        notes.push("integral identities above 1e-4".into());
    }

    let fit = match fit_decay(profile) {
        Ok(f) => {
            io::write_json(&r.out_dir.join(format!("decay_{tag}.json")), &f)
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            let devl = (f.kappa_left - f.kappa_omega).abs() / f.kappa_omega;
            let devr = (f.kappa_right - f.kappa_omega).abs() / f.kappa_omega;
            if !(devl <= 0.1 && devr <= 0.1) {
                pass = false;
                notes.push(format!("tail rates off by {devl:.2e}/{devr:.2e}"));
            }
            Some(f)
        }
        Err(e) => {
            pass = false;
            notes.push(format!("decay fit: {e}"));
            None
        }
    };

    let st: StabilityReport = stability_report(profile, &StabilityOptions::default())
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(&r.out_dir.join(format!("stability_{tag}.json")), &st)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    if st.n_minus != 1 {
        pass = false;
        notes.push(format!("n_minus = {}", st.n_minus));
    }
    if !(st.kernel.translation_residual <= 1e-5) {
        pass = false;
        notes.push(format!(
            "translation residual {:.3e}",
            st.kernel.translation_residual
        ));
    }
    if !(st.quad_identity_residual <= 1e-6) {
        pass = false;
        notes.push(format!(
            "quadratic-form identity {:.3e}",
            st.quad_identity_residual
        ));
    }
    if !(st.kernel.kov <= 1e-4) {
        pass = false;
        notes.push(format!("kernel overlap defect {:.3e}", st.kernel.kov));
    }
    let vk = st.slope.as_ref().map(|s| s.vk);
    match vk {
        Some(v) if v < 0.0 => {}
        _ => {
            pass = false;
            notes.push("slope quantity not negative".into());
        }
    }
    if st.verdict != Verdict::Stable {
        pass = false;
        notes.push(format!("verdict {}", st.verdict));
    }
    let max_real = st.full.as_ref().map(|f| f.max_real_localized);
    if let Some(f) = &st.full {
        if !(f.max_real_localized <= 1e-6 * f.scale) {
            pass = false;
            notes.push(format!(
                "advected spectrum max Re {:.3e} vs scale {:.3e}",
                f.max_real_localized, f.scale
            ));
        }
    }

    let res = perturbation_experiment(profile, r.delta, r.t_final, r.dt, r.seed.unwrap_or(0))
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_trace_csv(&r.out_dir.join(format!("trace_{tag}.csv")), &res.trace)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(
        &r.out_dir.join(format!("evolve_{tag}.json")),
        &io::trace_summary_json(res.ratio, res.trace.blowup_time),
    )
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    let ratio_bound = if res.flagged_tw_test { 1e-4 } else { 10.0 };
    if !(res.ratio <= ratio_bound && res.trace.blowup_time.is_none()) {
        pass = false;
        notes.push(format!("evolution ratio {:.3e}", res.ratio));
    }

    Ok(TableRow {
        family: r.model.family.name().into(),
        p: r.model.p,
        lambda,
        omega: profile.omega,
        m_value,
        el_residual2: el2,
        el_residual4: el4,
        poh_r1: p2.r1,
        poh_r2: p2.r2,
        poh4_r1: p4.r1,
        poh4_r2: p4.r2,
        kappa_fit: fit.as_ref().map(|f| f.kappa_fit),
        kappa_omega: fit.as_ref().map(|f| f.kappa_omega),
        n_minus: st.n_minus,
        kernel_overlap: st.kernel.kov,
        vk_value: vk,
        max_real_full: max_real,
        verdict: st.verdict.to_string(),
        evolve_ratio: Some(res.ratio),
        pass,
        notes,
    })
}

fn cmd_verify_all(r: &Resolved) -> Result<u8, Failure> {
    let mut rows = Vec::new();
    let mut numerical_failures = Vec::new();
    for &lambda in &r.lambdas {
        match verify_cell(r, lambda) {
            Ok(row) => rows.push(row),
            Err(Failure::Numerical(e)) => {
                eprintln!("lambda={lambda}: numerical failure: {e}");
                numerical_failures.push((lambda, e));
            }
            Err(u) => return Err(u),
        }
    }
    let mut csv = String::from(
        "family,p,lambda,omega,m_value,el_residual2,el_residual4,poh_r1,poh_r2,poh4_r1,poh4_r2,kappa_fit,kappa_omega,n_minus,kernel_overlap,vk_value,max_real_full,verdict,evolve_ratio,pass\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.family,
            row.p,
            row.lambda,
            format!("{:.16e}", row.omega),
            format!("{:.16e}", row.m_value),
            format!("{:.16e}", row.el_residual2),
            format!("{:.16e}", row.el_residual4),
            format!("{:.16e}", row.poh_r1),
            format!("{:.16e}", row.poh_r2),
            format!("{:.16e}", row.poh4_r1),
            format!("{:.16e}", row.poh4_r2),
            fmt_opt(row.kappa_fit),
            fmt_opt(row.kappa_omega),
            row.n_minus,
            format!("{:.16e}", row.kernel_overlap),
            fmt_opt(row.vk_value),
            fmt_opt(row.max_real_full),
            row.verdict,
            fmt_opt(row.evolve_ratio),
            row.pass,
        ));
    }
    io::atomic_write(&r.out_dir.join("verification.csv"), csv.as_bytes())
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    io::write_json(
        &r.out_dir.join("verification.json"),
        &json!({"rows": rows, "numerical_failures": numerical_failures
            .iter().map(|(l, e)| json!({"lambda": l, "error": e})).collect::<Vec<_>>()}),
    )
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    for row in &rows {
        println!(
            "{} p={} lambda={}: omega={:.6} verdict={} {}{}",
            row.family,
            row.p,
            row.lambda,
            row.omega,
            row.verdict,
            if row.pass { "PASS" } else { "FAIL" },
            if row.notes.is_empty() {
                String::new()
            } else {
                format!(" ({})", row.notes.join("; "))
            }
        );
    }
    if !numerical_failures.is_empty() {
        Ok(EXIT_NUMERICAL)
    } else if rows.iter().all(|r| r.pass) {
        Ok(0)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    let file = load_config(&cli.config)?;
    match &cli.cmd {
        Cmd::Solve(a) => {
            let r = resolve(&file, a, &[], None, &cli.out_dir, false)?;
            cmd_solve(&r)
        }
        Cmd::Sweep(a) => {
            let r = resolve(&file, &a.cell, &a.lambdas, None, &cli.out_dir, true)?;
            cmd_sweep(&r, false)
        }
        Cmd::Subadd(a) => {
            let r = resolve(&file, &a.cell, &a.lambdas, None, &cli.out_dir, true)?;
            cmd_sweep(&r, true)
        }
        Cmd::Stability(a) => {
            let r = resolve(&file, a, &[], None, &cli.out_dir, false)?;
            cmd_stability(&r)
        }
        Cmd::Evolve(a) => {
            let r = resolve(&file, &a.cell, &[], Some(a), &cli.out_dir, false)?;
            cmd_evolve(&r)
        }
        Cmd::Pohozaev(a) => {
            let r = resolve(&file, a, &[], None, &cli.out_dir, false)?;
            cmd_pohozaev(&r)
        }
        Cmd::VerifyAll(a) => {
            let r = resolve(
                &file,
                &a.evolve.cell,
                &a.lambdas,
                Some(&a.evolve),
                &cli.out_dir,
                false,
            )?;
            cmd_verify_all(&r)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
