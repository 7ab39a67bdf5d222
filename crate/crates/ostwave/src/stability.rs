//! Spectral stability machinery: dense assembly of the second-variation
//! operator, its symmetric eigendecomposition, the translation-kernel and
//! weak-nondegeneracy checks, the slope (Vakhitov-Kolokolov style) quantity,
//! and the full nonsymmetric linearization spectrum with a localization
//! filter.

use crate::error::{OstError, Result};
use crate::grid::{inner, norm_l2, project_zero_mean, Field, Grid};
use crate::lapack;
use crate::model::{Model, WaveProfile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Dense symmetric representation of the projected second-variation
/// operator. The zero-mean projector is baked in; the constant direction is
/// pinned at `sentinel` (well above the physical spectrum) so it can be
/// identified and discarded after diagonalization instead of polluting the
/// small eigenvalues.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub grid: Grid,
    /// Column-major n x n entries.
    pub data: Vec<f64>,
    pub sentinel: f64,
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(v.len(), n);
        let mut out = vec![0.0; n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let col = &self.data[j * n..(j + 1) * n];
            for (o, &c) in out.iter_mut().zip(col) {
                *o += c * vj;
            }
        }
        out
    }

    /// Max asymmetry |M - M^T| relative to max |M|.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                let a = self.data[j * n + i];
                let b = self.data[i * n + j];
                worst = worst.max((a - b).abs());
                scale = scale.max(a.abs().max(b.abs()));
            }
        }
        worst / scale.max(1e-300)
    }
}

/// First column of the circulant realizing a real Fourier multiplier.
fn circulant_column(grid: Grid, symbol: &[f64]) -> Vec<f64> {
    let spec: Vec<Complex64> = symbol.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    crate::fft::irfft(spec, grid.n)
}

/// Assemble the projected operator -dxx - dxinv2 - omega - diag(potential)
/// acting on zero-mean fields, with the constant direction pinned at the
/// sentinel value. `potential` is the pointwise linearization of the
/// nonlinear term about the profile.
pub fn assemble_operator(grid: Grid, potential: &[f64], omega: f64) -> Result<OperatorMatrix> {
    let n = grid.n;
    if n > 4096 {
        return Err(OstError::OutOfRange(format!(
            "dense assembly capped at n = 4096, got {n}"
        )));
    }
    if potential.len() != n {
        return Err(OstError::OutOfRange(format!(
            "potential length {} does not match grid n {}",
            potential.len(),
            n
        )));
    }
    let nyq = grid.nyquist();
    let mut symbol = vec![0.0; nyq + 1];
    let mut sym_max = 0.0f64;
    for (k, s) in symbol.iter_mut().enumerate().skip(1) {
        let xi2 = grid.xi(k).powi(2);
        *s = xi2 + 1.0 / xi2 - omega;
        sym_max = sym_max.max(s.abs());
    }
    let sentinel = 4.0 * sym_max;
    let c0 = circulant_column(grid, &symbol);

    // A = circulant(symbol) - diag(potential)
    let mut a = vec![0.0f64; n * n];
    for j in 0..n {
        let col = &mut a[j * n..(j + 1) * n];
        for (i, ci) in col.iter_mut().enumerate() {
            *ci = c0[(n + i - j) % n];
        }
        col[j] -= potential[j];
    }

    // PAP with P = I - ones/n, done via row/column/total means.
    let mut row_mean = vec![0.0f64; n];
    let mut col_mean = vec![0.0f64; n];
    let mut total = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = a[j * n + i];
            row_mean[i] += v;
            col_mean[j] += v;
            total += v;
        }
    }
    for m in row_mean.iter_mut().chain(col_mean.iter_mut()) {
        *m /= n as f64;
    }
    total /= (n * n) as f64;
    let mut data = vec![0.0f64; n * n];
    for j in 0..n {
        for i in 0..n {
            let papij = a[j * n + i] - row_mean[i] - col_mean[j] + total;
            data[j * n + i] = papij;
        }
    }
    // exact symmetrization, then pin the constant direction
    for j in 0..n {
        for i in 0..j {
            let s = 0.5 * (data[j * n + i] + data[i * n + j]);
            data[j * n + i] = s;
            data[i * n + j] = s;
        }
    }
    let pin = sentinel / n as f64;
    for v in data.iter_mut() {
        *v += pin;
    }
    Ok(OperatorMatrix {
        grid,
        data,
        sentinel,
    })
}

/// Assemble the operator linearized about a solved profile.
pub fn assemble_about(profile: &WaveProfile) -> Result<OperatorMatrix> {
    let pot = profile.model.potential_field(&profile.phi);
    assemble_operator(profile.grid(), &pot.values, profile.omega)
}

/// Direct spectral action of the same operator on a zero-mean field
/// (multiplier part plus potential, re-projected). Used to cross-check the
/// dense assembly.
pub fn operator_action(
    grid: Grid,
    potential: &[f64],
    omega: f64,
    h: &Field,
) -> Result<Field> {
    if !h.grid.same_as(&grid) {
        return Err(OstError::GridMismatch(
            h.grid.half_length,
            h.grid.n,
            grid.half_length,
            grid.n,
        ));
    }
    let nyq = grid.nyquist();
    let mut spec = h.spectrum();
    spec[0] = Complex64::new(0.0, 0.0);
    for (k, c) in spec.iter_mut().enumerate().take(nyq + 1).skip(1) {
        let xi2 = grid.xi(k).powi(2);
        *c *= xi2 + 1.0 / xi2 - omega;
    }
    let mut w = Field::new(grid, crate::fft::irfft(spec, grid.n))?;
    for (wv, (pv, hv)) in w.values.iter_mut().zip(potential.iter().zip(&h.values)) {
        *wv -= pv * hv;
    }
    Ok(project_zero_mean(&w))
}

/// Eigendecomposition of the projected operator with the pinned constant
/// direction removed.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub grid: Grid,
    /// Ascending, constant direction dropped (length n - 1).
    pub eigenvalues: Vec<f64>,
    /// l2-orthonormal eigenvectors matching `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Kernel threshold: 1e-6 times the largest retained |eigenvalue|.
    pub threshold: f64,
    pub n_minus: usize,
    pub kernel_dim: usize,
}

/// Diagonalize and strip the sentinel direction (the eigenvector with the
/// largest overlap with the constant vector).
pub fn symmetric_spectrum(op: &OperatorMatrix) -> Result<SymmetricSpectrum> {
    let n = op.n();
    let (vals, vecs) = lapack::sym_eigen(&op.data, n)?;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut const_idx = 0usize;
    let mut best = -1.0f64;
    for (j, v) in vecs.iter().enumerate() {
        let ov = (v.iter().sum::<f64>() * inv_sqrt_n).abs();
        if ov > best {
            best = ov;
            const_idx = j;
        }
    }
    let mut eigenvalues = Vec::with_capacity(n - 1);
    let mut eigenvectors = Vec::with_capacity(n - 1);
    for (j, (val, vec)) in vals.into_iter().zip(vecs).enumerate() {
        if j == const_idx {
            continue;
        }
        eigenvalues.push(val);
        eigenvectors.push(vec);
    }
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let threshold = 1e-6 * max_abs;
    let n_minus = eigenvalues.iter().filter(|&&v| v < -threshold).count();
    let kernel_dim = eigenvalues.iter().filter(|&&v| v.abs() <= threshold).count();
    Ok(SymmetricSpectrum {
        grid: op.grid,
        eigenvalues,
        eigenvectors,
        threshold,
        n_minus,
        kernel_dim,
    })
}

/// Translation-kernel and weak-nondegeneracy diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    pub kernel_dim: usize,
    /// Norm of the projection of normalized phi' onto the span of all
    /// kernel modes. Basis-invariant: near-degenerate kernel pairs are
    /// returned by the eigensolver in an arbitrary rotation, so single-
    /// vector overlaps are meaningless when kernel_dim > 1.
    pub best_overlap: f64,
    /// 1 - best_overlap: zero when the kernel span contains the translation
    /// mode; near one when the kernel misses it entirely.
    pub kov: f64,
    /// ||L phi'|| / ||phi'|| measured spectrally.
    pub translation_residual: f64,
}

/// Check that the kernel of the second variation contains the translation
/// mode and nothing unexplained: weak nondegeneracy holds when the kernel
/// span accounts for translation (kov small).
pub fn weak_nondegeneracy(
    spec: &SymmetricSpectrum,
    model: &Model,
    u: &Field,
    omega: f64,
) -> Result<KernelReport> {
    let uprime = crate::grid::deriv(u, 1)?;
    let nu = norm_l2(&uprime);
    if nu == 0.0 {
        return Err(OstError::DegenerateProfile("constant profile".into()));
    }
    let pot = model.potential_field(u);
    let lup = operator_action(u.grid, &pot.values, omega, &uprime)?;
    let translation_residual = norm_l2(&lup) / nu;

    let tnorm: f64 = uprime.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let t: Vec<f64> = uprime.values.iter().map(|v| v / tnorm).collect();
    let mut proj_sq = 0.0f64;
    for (val, vec) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
        if val.abs() <= spec.threshold {
            let ov: f64 = vec.iter().zip(&t).map(|(a, b)| a * b).sum();
            proj_sq += ov * ov;
        }
    }
    let best_overlap = proj_sq.min(1.0).sqrt();
    let kov = if spec.kernel_dim == 0 {
        1.0
    } else {
        1.0 - best_overlap
    };
    Ok(KernelReport {
        kernel_dim: spec.kernel_dim,
        best_overlap,
        kov,
        translation_residual,
    })
}

/// Slope quantity from the spectral decomposition of L Q = phi.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeReport {
    /// <Q, phi> with L Q = phi solved over the non-kernel eigenspace.
    pub vk: f64,
    /// Fraction of phi's l2 mass lying in kernel modes.
    pub kernel_fraction: f64,
    /// Self-consistency |<L Q, Q> - <Q, phi>| / |<Q, phi>|.
    pub q_rel: f64,
}

/// Solve L Q = phi in the eigenbasis (kernel modes excluded) and return
/// vk = <Q, phi>. Errs with KernelContamination when phi has more than
/// `contamination_tol` of its mass in kernel modes, since the solve is then
/// meaningless.
pub fn vk_quantity(
    spec: &SymmetricSpectrum,
    u: &Field,
    contamination_tol: f64,
) -> Result<SlopeReport> {
    if !u.grid.same_as(&spec.grid) {
        return Err(OstError::GridMismatch(
            u.grid.half_length,
            u.grid.n,
            spec.grid.half_length,
            spec.grid.n,
        ));
    }
    let dx = spec.grid.spacing();
    let mut mass_total = 0.0f64;
    let mut mass_kernel = 0.0f64;
    let mut vk = 0.0f64;
    let mut q_quad = 0.0f64; // <L Q, Q> = sum c^2 / ev as well; use reconstruction
    for (val, vec) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
        let c: f64 = vec.iter().zip(&u.values).map(|(a, b)| a * b).sum();
        let c2 = c * c;
        mass_total += c2;
        if val.abs() <= spec.threshold {
            mass_kernel += c2;
        } else {
            vk += c2 / val;
            q_quad += c2 / val;
        }
    }
    if mass_total <= 0.0 {
        return Err(OstError::SolveFailure("zero profile in slope solve".into()));
    }
    let kernel_fraction = mass_kernel / mass_total;
    if kernel_fraction > contamination_tol {
        return Err(OstError::KernelContamination(kernel_fraction));
    }
    vk *= dx;
    q_quad *= dx;
    let q_rel = (q_quad - vk).abs() / vk.abs().max(1e-300);
    Ok(SlopeReport {
        vk,
        kernel_fraction,
        q_rel,
    })
}

/// Antisymmetric circulant applying the first derivative.
pub fn dx_matrix(grid: Grid) -> Vec<f64> {
    let n = grid.n;
    let nyq = grid.nyquist();
    let mut spec = vec![Complex64::new(0.0, 0.0); nyq + 1];
    for (k, c) in spec.iter_mut().enumerate().take(nyq).skip(1) {
        *c = Complex64::new(0.0, grid.xi(k));
    }
    let c0 = crate::fft::irfft(spec, n);
    let mut d = vec![0.0f64; n * n];
    for j in 0..n {
        for i in 0..n {
            d[j * n + i] = c0[(n + i - j) % n];
        }
    }
    d
}

/// One mode of the full linearization spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullMode {
    pub re: f64,
    pub im: f64,
    /// Participation ratio in [1/n, 1]; small means localized.
    pub participation: f64,
    pub localized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullSpectrum {
    pub modes: Vec<FullMode>,
    /// Largest real part over localized modes (0 when none are localized).
    pub max_real_localized: f64,
    /// Largest |imaginary part| over all modes: the natural scale.
    pub scale: f64,
    /// Worst min-distance defect under conjugation and negation symmetry,
    /// relative to scale.
    pub symmetry_defect: f64,
    /// ||B z - lambda z|| / (||z|| max(1, |lambda|)) for the ten largest
    /// |Re| modes.
    pub top_residuals: Vec<f64>,
}

/// Full linearization spectrum: eigenvalues of d/dx composed with the
/// second variation, with a participation-ratio filter separating localized
/// candidate modes from discretized continuum.
pub fn full_linearization_spectrum(
    op: &OperatorMatrix,
    pr_cutoff: f64,
) -> Result<FullSpectrum> {
    let n = op.n();
    let d = dx_matrix(op.grid);
    // remove the sentinel rank-one piece; d annihilates constants anyway,
    // but only up to roundoff scaled by the sentinel
    let pin = op.sentinel / n as f64;
    let mut m = op.data.clone();
    for v in m.iter_mut() {
        *v -= pin;
    }
    // B = D * M, column by column
    let mut b = vec![0.0f64; n * n];
    for j in 0..n {
        let mcol = &m[j * n..(j + 1) * n];
        let bcol = &mut b[j * n..(j + 1) * n];
        for (k, &mkj) in mcol.iter().enumerate() {
            if mkj == 0.0 {
                continue;
            }
            let dcol = &d[k * n..(k + 1) * n];
            for (bi, &dik) in bcol.iter_mut().zip(dcol) {
                *bi += dik * mkj;
            }
        }
    }
    let (vals, vecs) = lapack::gen_eigen(&b, n)?;

    let mut modes = Vec::with_capacity(n);
    let mut scale = 0.0f64;
    for ((re, im), (zr, zi)) in vals.iter().zip(&vecs) {
        let mut s2 = 0.0f64;
        let mut s4 = 0.0f64;
        for (a, bimag) in zr.iter().zip(zi) {
            let z2 = a * a + bimag * bimag;
            s2 += z2;
            s4 += z2 * z2;
        }
        let participation = if s4 > 0.0 {
            s2 * s2 / (n as f64 * s4)
        } else {
            1.0
        };
        scale = scale.max(im.abs());
        modes.push(FullMode {
            re: *re,
            im: *im,
            participation,
            localized: participation < pr_cutoff,
        });
    }
    let max_real_localized = modes
        .iter()
        .filter(|m| m.localized)
        .fold(0.0f64, |acc, m| acc.max(m.re));

    // symmetry defect: every eigenvalue should have partners at -conj and
    // conj within roundoff of the spectral scale
    let pts: Vec<(f64, f64)> = modes.iter().map(|m| (m.re, m.im)).collect();
    let mut symmetry_defect = 0.0f64;
    for &(re, im) in &pts {
        let mut d1 = f64::INFINITY;
        let mut d2 = f64::INFINITY;
        for &(qr, qi) in &pts {
            let a = ((qr + re).powi(2) + (qi - im).powi(2)).sqrt();
            let b2 = ((qr - re).powi(2) + (qi + im).powi(2)).sqrt();
            d1 = d1.min(a);
            d2 = d2.min(b2);
        }
        symmetry_defect = symmetry_defect.max(d1.max(d2));
    }
    symmetry_defect /= scale.max(1e-300);

    // eigenvector residuals for the ten largest |Re|
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&i, &j| {
        modes[j]
            .re
            .abs()
            .partial_cmp(&modes[i].re.abs())
            .unwrap()
    });
    let matvec = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let colb = &b[j * n..(j + 1) * n];
            for (o, &cv) in out.iter_mut().zip(colb) {
                *o += cv * xj;
            }
        }
        out
    };
    let mut top_residuals = Vec::new();
    for &idx in order.iter().take(10) {
        let (zr, zi) = &vecs[idx];
        let (lr, li) = (modes[idx].re, modes[idx].im);
        let bzr = matvec(zr);
        let bzi = matvec(zi);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            let rr = bzr[i] - (lr * zr[i] - li * zi[i]);
            let ri = bzi[i] - (lr * zi[i] + li * zr[i]);
            num += rr * rr + ri * ri;
            den += zr[i] * zr[i] + zi[i] * zi[i];
        }
        let lam_mag = (lr * lr + li * li).sqrt();
        top_residuals.push((num / den.max(1e-300)).sqrt() / lam_mag.max(1.0));
    }
    Ok(FullSpectrum {
        modes,
        max_real_localized,
        scale,
        symmetry_defect,
        top_residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Stable => write!(f, "stable"),
            Verdict::Unstable => write!(f, "unstable"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub pr_cutoff: f64,
    pub tol_kov: f64,
    /// Slope tolerance relative to the squared profile norm (lambda).
    pub tol_vk_rel: f64,
    /// Growth-rate tolerance relative to the spectral scale.
    pub tol_unstable_rel: f64,
    pub contamination_tol: f64,
    pub with_full_spectrum: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            pr_cutoff: 0.25,
            tol_kov: 1e-4,
            tol_vk_rel: 1e-8,
            tol_unstable_rel: 1e-6,
            contamination_tol: 1e-6,
            with_full_spectrum: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub omega: f64,
    pub lambda: f64,
    pub n_minus: usize,
    pub kernel: KernelReport,
    /// |<L phi, phi> + (p-1) int N(phi) phi| / normalizer: the profile is an
    /// exact generalized eigenfunction of its own linearization.
    pub quad_identity_residual: f64,
    pub slope: Option<SlopeReport>,
    /// Set when the slope solve was refused (kernel contamination).
    pub slope_note: Option<String>,
    pub full: Option<FullSpectrum>,
    pub verdict: Verdict,
}

/// Classification logic shared by the report builder and the tests.
pub fn classify(
    n_minus: usize,
    kov: f64,
    slope: Option<f64>,
    max_real_localized: Option<f64>,
    scale: f64,
    lambda: f64,
    opts: &StabilityOptions,
) -> Verdict {
    if let Some(mr) = max_real_localized {
        if mr > opts.tol_unstable_rel * scale.max(1e-300) {
            return Verdict::Unstable;
        }
    }
    let tol_vk = opts.tol_vk_rel * lambda;
    match slope {
        Some(vk) if n_minus == 1 && kov <= opts.tol_kov && vk < -tol_vk => Verdict::Stable,
        _ => Verdict::Inconclusive,
    }
}

/// Full stability analysis of a solved profile.
pub fn stability_report(
    profile: &WaveProfile,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let op = assemble_about(profile)?;
    let spec = symmetric_spectrum(&op)?;
    let kernel = weak_nondegeneracy(&spec, &profile.model, &profile.phi, profile.omega)?;

    // quadratic identity: L phi = -(p-1) N(phi), so
    // <L phi, phi> = -(p-1) int N(phi) phi
    let pot = profile.model.potential_field(&profile.phi);
    let lphi = operator_action(profile.grid(), &pot.values, profile.omega, &profile.phi)?;
    let lhs = inner(&lphi, &profile.phi)?;
    let nphi = profile.model.nonlin_field(&profile.phi);
    let rhs = -(profile.model.p - 1.0) * inner(&nphi, &profile.phi)?;
    let quad_identity_residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);

    let (slope, slope_note) = match vk_quantity(&spec, &profile.phi, opts.contamination_tol) {
        Ok(s) => (Some(s), None),
        Err(OstError::KernelContamination(f)) => (
            None,
            Some(format!(
                "slope solve refused: {f:.3e} of the profile mass lies in kernel modes"
            )),
        ),
        Err(e) => return Err(e),
    };
    let full = if opts.with_full_spectrum {
        Some(full_linearization_spectrum(&op, opts.pr_cutoff)?)
    } else {
        None
    };
    let verdict = classify(
        spec.n_minus,
        kernel.kov,
        slope.as_ref().map(|s| s.vk),
        full.as_ref().map(|f| f.max_real_localized),
        full.as_ref().map(|f| f.scale).unwrap_or(0.0),
        profile.lambda,
        opts,
    );
    Ok(StabilityReport {
        omega: profile.omega,
        lambda: profile.lambda,
        n_minus: spec.n_minus,
        kernel,
        quad_identity_residual,
        slope,
        slope_note,
        full,
        verdict,
    })
}
