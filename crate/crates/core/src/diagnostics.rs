//! Property battery behind the `diagnostics` command.

use std::f64::consts::PI;

use serde::Serialize;

use crate::analysis::rate_regression;
use crate::error::Result;
use crate::fem1d::{assemble, closed_form_eigenvalue, norm_relation_check, Mesh, Rotation};
use crate::noise::{coarsen, ito_isometry_check, sample_path, NoiseSpec, PathTable};
use crate::schemes::{paper_nonlinearity, run_final_with, Integrator, ModelProblem, OperatorOrdering};
use crate::spectral::{holder_deviation, hs_norm, SpectralField, TrigKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, measured, threshold, detail: detail.into() }
    }
}

/// Options for [`run_all`].
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsOptions {
    pub seed: u64,
    pub rotation: Rotation,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { seed: 1, rotation: Rotation::Exact }
    }
}

/// Relative drift of the combined M-norm over `n_steps` noise-free linear
/// steps of size `k` on `n_cells` cells.
pub fn unitarity_drift(n_cells: usize, k: f64, n_steps: usize, rotation: Rotation) -> Result<f64> {
    let sys = assemble(&Mesh::new(n_cells)?)?;
    let noise = NoiseSpec::new(2.0, 1)?.with_intensity(0.0);
    let problem = ModelProblem::linear(noise, k * n_steps as f64)?;
    let integ = Integrator::new(&sys, 1, OperatorOrdering::default()).with_rotation(rotation);
    let path = PathTable::zeros(1, problem.final_time, n_steps)?;
    let start = sys.combined_norm(&problem.initial_pair(&sys)?);
    let end = sys.combined_norm(&run_final_with(&problem, &integ, &path)?.pair);
    Ok((end - start).abs() / start)
}

pub fn check_unitarity(rotation: Rotation) -> Result<CheckResult> {
    let drift = unitarity_drift(64, 1.0 / 64.0, 1000, rotation)?;
    Ok(CheckResult::new(
        "unitarity",
        drift <= 1e-9,
        drift,
        1e-9,
        "relative drift of combined M-norm, N=64, k=2^-6, 1000 steps",
    ))
}

pub fn check_eigenvalues() -> Result<Vec<CheckResult>> {
    let mut worst = 0.0f64;
    let mut first_errors = Vec::new();
    let mut hs = Vec::new();
    for p in 3..=8 {
        let n = 1usize << p;
        let sys = assemble(&Mesh::new(n)?)?;
        for (i, &l) in sys.eig_values().iter().enumerate() {
            let exact = closed_form_eigenvalue(i + 1, n);
            worst = worst.max((l - exact).abs() / exact);
        }
        if n <= 64 {
            hs.push(1.0 / n as f64);
            first_errors.push(sys.eig_values()[0] - PI * PI);
        }
    }
    let slope = rate_regression(&hs, &first_errors)?.slope;
    Ok(vec![
        CheckResult::new("eigenvalues-closed-form", worst <= 1e-8, worst, 1e-8, "max relative deviation, N = 8..256"),
        CheckResult::new(
            "eigenvalue-convergence",
            (slope - 2.0).abs() <= 0.1,
            slope,
            2.0,
            "log-log slope of |lambda_h1 - pi^2|, N = 8..64 (tolerance 0.1)",
        ),
    ])
}

pub fn check_hs_sum() -> Result<CheckResult> {
    let v = hs_norm(0.0, 2.0, 10_000).powi(2);
    let err = (v - 1.0 / 90.0).abs();
    Ok(CheckResult::new("hs-sum", err <= 1e-6, err, 1e-6, "|hs_norm(0,2,1e4)^2 - 1/90|"))
}

/// Gaps used for Hölder slope fits; small enough that many modes satisfy
/// `λ·gap ≈ 1` within the truncation `J = 1000`.
pub const HOLDER_GAP_EXPONENTS: std::ops::RangeInclusive<i32> = 8..=16;
pub const HOLDER_BASE_TIME: f64 = 0.25;
pub const HOLDER_MODES: usize = 1000;

pub fn holder_slope(theta: f64, kind: TrigKind) -> Result<f64> {
    let gaps: Vec<f64> = HOLDER_GAP_EXPONENTS.map(|p| 2f64.powi(-p)).collect();
    let devs = gaps
        .iter()
        .map(|g| holder_deviation(HOLDER_BASE_TIME + g, HOLDER_BASE_TIME, theta, kind, HOLDER_MODES))
        .collect::<Result<Vec<_>>>()?;
    Ok(rate_regression(&gaps, &devs)?.slope)
}

pub fn check_holder() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for theta in [0.5, 1.0, 2.0] {
        for kind in [TrigKind::Sine, TrigKind::Cosine] {
            let slope = holder_slope(theta, kind)?;
            let bound = theta / 2.0 - 0.1;
            out.push(CheckResult::new(
                format!("holder-{kind:?}-theta{theta}").to_lowercase(),
                slope >= bound,
                slope,
                bound,
                "log-log slope over gaps 2^-8..2^-16",
            ));
        }
    }
    Ok(out)
}

/// Largest |z| of per-mode sample variances of single-step increments
/// against `k·γ_j`.
pub fn increment_variance_z(spec: &NoiseSpec, k: f64, n_samples: usize, seed: u64) -> Result<f64> {
    use rayon::prelude::*;
    let sums: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let p = sample_path(spec, k, 1, seed, i as u64)?;
            let inc = &p.increments()[0];
            Ok(inc.dw1.iter().map(|x| x * x).collect())
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mut worst = 0.0f64;
    for j in 0..spec.num_modes {
        let v = sums.iter().map(|s| s[j]).sum::<f64>() / n;
        let expected = k * spec.mode_variance(j + 1);
        let sd = expected * (2.0 / n).sqrt();
        worst = worst.max(((v - expected) / sd).abs());
    }
    Ok(worst)
}

pub fn check_noise(seed: u64) -> Result<Vec<CheckResult>> {
    let spec = NoiseSpec::new(2.501, 100)?;
    let z = increment_variance_z(&spec, 1.0 / 64.0, 100_000, seed)?;
    let iso_spec = NoiseSpec::new(2.501, 8)?;
    let lambdas: Vec<f64> = (1..=8).map(|j| ((j as f64) * PI).powi(2)).collect();
    let report = ito_isometry_check(&iso_spec, |j, t| (t * lambdas[j - 1]).cos(), 1.0, 10_000, 256, seed)?;
    Ok(vec![
        CheckResult::new("noise-variance", z <= 3.0, z, 3.0, "max |z| of per-mode variance, s=2.501, J=100, 1e5 samples"),
        CheckResult::new(
            "ito-isometry",
            report.z_score.abs() <= 3.0,
            report.z_score.abs(),
            3.0,
            format!("MC {:.6e} vs analytic {:.6e}", report.monte_carlo, report.analytic),
        ),
    ])
}

/// Largest value of the operator relation over unit spectral vectors.
pub fn norm_relation_max(gamma: f64, n_cells: usize) -> Result<f64> {
    let sys = assemble(&Mesh::new(n_cells)?)?;
    let modes = 2 * n_cells;
    let mut worst = 0.0f64;
    for j in 1..=modes {
        worst = worst.max(norm_relation_check(&SpectralField::unit(j, modes)?, gamma, &sys)?);
    }
    Ok(worst)
}

pub fn check_norm_relation() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for gamma in [-0.5, 0.0, 0.5, 1.0] {
        let worst = norm_relation_max(gamma, 16)?.max(norm_relation_max(gamma, 64)?);
        out.push(CheckResult::new(
            format!("norm-relation-gamma{gamma}"),
            worst <= 1.0 + 1e-6,
            worst,
            1.0 + 1e-6,
            "max over unit spectral vectors j <= 2N, N in {16, 64}",
        ));
    }
    Ok(out)
}

pub fn check_lipschitz(seed: u64) -> CheckResult {
    let r = paper_nonlinearity().validate_lipschitz(10_000, seed);
    CheckResult::new(
        "lipschitz",
        r.holds,
        r.max_quotient_g.max(r.max_quotient_f),
        1.0,
        "combined difference quotient of g and f on [-10,10]^2",
    )
}

pub fn check_coarsening(seed: u64) -> Result<CheckResult> {
    let spec = NoiseSpec::new(1.5, 16)?;
    let p = sample_path(&spec, 1.0, 64, seed, 0)?;
    let same = coarsen(&coarsen(&p, 2)?, 4)? == coarsen(&p, 8)?;
    Ok(CheckResult::new(
        "coarsening-composes",
        same,
        if same { 0.0 } else { 1.0 },
        0.0,
        "coarsen(coarsen(p,2),4) == coarsen(p,8) bitwise",
    ))
}

/// Runs the full battery.
pub fn run_all(opts: DiagnosticsOptions) -> Result<Vec<CheckResult>> {
    let mut out = vec![check_unitarity(opts.rotation)?];
    out.extend(check_eigenvalues()?);
    out.push(check_hs_sum()?);
    out.extend(check_holder()?);
    out.extend(check_noise(opts.seed)?);
    out.extend(check_norm_relation()?);
    out.push(check_lipschitz(opts.seed));
    out.push(check_coarsening(opts.seed)?);
    Ok(out)
}
