//! Coupled-path Monte Carlo strong errors and log-log rate regression.
//!
//! Every sample draws one Brownian path at the finest time step in play.
//! The reference and all coarse solutions consume that path (coarsened where
//! needed), and the reference is restricted to each coarse mesh by taking its
//! values at the coarse nodes.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::fem1d::{assemble, FemPair, FemSystem, Mesh};
use crate::noise::{coarsen, sample_path, NoiseSpec, PathTable};
use crate::schemes::{self, ExactLinearSampler, Integrator, ModelProblem, OperatorOrdering};

/// Number of mesh cells and time steps of one discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Resolution {
    pub n_cells: usize,
    pub n_steps: usize,
}

impl Resolution {
    pub fn new(n_cells: usize, n_steps: usize) -> Self {
        Self { n_cells, n_steps }
    }
}

/// What the coarse solutions are compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// The scheme itself at a finer resolution.
    Numerical(Resolution),
    /// Exact semi-discrete mild solution of the linear problem, on the
    /// level mesh, coupled through a path with `n_steps` steps.
    ExactLinear { n_steps: usize },
}

impl Reference {
    fn path_steps(&self) -> usize {
        match self {
            Reference::Numerical(r) => r.n_steps,
            Reference::ExactLinear { n_steps } => *n_steps,
        }
    }
}

/// Root-mean-square errors at the final time for one coarse resolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongError {
    pub resolution: Resolution,
    pub rms_re: f64,
    pub rms_im: f64,
    /// Root-sum-square of the two components.
    pub rms: f64,
    /// Monte Carlo standard error of `rms`.
    pub stderr: f64,
    pub n_samples: usize,
    pub excluded: usize,
}

/// Largest tolerated fraction of samples lost to blowup.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

fn restrict(fine: &FemPair, n_fine: usize, n_coarse: usize) -> FemPair {
    let r = n_fine / n_coarse;
    let pick = |v: &[f64]| (1..n_coarse).map(|i| v[i * r - 1]).collect::<Vec<_>>();
    FemPair {
        re: crate::fem1d::FemFunction::new(pick(&fine.re.nodal_values)),
        im: crate::fem1d::FemFunction::new(pick(&fine.im.nodal_values)),
    }
}

fn squared_errors(system: &FemSystem, coarse: &FemPair, reference: &FemPair) -> (f64, f64) {
    let diff = |a: &[f64], b: &[f64]| crate::fem1d::FemFunction::new(a.iter().zip(b).map(|(x, y)| x - y).collect());
    let dre = diff(&coarse.re.nodal_values, &reference.re.nodal_values);
    let dim = diff(&coarse.im.nodal_values, &reference.im.nodal_values);
    (system.mass_norm(&dre).powi(2), system.mass_norm(&dim).powi(2))
}

fn check_levels(problem: &ModelProblem, levels: &[Resolution], reference: &Reference) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::domain("no coarse resolutions given"));
    }
    let fine_steps = reference.path_steps();
    for lv in levels {
        if lv.n_steps == 0 || fine_steps % lv.n_steps != 0 {
            return Err(Error::domain(format!("{} steps do not divide the path's {fine_steps}", lv.n_steps)));
        }
        match reference {
            Reference::Numerical(r) => {
                if r.n_cells % lv.n_cells != 0 {
                    return Err(Error::domain(format!("reference mesh {} is not a refinement of {}", r.n_cells, lv.n_cells)));
                }
            }
            Reference::ExactLinear { .. } => {
                if !problem.is_linear() {
                    return Err(Error::domain("exact reference requires the linear problem"));
                }
                if lv.n_cells != levels[0].n_cells {
                    return Err(Error::domain("exact reference requires a common mesh for all levels"));
                }
            }
        }
    }
    Ok(())
}

/// Strong errors at `T` for all `levels` against `reference`, sharing one
/// Brownian path per sample across every resolution.
///
/// Results do not depend on the number of worker threads: per-sample errors
/// are collected in sample order and reduced sequentially.
pub fn coupled_strong_errors(
    problem: &ModelProblem,
    levels: &[Resolution],
    reference: Reference,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<StrongError>> {
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be positive"));
    }
    check_levels(problem, levels, &reference)?;

    let mut meshes: BTreeMap<usize, FemSystem> = BTreeMap::new();
    let mut need = levels.iter().map(|l| l.n_cells).collect::<Vec<_>>();
    if let Reference::Numerical(r) = reference {
        need.push(r.n_cells);
    }
    for n in need {
        if let std::collections::btree_map::Entry::Vacant(e) = meshes.entry(n) {
            e.insert(assemble(&Mesh::new(n)?)?);
        }
    }
    let integrators: BTreeMap<usize, Integrator<'_>> = meshes
        .iter()
        .map(|(&n, sys)| (n, Integrator::new(sys, problem.noise.num_modes, problem.ordering)))
        .collect();
    let fine_steps = reference.path_steps();
    let exact = match reference {
        Reference::ExactLinear { n_steps } => Some(ExactLinearSampler::new(
            &meshes[&levels[0].n_cells],
            &problem.noise,
            problem.final_time / n_steps as f64,
        )?),
        Reference::Numerical(_) => None,
    };

    let run_on = |res: Resolution, fine: &PathTable| -> Result<FemPair> {
        let factor = fine_steps / res.n_steps;
        let owned;
        let path = if factor == 1 {
            fine
        } else {
            owned = coarsen(fine, factor)?;
            &owned
        };
        Ok(schemes::run_final_with(problem, &integrators[&res.n_cells], path)?.pair)
    };

    let per_sample = |sample: usize| -> Result<Option<Vec<(f64, f64)>>> {
        let fine = sample_path(&problem.noise, problem.final_time, fine_steps, seed, sample as u64)?;
        let (ref_pair, ref_cells) = match (&reference, &exact) {
            (Reference::Numerical(r), _) => match run_on(*r, &fine) {
                Ok(p) => (p, r.n_cells),
                Err(Error::Blowup { .. }) => return Ok(None),
                Err(e) => return Err(e),
            },
            (Reference::ExactLinear { .. }, Some(sampler)) => {
                let sys = &meshes[&levels[0].n_cells];
                (schemes::exact_linear_mild_with(problem, sys, sampler, &fine)?, levels[0].n_cells)
            }
            _ => unreachable!("exact sampler is built whenever the reference is exact"),
        };
        let mut errs = Vec::with_capacity(levels.len());
        for &lv in levels {
            let coarse = match run_on(lv, &fine) {
                Ok(p) => p,
                Err(Error::Blowup { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let restricted = restrict(&ref_pair, ref_cells, lv.n_cells);
            errs.push(squared_errors(&meshes[&lv.n_cells], &coarse, &restricted));
        }
        Ok(Some(errs))
    };

    // Per sample: squared (real, imaginary) errors per level, or None after a blowup.
    type SampleErrors = Option<Vec<(f64, f64)>>;
    let results: Vec<Result<SampleErrors>> = (0..n_samples).into_par_iter().map(per_sample).collect();
    let mut kept: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_samples);
    let mut excluded = 0usize;
    for r in results {
        match r? {
            Some(e) => kept.push(e),
            None => excluded += 1,
        }
    }
    if excluded as f64 > MAX_EXCLUDED_FRACTION * n_samples as f64 {
        return Err(Error::Numerical(format!("{excluded} of {n_samples} samples blew up")));
    }
    if excluded > 0 {
        log::warn!("{excluded} of {n_samples} samples excluded after blowup");
    }
    let n = kept.len() as f64;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(li, &resolution)| {
            let (mut sre, mut sim) = (0.0, 0.0);
            for e in &kept {
                sre += e[li].0;
                sim += e[li].1;
            }
            let mean = (sre + sim) / n;
            let first = kept.first().map_or(0.0, |e| e[li].0 + e[li].1);
            let var = if kept.iter().all(|e| e[li].0 + e[li].1 == first) {
                0.0
            } else {
                kept.iter().map(|e| (e[li].0 + e[li].1 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
            };
            let rms = mean.sqrt();
            let stderr = if rms > 0.0 { var.sqrt() / (n.sqrt() * 2.0 * rms) } else { 0.0 };
            StrongError {
                resolution,
                rms_re: (sre / n).sqrt(),
                rms_im: (sim / n).sqrt(),
                rms,
                stderr,
                n_samples: kept.len(),
                excluded,
            }
        })
        .collect())
}

/// Single-resolution convenience wrapper around [`coupled_strong_errors`].
pub fn strong_error(
    problem: &ModelProblem,
    coarse: Resolution,
    reference: Reference,
    n_samples: usize,
    seed: u64,
) -> Result<StrongError> {
    Ok(coupled_strong_errors(problem, &[coarse], reference, n_samples, seed)?.remove(0))
}

/// Least-squares line through `(log₂ level, log₂ error)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub ci: f64,
}

pub fn rate_regression(levels: &[f64], errors: &[f64]) -> Result<RateFit> {
    if levels.len() != errors.len() {
        return Err(Error::domain("levels and errors differ in length"));
    }
    if levels.len() < 3 {
        return Err(Error::domain("rate regression needs at least three points"));
    }
    if let Some(bad) = levels.iter().chain(errors).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("non-positive entry {bad} in rate regression")));
    }
    let xs: Vec<f64> = levels.iter().map(|v| v.log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("levels must not all coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = n - 2.0;
    let t = if dof > 0.0 {
        StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Numerical(e.to_string()))?.inverse_cdf(0.975)
    } else {
        f64::INFINITY
    };
    let ci = if ssr == 0.0 { 0.0 } else { t * (ssr / dof / sxx).sqrt() };
    Ok(RateFit { slope, intercept, ci })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Spatial,
    Temporal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Linear,
    #[default]
    Semilinear,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    #[default]
    Numerical,
    /// Exact mild solution; linear problem and temporal study only.
    Exact,
}

/// Validated description of one convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub study: Study,
    pub theta: f64,
    pub s: f64,
    /// Varied mesh widths `h` (spatial) or step sizes `k` (temporal).
    pub levels: Vec<f64>,
    pub ref_level: f64,
    /// `k` for a spatial study, `h` for a temporal one.
    pub fixed_other: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub num_modes: usize,
    pub final_time: f64,
    pub problem: ProblemKind,
    pub correlated_noise: bool,
    pub operator_ordering: OperatorOrdering,
    pub reference: ReferenceKind,
}

fn dyadic_exponent(v: f64) -> Option<u32> {
    if !(v > 0.0 && v <= 1.0) {
        return None;
    }
    let e = -v.log2();
    let r = e.round();
    ((e - r).abs() < 1e-9).then_some(r as u32)
}

fn steps_for(final_time: f64, k: f64) -> Result<usize> {
    let n = final_time / k;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::config(format!("T = {final_time} is not an integer multiple of k = {k}")));
    }
    Ok(r as usize)
}

impl ExperimentConfig {
    /// Checks every constraint before any compute is allocated.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.theta) {
            return Err(Error::config(format!("theta = {} must lie in [0, 2]", self.theta)));
        }
        if !(self.s > self.theta + 0.5) {
            return Err(Error::config(format!(
                "finiteness criterion violated: need theta < s - 1/2, got theta = {}, s = {}",
                self.theta, self.s
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::config("n_samples must be positive"));
        }
        if self.num_modes == 0 {
            return Err(Error::config("J must be at least 1"));
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(Error::config(format!("T = {} must be positive", self.final_time)));
        }
        if self.levels.is_empty() {
            return Err(Error::config("levels must not be empty"));
        }
        for &v in self.levels.iter().chain([&self.ref_level, &self.fixed_other]) {
            if dyadic_exponent(v).is_none() {
                return Err(Error::config(format!("{v} is not a dyadic value 2^-m")));
            }
        }
        if let Some(v) = self.levels.iter().find(|v| **v <= self.ref_level) {
            return Err(Error::config(format!("ref_level {} must be strictly finer than level {v}", self.ref_level)));
        }
        if self.study == Study::Spatial && self.levels.iter().chain([&self.ref_level]).any(|h| *h > 0.5) {
            return Err(Error::config("mesh widths must be at most 1/2"));
        }
        if self.study == Study::Temporal && self.fixed_other > 0.5 {
            return Err(Error::config("mesh width h must be at most 1/2"));
        }
        let ks: Vec<f64> = match self.study {
            Study::Spatial => vec![self.fixed_other],
            Study::Temporal => self.levels.iter().chain([&self.ref_level]).copied().collect(),
        };
        for k in ks {
            steps_for(self.final_time, k)?;
        }
        if self.reference == ReferenceKind::Exact && (self.problem != ProblemKind::Linear || self.study != Study::Temporal) {
            return Err(Error::config("reference = exact requires problem = linear and a temporal study"));
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        Ok(NoiseSpec::new(self.s, self.num_modes)?.with_correlation(self.correlated_noise))
    }

    pub fn model_problem(&self) -> Result<ModelProblem> {
        let noise = self.noise()?;
        let p = match self.problem {
            ProblemKind::Linear => ModelProblem::linear(noise, self.final_time)?,
            ProblemKind::Semilinear => ModelProblem::paper(noise, self.final_time)?,
        };
        Ok(p.with_ordering(self.operator_ordering))
    }

    fn resolution(&self, level: f64) -> Result<Resolution> {
        Ok(match self.study {
            Study::Spatial => Resolution::new((1.0 / level).round() as usize, steps_for(self.final_time, self.fixed_other)?),
            Study::Temporal => Resolution::new((1.0 / self.fixed_other).round() as usize, steps_for(self.final_time, level)?),
        })
    }

    /// Coarse resolutions in the order of `levels`.
    pub fn resolutions(&self) -> Result<Vec<Resolution>> {
        self.levels.iter().map(|&l| self.resolution(l)).collect()
    }

    pub fn reference(&self) -> Result<Reference> {
        let r = self.resolution(self.ref_level)?;
        Ok(match self.reference {
            ReferenceKind::Numerical => Reference::Numerical(r),
            ReferenceKind::Exact => Reference::ExactLinear { n_steps: r.n_steps },
        })
    }

    /// Rate the theory predicts for the combined error.
    pub fn predicted_slope(&self) -> f64 {
        match (self.study, self.problem) {
            (Study::Spatial, _) => self.theta,
            (Study::Temporal, ProblemKind::Linear) => self.theta / 2.0,
            (Study::Temporal, ProblemKind::Semilinear) => (self.theta / 2.0).min(0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub level: f64,
    pub rms_re: f64,
    pub rms_im: f64,
    pub rms: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Errors per level, sorted by increasing level, with fitted rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorTable {
    pub study: Study,
    pub rows: Vec<ErrorRow>,
    pub slope_re: f64,
    pub slope_im: f64,
    /// Slope of the combined error; this is the rate checked against theory.
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: f64,
    pub excluded: usize,
}

impl ErrorTable {
    pub fn from_errors(study: Study, levels: &[f64], errors: &[StrongError]) -> Result<Self> {
        let mut rows: Vec<ErrorRow> = levels
            .iter()
            .zip(errors)
            .map(|(&level, e)| ErrorRow {
                level,
                rms_re: e.rms_re,
                rms_im: e.rms_im,
                rms: e.rms,
                stderr: e.stderr,
                n_samples: e.n_samples,
            })
            .collect();
        rows.sort_by(|a, b| a.level.total_cmp(&b.level));
        let lv: Vec<f64> = rows.iter().map(|r| r.level).collect();
        let fit = |ys: Vec<f64>| rate_regression(&lv, &ys);
        let re = fit(rows.iter().map(|r| r.rms_re).collect())?;
        let im = fit(rows.iter().map(|r| r.rms_im).collect())?;
        let comb = fit(rows.iter().map(|r| r.rms).collect())?;
        Ok(Self {
            study,
            rows,
            slope_re: re.slope,
            slope_im: im.slope,
            slope: comb.slope,
            intercept: comb.intercept,
            slope_ci: comb.ci,
            excluded: errors.first().map_or(0, |e| e.excluded),
        })
    }

    /// CSV with header `level,rms_re,rms_im,stderr,n_samples`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "level,rms_re,rms_im,stderr,n_samples")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.level, r.rms_re, r.rms_im, r.stderr, r.n_samples)?;
        }
        Ok(())
    }
}

/// Runs the study described by `config`.
pub fn run_study(config: &ExperimentConfig) -> Result<ErrorTable> {
    config.validate()?;
    let problem = config.model_problem()?;
    let levels = config.resolutions()?;
    let reference = config.reference()?;
    log::info!(
        "{:?} study: {} levels, reference {:?}, {} samples",
        config.study,
        levels.len(),
        reference,
        config.n_samples
    );
    let errors = coupled_strong_errors(&problem, &levels, reference, config.n_samples, config.seed)?;
    ErrorTable::from_errors(config.study, &config.levels, &errors)
}

pub fn spatial_study(config: &ExperimentConfig) -> Result<ErrorTable> {
    if config.study != Study::Spatial {
        return Err(Error::config("spatial_study needs a spatial configuration"));
    }
    run_study(config)
}

pub fn temporal_study(config: &ExperimentConfig) -> Result<ErrorTable> {
    if config.study != Study::Temporal {
        return Err(Error::config("temporal_study needs a temporal configuration"));
    }
    run_study(config)
}

/// Second moment of the solution at `t = 0` and at `T`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub initial: f64,
    pub final_mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Monte Carlo estimate of `E[‖U₁‖²_M + ‖U₂‖²_M]` at the final time.
pub fn second_moment(problem: &ModelProblem, res: Resolution, n_samples: usize, seed: u64) -> Result<MomentReport> {
    if n_samples < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let sys = assemble(&Mesh::new(res.n_cells)?)?;
    let integ = Integrator::new(&sys, problem.noise.num_modes, problem.ordering);
    let initial = sys.combined_norm(&problem.initial_pair(&sys)?).powi(2);
    let vals: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(&problem.noise, problem.final_time, res.n_steps, seed, i as u64)?;
            Ok(sys.combined_norm(&schemes::run_final_with(problem, &integ, &path)?.pair).powi(2))
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MomentReport { initial, final_mean: mean, stderr: (var / n).sqrt(), n_samples })
}

/// Mean-square increments `E‖U(t₀+g) − U(t₀)‖²_M` over dyadic gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementReport {
    pub gaps: Vec<f64>,
    pub mean_square: Vec<f64>,
    pub slope: f64,
}

/// Measures temporal regularity of the discrete solution on one fine
/// trajectory per sample. `gap_steps` are multiples of the step size.
pub fn temporal_increments(
    problem: &ModelProblem,
    res: Resolution,
    base_step: usize,
    gap_steps: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<IncrementReport> {
    let max_gap = gap_steps.iter().copied().max().unwrap_or(0);
    if base_step + max_gap > res.n_steps {
        return Err(Error::domain("gaps reach beyond the final time"));
    }
    let sys = assemble(&Mesh::new(res.n_cells)?)?;
    let per_sample: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(&problem.noise, problem.final_time, res.n_steps, seed, i as u64)?;
            let mut states = Vec::new();
            schemes::run_with(problem, &sys, &path, |s| {
                if s.step_index >= base_step && s.step_index <= base_step + max_gap {
                    states.push(s.pair.clone());
                }
            })?;
            Ok(gap_steps
                .iter()
                .map(|&g| {
                    let (a, b) = (&states[g], &states[0]);
                    let d = FemPair {
                        re: crate::fem1d::FemFunction::new(
                            a.re.nodal_values.iter().zip(&b.re.nodal_values).map(|(x, y)| x - y).collect(),
                        ),
                        im: crate::fem1d::FemFunction::new(
                            a.im.nodal_values.iter().zip(&b.im.nodal_values).map(|(x, y)| x - y).collect(),
                        ),
                    };
                    sys.combined_norm(&d).powi(2)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let k = problem.final_time / res.n_steps as f64;
    let gaps: Vec<f64> = gap_steps.iter().map(|&g| g as f64 * k).collect();
    let mean_square: Vec<f64> = (0..gap_steps.len())
        .map(|gi| per_sample.iter().map(|v| v[gi]).sum::<f64>() / n_samples as f64)
        .collect();
    let slope = rate_regression(&gaps, &mean_square)?.slope;
    Ok(IncrementReport { gaps, mean_square, slope })
}
