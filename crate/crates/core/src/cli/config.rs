//! TOML run configuration.
//!
//! ```toml
//! theta = 2.0
//! s = 2.501
//! levels = [0.25, 0.125, 0.0625, 0.03125]
//! ref_level = 0.00390625
//! fixed_k = 0.015625        # spatial study; use fixed_h for a temporal one
//! n_samples = 200
//! seed = 1
//! J = 256
//! T = 1.0
//! problem = "semilinear"    # or "linear"
//! correlated_noise = false
//! operator_ordering = "project-then-multiply"
//! reference = "numerical"   # or "exact" (linear temporal studies only)
//! ```
//!
//! `single-path` reads `fixed_h`, `fixed_k`, `s`, `J`, `T`, `problem`,
//! `seed`, `snapshots` and optionally `noise_intensity`.

use std::path::Path;

use serde::Deserialize;

use crate::analysis::{ExperimentConfig, ProblemKind, ReferenceKind, Study};
use crate::error::{Error, Result};
use crate::schemes::OperatorOrdering;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub theta: Option<f64>,
    pub s: Option<f64>,
    pub levels: Option<Vec<f64>>,
    pub ref_level: Option<f64>,
    pub fixed_h: Option<f64>,
    pub fixed_k: Option<f64>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    #[serde(rename = "J")]
    pub num_modes: Option<usize>,
    #[serde(rename = "T")]
    pub final_time: Option<f64>,
    pub problem: Option<ProblemKind>,
    pub correlated_noise: Option<bool>,
    pub operator_ordering: Option<OperatorOrdering>,
    pub reference: Option<ReferenceKind>,
    pub snapshots: Option<Vec<f64>>,
    pub noise_intensity: Option<f64>,
}

fn require<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("missing key `{key}`")))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds and validates the experiment for `study`.
    pub fn experiment(&self, study: Study) -> Result<ExperimentConfig> {
        let fixed_other = match study {
            Study::Spatial => require(self.fixed_k, "fixed_k")?,
            Study::Temporal => require(self.fixed_h, "fixed_h")?,
        };
        let cfg = ExperimentConfig {
            study,
            theta: require(self.theta, "theta")?,
            s: require(self.s, "s")?,
            levels: require(self.levels.clone(), "levels")?,
            ref_level: require(self.ref_level, "ref_level")?,
            fixed_other,
            n_samples: require(self.n_samples, "n_samples")?,
            seed: self.seed.unwrap_or(0),
            num_modes: require(self.num_modes, "J")?,
            final_time: self.final_time.unwrap_or(1.0),
            problem: self.problem.unwrap_or_default(),
            correlated_noise: self.correlated_noise.unwrap_or(false),
            operator_ordering: self.operator_ordering.unwrap_or_default(),
            reference: self.reference.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
