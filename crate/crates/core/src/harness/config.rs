//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "algorithm": "sgd",
//!   "problem": { "kind": "tanh_composite" },
//!   "data": { "mu": { "points": [[0.5, 0.0], [-0.5, 0.0]] } },
//!   "n_T": 200, "n_V": 200,
//!   "sgd": { "epsilon": 0.2, "m": 10, "c": 0.5 },
//!   "trials": 200, "master_seed": 7
//! }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsgd::Topology;
use crate::error::{invalid, Result};
use crate::measures::EmpiricalMeasure;
use crate::problems::LossKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sgd,
    Dsgd,
    Svrg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Dsgd => "dsgd",
            Algorithm::Svrg => "svrg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: LossKind,
    /// Target radius `J` for the tanh problem; defaults to the largest
    /// target norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub points: Vec<Vec<f64>>,
    /// Uniform when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<EmpiricalMeasure> {
        match &self.weights {
            Some(w) => EmpiricalMeasure::new(self.points.clone(), w.clone()),
            None => EmpiricalMeasure::uniform(self.points.clone()),
        }
    }
}

/// Where the training and validation sets come from. Either both dataset
/// files are given, or a distribution `mu` (inline or CSV) from which `n_T`
/// and `n_V` points are drawn once per experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BiasSpec {
    Zero,
    /// AR(1) bias with `beta = eta * rate`.
    Ar1 { alpha: f64, rate: f64 },
}

impl Default for BiasSpec {
    fn default() -> Self {
        BiasSpec::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdSpec {
    pub epsilon: f64,
    pub m: u64,
    /// Explicit step size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Step-size constant for the default schedule; used when `eta` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u64>,
    #[serde(default)]
    pub bias: BiasSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsgdSpec {
    pub epsilon: f64,
    pub m: u64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_weight: Option<f64>,
    /// Header-less CSV connectivity matrix; overrides `topology`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrgSpec {
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<u64>,
}

/// Sizes and trial count for the `generalize` command. The algorithm is SVRG
/// (from the `svrg` section) or SGD (from `sgd`), following `algorithm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralizeSpec {
    #[serde(rename = "n_T")]
    pub n_t: Vec<usize>,
    /// Sample sizes for the concentration check of `d_2(mu, mu_N)^2`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub concentration_n: Vec<usize>,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
}

fn default_resamples() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub problem: ProblemSpec,
    pub data: DataSpec,
    #[serde(rename = "n_T", default)]
    pub n_t: usize,
    #[serde(rename = "n_V", default)]
    pub n_v: usize,
    /// Initial point; all ones when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd: Option<SgdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsgd: Option<DsgdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svrg: Option<SvrgSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generalize: Option<GeneralizeSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Directory for relative paths; set by [`ExperimentConfig::from_path`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_trials() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Structural checks; numeric checks of nested configs happen when the
    /// experiment is prepared.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        let d = &self.data;
        let has_mu = d.mu.is_some() || d.mu_path.is_some();
        if d.mu.is_some() && d.mu_path.is_some() {
            return Err(invalid("give either data.mu or data.mu_path, not both"));
        }
        if d.train_path.is_none() && !has_mu {
            return Err(invalid("data needs mu, mu_path or train_path"));
        }
        if d.train_path.is_none() && self.n_t == 0 {
            return Err(invalid("n_T must be >= 1 when sampling from mu"));
        }
        let needs_v = self.algorithm != Algorithm::Svrg;
        if needs_v && d.validation_path.is_none() && (!has_mu || self.n_v == 0) {
            return Err(invalid("validation set needs validation_path, or mu with n_V >= 1"));
        }
        for p in [&d.mu_path, &d.train_path, &d.validation_path].into_iter().flatten() {
            let full = self.resolve(p);
            if !full.exists() {
                return Err(invalid(format!("data file {} does not exist", full.display())));
            }
        }
        let present = match self.algorithm {
            Algorithm::Sgd => self.sgd.is_some(),
            Algorithm::Dsgd => self.dsgd.is_some(),
            Algorithm::Svrg => self.svrg.is_some(),
        };
        if !present {
            return Err(invalid(format!("missing \"{}\" section", self.algorithm.name())));
        }
        Ok(())
    }
}
