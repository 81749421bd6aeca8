//! Population-gradient estimates for early-stopped runs on data sampled from
//! a finite-support test distribution, and the matching bounds.
//!
//! With finite support, `f_G(x) = sum_k w_k f(y_k, x)` and its gradient are
//! exact sums, so every Monte Carlo claim here is checkable without
//! quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harness::stats::MeanCi;
use crate::measures::{self, EmpiricalMeasure};
use crate::problems::{FiniteSumObjective, LossFunction};
use crate::rng::{self, Stream};
use crate::run::RunRecord;
use crate::sgd::{self, BiasModel, SgdConfig};
use crate::svrg::{self, SvrgConfig};
use crate::vecops;

/// Finite-support stand-in for the data distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDistribution {
    mu: EmpiricalMeasure,
    j: f64,
}

impl TestDistribution {
    pub fn new(mu: EmpiricalMeasure) -> Result<Self> {
        let j = measures::third_moment(&mu)?;
        Ok(TestDistribution { mu, j })
    }

    pub fn measure(&self) -> &EmpiricalMeasure {
        &self.mu
    }

    /// `E ||y||^3`
    pub fn third_moment(&self) -> f64 {
        self.j
    }

    pub fn support_size(&self) -> usize {
        self.mu.len()
    }

    pub fn population_value(&self, loss: &LossFunction, x: &[f64]) -> f64 {
        self.mu
            .points()
            .zip(self.mu.weights())
            .map(|(y, w)| w * loss.value(y, x))
            .sum()
    }

    pub fn population_grad(&self, loss: &LossFunction, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; x.len()];
        let mut g = vec![0.0; x.len()];
        for (y, w) in self.mu.points().zip(self.mu.weights()) {
            loss.grad_into(y, x, &mut g);
            vecops::axpy(*w, &g, &mut acc);
        }
        acc
    }
}

/// `2 eps + 2 G^2 kappa_d J n_T^{-3/d}` for a continuous distribution in
/// dimension `d >= 3`.
pub fn generalization_bound_continuous(epsilon: f64, g: f64, kappa_d: f64, j: f64, n_t: usize, d: usize) -> Result<f64> {
    Ok(2.0 * epsilon + 2.0 * g * g * measures::dereich_bound(kappa_d, j, n_t, d)?)
}

/// `2 eps + 168 G^2 sqrt(m / n_T)` for a distribution on `m` points.
pub fn generalization_bound_discrete(epsilon: f64, g: f64, m_support: usize, n_t: usize) -> Result<f64> {
    Ok(2.0 * epsilon + 2.0 * g * g * measures::discrete_support_bound(m_support, n_t)?)
}

/// Runs one algorithm on sampled training (and validation) sets.
pub trait Runner: Sync {
    fn needs_validation(&self) -> bool;

    fn run(
        &self,
        loss: &LossFunction,
        train: EmpiricalMeasure,
        validation: Option<EmpiricalMeasure>,
        rng: &mut Stream,
    ) -> Result<RunRecord>;
}

/// SVRG with the default step size and epoch length for the sampled `n_T`.
#[derive(Debug, Clone)]
pub struct SvrgRunner {
    pub epsilon: f64,
    pub x1: Vec<f64>,
    pub max_epochs: u64,
}

impl Runner for SvrgRunner {
    fn needs_validation(&self) -> bool {
        false
    }

    fn run(
        &self,
        loss: &LossFunction,
        train: EmpiricalMeasure,
        _validation: Option<EmpiricalMeasure>,
        rng: &mut Stream,
    ) -> Result<RunRecord> {
        let mut obj = FiniteSumObjective::new(loss.clone(), train)?;
        let cfg = SvrgConfig {
            max_epochs: self.max_epochs,
            ..SvrgConfig::tuned(obj.n(), loss.l, self.epsilon)
        };
        svrg::run_svrg(&mut obj, &cfg, &self.x1, rng)
    }
}

/// Unbiased SGD with a fixed configuration.
#[derive(Debug, Clone)]
pub struct SgdRunner {
    pub config: SgdConfig,
    pub x1: Vec<f64>,
}

impl Runner for SgdRunner {
    fn needs_validation(&self) -> bool {
        true
    }

    fn run(
        &self,
        loss: &LossFunction,
        train: EmpiricalMeasure,
        validation: Option<EmpiricalMeasure>,
        rng: &mut Stream,
    ) -> Result<RunRecord> {
        let validation = validation.ok_or_else(|| invalid("SGD runner needs a validation set"))?;
        let mut t = FiniteSumObjective::new(loss.clone(), train)?;
        let mut v = FiniteSumObjective::new(loss.clone(), validation)?;
        sgd::run_sgd(&mut t, &mut v, &self.config, BiasModel::Zero, &self.x1, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub n_t: usize,
    pub trials: usize,
    pub mean_grad_sq_g: f64,
    pub ci: f64,
    /// Trials that hit the iteration cap.
    pub cap_hits: usize,
}

/// Monte Carlo estimate of `E ||grad f_G(x_tau)||^2`.
///
/// Trial `k` samples `Y_T` (and an independent `Y_V` when the runner asks
/// for one) from its data stream and runs the algorithm on its own stream.
#[allow(clippy::too_many_arguments)]
pub fn mc_generalization_gap(
    dist: &TestDistribution,
    loss: &LossFunction,
    runner: &dyn Runner,
    n_t: usize,
    n_v: usize,
    trials: usize,
    seed: u64,
) -> Result<GapEstimate> {
    if trials < 2 {
        return Err(invalid("need at least two trials for a confidence interval"));
    }
    if n_t == 0 || (runner.needs_validation() && n_v == 0) {
        return Err(invalid("sample sizes must be >= 1"));
    }
    let results: Vec<Result<(f64, bool)>> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut data_rng = rng::stream(seed, k, rng::DATA_NODE);
            let train = measures::sample_empirical(&dist.mu, n_t, &mut data_rng)?;
            let validation = if runner.needs_validation() {
                Some(measures::sample_empirical(&dist.mu, n_v, &mut data_rng)?)
            } else {
                None
            };
            let mut algo_rng = rng::stream(seed, k, 0);
            let rec = runner.run(loss, train, validation, &mut algo_rng).map_err(|e| Error::Trial {
                trial: k,
                seed,
                source: Box::new(e),
            })?;
            let g = dist.population_grad(loss, &rec.final_x);
            Ok((vecops::norm_sq(&g), rec.stopped()))
        })
        .collect();
    let mut values = Vec::with_capacity(trials);
    let mut cap_hits = 0;
    for r in results {
        let (v, stopped) = r?;
        values.push(v);
        cap_hits += usize::from(!stopped);
    }
    let s = MeanCi::from_values(&values);
    Ok(GapEstimate {
        n_t,
        trials,
        mean_grad_sq_g: s.mean,
        ci: s.ci.unwrap_or(f64::NAN),
        cap_hits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub n: usize,
    pub resamples: usize,
    /// Mean of `d_2(mu, mu_N)^2`.
    pub mean_w2_sq: f64,
    pub ci: f64,
    /// `84 sqrt(m / N)`
    pub bound: f64,
}

/// Monte Carlo mean of `d_2(mu, mu_N)^2` over `resamples` empirical measures
/// of `n` i.i.d. draws from `mu`.
pub fn concentration_experiment(mu: &EmpiricalMeasure, n: usize, resamples: usize, seed: u64) -> Result<ConcentrationEstimate> {
    if resamples < 2 {
        return Err(invalid("need at least two resamples"));
    }
    let values: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k, rng::DATA_NODE);
            let sample = measures::sample_empirical(mu, n, &mut r)?;
            let w = measures::wasserstein(mu, &sample, 2.0)?;
            Ok(w * w)
        })
        .collect::<Result<_>>()?;
    let s = MeanCi::from_values(&values);
    Ok(ConcentrationEstimate {
        n,
        resamples,
        mean_w2_sq: s.mean,
        ci: s.ci.unwrap_or(f64::NAN),
        bound: measures::discrete_support_bound(mu.len(), n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics;
    use crate::problems::{quadratic_problem, tanh_composite_problem};

    #[test]
    fn bound_formulas() {
        assert_eq!(generalization_bound_continuous(0.05, 1.0, 1.0, 0.0, 8, 3).unwrap(), 0.1);
        assert!((generalization_bound_continuous(0.05, 1.0, 1.0, 1.0, 8, 3).unwrap() - 0.35).abs() < 1e-15);
        assert_eq!(generalization_bound_continuous(0.05, 0.0, 1.0, 1.0, 8, 3).unwrap(), 0.1);
        assert!(generalization_bound_continuous(0.05, 1.0, 1.0, 1.0, 8, 2).is_err());
        assert!((generalization_bound_discrete(0.05, 1.0, 4, 100).unwrap() - 33.7).abs() < 1e-12);
        assert_eq!(generalization_bound_discrete(0.05, 1.0, 1, 1).unwrap(), 0.1 + 168.0);
        assert_eq!(generalization_bound_discrete(0.05, 0.0, 4, 100).unwrap(), 0.1);
    }

    #[test]
    fn population_gradient_closed_form() {
        let mu = EmpiricalMeasure::uniform(vec![vec![-1.0], vec![1.0]]).unwrap();
        let dist = TestDistribution::new(mu).unwrap();
        assert_eq!(dist.third_moment(), 1.0);
        let q = quadratic_problem();
        for x in [-2.0, 0.0, 0.7] {
            assert_eq!(dist.population_grad(&q, &[x]), vec![x]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mu = EmpiricalMeasure::new(
            vec![vec![0.5, -0.2], vec![-0.3, 0.1], vec![0.0, 0.6]],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let dist = TestDistribution::new(mu.clone()).unwrap();
        let loss = tanh_composite_problem(&mu, 1.0).unwrap();
        let x = [0.4, -1.1];
        let fd = numerics::central_diff_grad(|z| dist.population_value(&loss, z), &x);
        assert!(numerics::gradcheck_error(&dist.population_grad(&loss, &x), &fd) < 1e-5);
    }

    #[test]
    fn dirac_distribution_with_svrg() {
        let dist = TestDistribution::new(EmpiricalMeasure::dirac(vec![0.0]).unwrap()).unwrap();
        let runner = SvrgRunner {
            epsilon: 0.01,
            x1: vec![1.0],
            max_epochs: 1000,
        };
        let est = mc_generalization_gap(&dist, &quadratic_problem(), &runner, 8, 0, 4, 7).unwrap();
        assert!(est.mean_grad_sq_g <= 0.01);
        assert_eq!(est.cap_hits, 0);
        assert!(mc_generalization_gap(&dist, &quadratic_problem(), &runner, 8, 0, 1, 7).is_err());
    }
}
