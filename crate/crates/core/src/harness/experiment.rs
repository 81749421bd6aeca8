//! Seeded Monte Carlo estimation of the expected stopping time and IFO cost,
//! compared against the theoretical bounds for the configured run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, BiasSpec, ExperimentConfig};
use super::stats::MeanCi;
use crate::bound::BoundReport;
use crate::dsgd::{self, ConnectivityMatrix, DsgdBoundParams, Topology};
use crate::error::{invalid, Error, Result};
use crate::measures::{self, EmpiricalMeasure};
use crate::problems::{self, FiniteSumObjective, LossFunction, LossKind};
use crate::rng;
use crate::run::RunRecord;
use crate::sgd::{self, BiasModel, Cor32Params, Prop31Params, SgdConfig};
use crate::svrg::{self, SvrgConfig};
use crate::vecops;

/// Safety factor on the empirical variance certificate.
pub const SIGMA2_SAFETY: f64 = 1.1;
/// Random probes, besides `x1` and the origin, for the variance certificate.
pub const SIGMA2_PROBES: usize = 64;

/// Problem constants entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub l: f64,
    pub g: f64,
    /// `d_1(Y_V, Y_T)`; zero for SVRG.
    pub d1: f64,
    pub sigma2: f64,
    /// `f_T(x1) - f*`
    pub f_gap: f64,
}

#[derive(Debug, Clone)]
pub enum Plan {
    Sgd { config: SgdConfig, bias: BiasModel },
    Dsgd { config: SgdConfig, conn: ConnectivityMatrix },
    Svrg { config: SvrgConfig },
}

/// A configuration resolved into datasets, algorithm parameters and bounds.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub loss: LossFunction,
    pub mu: Option<EmpiricalMeasure>,
    pub train: EmpiricalMeasure,
    pub validation: Option<EmpiricalMeasure>,
    pub x1: Vec<f64>,
    pub constants: Constants,
    pub plan: Plan,
    /// Every applicable bound; the first is the one summaries compare to.
    pub bounds: Vec<BoundReport>,
    pub ifo_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub record: RunRecord,
    /// `||grad f_V(x)||^2` at the returned iterate; `None` without a
    /// validation set.
    pub final_grad_norm_sq_v: Option<f64>,
    pub final_grad_norm_sq_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub name: String,
    pub algorithm: String,
    pub trials: usize,
    pub mean_tau: f64,
    pub ci95_tau: Option<f64>,
    pub mean_ifo: f64,
    pub ci95_ifo: Option<f64>,
    pub bound_tau: Option<f64>,
    pub bound_ifo: Option<f64>,
    pub bound_valid: bool,
    pub cap_hits: usize,
    pub pass: bool,
}

fn load_measure(cfg: &ExperimentConfig, path: &std::path::Path) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::from_csv_path(cfg.resolve(path))
}

fn bound_or_unavailable(name: &str, r: Result<BoundReport>) -> Result<BoundReport> {
    match r {
        Ok(b) => Ok(b),
        Err(Error::Precondition(msg)) => Ok(BoundReport::unavailable(name, &msg)),
        Err(e) => Err(e),
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.master_seed;

        let mu = match (&config.data.mu, &config.data.mu_path) {
            (Some(section), _) => Some(section.build()?),
            (None, Some(p)) => Some(load_measure(&config, p)?),
            (None, None) => None,
        };
        let mut data_rng = rng::stream(seed, 0, rng::DATA_NODE);
        let train = match (&config.data.train_path, &mu) {
            (Some(p), _) => load_measure(&config, p)?,
            (None, Some(mu)) => measures::sample_empirical(mu, config.n_t, &mut data_rng)?,
            (None, None) => unreachable!("validated"),
        };
        let validation = if config.algorithm == Algorithm::Svrg {
            None
        } else {
            Some(match (&config.data.validation_path, &mu) {
                (Some(p), _) => load_measure(&config, p)?,
                (None, Some(mu)) => measures::sample_empirical(mu, config.n_v, &mut data_rng)?,
                (None, None) => unreachable!("validated"),
            })
        };
        let dim = train.dim();
        if let Some(v) = &validation {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
            }
        }

        let loss = match config.problem.kind {
            LossKind::Quadratic => problems::quadratic_problem(),
            LossKind::TanhComposite => {
                let targets = mu.as_ref().unwrap_or(&train);
                let mut radius = config.problem.radius.unwrap_or(0.0);
                if config.problem.radius.is_none() {
                    let all = targets.points().chain(train.points());
                    let all = all.chain(validation.iter().flat_map(|v| v.points()));
                    radius = all.map(vecops::norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                }
                let loss = problems::tanh_composite_problem(targets, radius)?;
                problems::tanh_composite_problem(&train, radius)?;
                if let Some(v) = &validation {
                    problems::tanh_composite_problem(v, radius)?;
                }
                loss
            }
        };

        let x1 = config.x1.clone().unwrap_or_else(|| vec![1.0; dim]);
        if x1.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x1.len() });
        }
        let obj_t = FiniteSumObjective::new(loss.clone(), train.clone())?;
        let probes = problems::variance_probes(&x1, SIGMA2_PROBES, rng::derive_seed(seed, 0, rng::HARNESS_NODE));
        let d1 = match &validation {
            Some(v) => measures::wasserstein(v, &train, 1.0)?,
            None => 0.0,
        };
        let constants = Constants {
            l: loss.l,
            g: loss.g,
            d1,
            sigma2: SIGMA2_SAFETY * problems::empirical_variance_bound(&obj_t, &probes)?,
            f_gap: obj_t.exact_value(&x1) - loss.f_star,
        };

        let (plan, bounds, ifo_bound) = match config.algorithm {
            Algorithm::Sgd => plan_sgd(&config, &constants)?,
            Algorithm::Dsgd => plan_dsgd(&config, &constants)?,
            Algorithm::Svrg => plan_svrg(&config, &constants, train.len())?,
        };

        Ok(Experiment {
            config,
            loss,
            mu,
            train,
            validation,
            x1,
            constants,
            plan,
            bounds,
            ifo_bound,
        })
    }

    pub fn primary_bound(&self) -> &BoundReport {
        &self.bounds[0]
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn train_objective(&self) -> Result<FiniteSumObjective> {
        FiniteSumObjective::new(self.loss.clone(), self.train.clone())
    }

    pub fn validation_objective(&self) -> Result<Option<FiniteSumObjective>> {
        self.validation
            .as_ref()
            .map(|v| FiniteSumObjective::new(self.loss.clone(), v.clone()))
            .transpose()
    }

    /// Runs trial `k` on its own streams.
    pub fn run_trial(&self, k: u64) -> Result<TrialResult> {
        let seed = self.config.master_seed;
        let mut obj_t = self.train_objective()?;
        let mut obj_v = self.validation_objective()?;
        let record = match (&self.plan, obj_v.as_mut()) {
            (Plan::Sgd { config, bias }, Some(v)) => {
                let mut r = rng::stream(seed, k, 0);
                sgd::run_sgd(&mut obj_t, v, config, *bias, &self.x1, &mut r)
            }
            (Plan::Dsgd { config, conn }, Some(v)) => {
                let mut streams: Vec<_> = (0..conn.nodes() as u64).map(|i| rng::stream(seed, k, i)).collect();
                dsgd::run_dsgd(&mut obj_t, v, conn, config, &self.x1, &mut streams)
            }
            (Plan::Svrg { config }, _) => {
                let mut r = rng::stream(seed, k, 0);
                svrg::run_svrg(&mut obj_t, config, &self.x1, &mut r)
            }
            _ => Err(invalid("validation set missing")),
        }
        .map_err(|e| Error::Trial {
            trial: k,
            seed: rng::derive_seed(seed, k, 0),
            source: Box::new(e),
        })?;
        let final_grad_norm_sq_v = obj_v.map(|v| vecops::norm_sq(&v.exact_grad(&record.final_x)));
        let final_grad_norm_sq_t = vecops::norm_sq(&obj_t.exact_grad(&record.final_x));
        Ok(TrialResult {
            trial: k,
            seed: rng::derive_seed(seed, k, 0),
            record,
            final_grad_norm_sq_v,
            final_grad_norm_sq_t,
        })
    }

    /// All trials, in parallel, returned in trial order.
    pub fn run_trials(&self) -> Result<Vec<TrialResult>> {
        (0..self.config.trials as u64)
            .into_par_iter()
            .map(|k| self.run_trial(k))
            .collect()
    }

    pub fn summarize(&self, results: &[TrialResult]) -> TrialSummary {
        let taus: Vec<f64> = results.iter().map(|r| r.record.tau as f64).collect();
        let ifos: Vec<f64> = results.iter().map(|r| r.record.ifo_count as f64).collect();
        let tau = MeanCi::from_values(&taus);
        let ifo = MeanCi::from_values(&ifos);
        let cap_hits = results.iter().filter(|r| !r.record.stopped()).count();
        let bound = self.primary_bound();
        let pass = bound.valid && cap_hits == 0 && tau.upper() <= bound.value_or_inf();
        TrialSummary {
            name: bound.name.clone(),
            algorithm: self.algorithm().name().to_string(),
            trials: results.len(),
            mean_tau: tau.mean,
            ci95_tau: tau.ci,
            mean_ifo: ifo.mean,
            ci95_ifo: ifo.ci,
            bound_tau: bound.value,
            bound_ifo: self.ifo_bound,
            bound_valid: bound.valid,
            cap_hits,
            pass,
        }
    }
}

type Planned = (Plan, Vec<BoundReport>, Option<f64>);

fn plan_sgd(cfg: &ExperimentConfig, k: &Constants) -> Result<Planned> {
    let section = cfg.sgd.as_ref().expect("validated");
    let (alpha, rate) = match section.bias {
        BiasSpec::Zero => (0.0, 0.0),
        BiasSpec::Ar1 { alpha, rate } => (alpha, rate),
    };
    let eta = match (section.eta, section.c) {
        (Some(eta), _) => eta,
        (None, Some(c)) => sgd::step_size_cor32(c, k.l, section.epsilon, section.m, k.g, k.d1, k.sigma2, rate, alpha)?,
        (None, None) => return Err(invalid("sgd needs eta or c")),
    };
    let bias = match section.bias {
        BiasSpec::Zero => BiasModel::Zero,
        BiasSpec::Ar1 { alpha, rate } => BiasModel::ar1_with_rate(alpha, rate, eta),
    };
    let (alpha, beta) = bias.constants();
    let mut config = SgdConfig::new(eta, section.m, section.epsilon);
    if let Some(cap) = section.max_iters {
        config.max_iters = cap;
    }
    config.validate()?;
    bias.validate()?;

    let mut bounds = vec![bound_or_unavailable(
        "tau_bound_prop31",
        sgd::tau_bound_prop31(&Prop31Params {
            l: k.l,
            eta,
            m: section.m,
            epsilon: section.epsilon,
            sigma2: k.sigma2,
            alpha,
            beta,
            g: k.g,
            d1: k.d1,
            f_gap: k.f_gap,
        }),
    )?];
    if let (None, Some(c)) = (section.eta, section.c) {
        bounds.push(bound_or_unavailable(
            "tau_bound_cor32",
            sgd::tau_bound_cor32(&Cor32Params {
                c,
                l: k.l,
                epsilon: section.epsilon,
                m: section.m,
                g: k.g,
                d1: k.d1,
                sigma2: k.sigma2,
                rate,
                alpha,
                f_gap: k.f_gap,
            }),
        )?);
    }
    bounds.push(
        BoundReport::new(
            "post_stationarity_bound",
            "always applicable",
            1.0,
            sgd::post_stationarity_bound(section.epsilon, k.g, k.d1)?,
        )
        .with("epsilon", section.epsilon)
        .with("G", k.g)
        .with("d1", k.d1),
    );
    let ifo = bounds[0]
        .value
        .map(|t| sgd::ifo_bound_sgd(t, section.m, cfg.n_v))
        .transpose()?;
    Ok((Plan::Sgd { config, bias }, bounds, ifo))
}

fn plan_dsgd(cfg: &ExperimentConfig, k: &Constants) -> Result<Planned> {
    let section = cfg.dsgd.as_ref().expect("validated");
    let conn = match &section.matrix_path {
        Some(p) => ConnectivityMatrix::from_csv_path(cfg.resolve(p))?,
        None => {
            let nodes = section.nodes.ok_or_else(|| invalid("dsgd needs M or matrix_path"))?;
            let s = section.self_weight.unwrap_or(1.0 / nodes as f64);
            dsgd::make_topology(section.topology.unwrap_or(Topology::Complete), nodes, s)?
        }
    };
    if !conn.is_admissible() {
        return Err(Error::NotAdmissible(format!("rho = {} >= 1", conn.rho())));
    }
    let rho = conn.rho();
    let eta = dsgd::dsgd_step_size(section.c, k.l, section.epsilon, section.m, k.g, k.d1, k.sigma2, rho)?;
    let mut config = SgdConfig::new(eta, section.m, section.epsilon);
    if let Some(cap) = section.max_iters {
        config.max_iters = cap;
    }
    let bound = bound_or_unavailable(
        "tau_bound_dsgd",
        dsgd::tau_bound_dsgd(&DsgdBoundParams {
            l: k.l,
            epsilon: section.epsilon,
            m: section.m,
            g: k.g,
            d1: k.d1,
            sigma2: k.sigma2,
            rho,
            c: section.c,
            f_gap: k.f_gap,
        }),
    )?
    .with("eta", eta);
    let ifo = bound
        .value
        .map(|t| dsgd::ifo_bound_dsgd(t, section.m, cfg.n_v, conn.nodes()))
        .transpose()?;
    Ok((Plan::Dsgd { config, conn }, vec![bound], ifo))
}

fn plan_svrg(cfg: &ExperimentConfig, k: &Constants, n_t: usize) -> Result<Planned> {
    let section = cfg.svrg.as_ref().expect("validated");
    let tuned = SvrgConfig::tuned(n_t, k.l, section.epsilon);
    let mut config = tuned.clone();
    if let Some(eta) = section.eta {
        config.eta = eta;
    }
    if let Some(m) = section.m {
        config.m = m;
    }
    if let Some(cap) = section.max_epochs {
        config.max_epochs = cap;
    }
    config.validate()?;
    let bound = if config.eta == tuned.eta && config.m == tuned.m {
        let v = svrg::tau_bound_svrg(k.l, n_t, k.f_gap, section.epsilon)?;
        BoundReport::new("tau_bound_svrg", "default eta and m", 1.0, v)
    } else {
        BoundReport::unavailable("tau_bound_svrg", "eta or m overridden; bound assumes the defaults")
    }
    .with("L", k.l)
    .with("n_T", n_t as f64)
    .with("f_gap", k.f_gap)
    .with("epsilon", section.epsilon)
    .with("eta", config.eta)
    .with("m", config.m as f64);
    let ifo = bound
        .value
        .map(|t| svrg::ifo_bound_svrg(t, n_t, config.m))
        .transpose()?;
    Ok((Plan::Svrg { config }, vec![bound], ifo))
}

/// Runs every trial of `cfg` and compares the mean stopping time with its
/// bound.
pub fn estimate_expected_tau(cfg: &ExperimentConfig) -> Result<TrialSummary> {
    let exp = Experiment::new(cfg.clone())?;
    let results = exp.run_trials()?;
    Ok(exp.summarize(&results))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle_config(trials: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "algorithm": "sgd",
                "problem": {{ "kind": "quadratic" }},
                "data": {{ "mu": {{ "points": [[0.0]] }} }},
                "n_T": 1, "n_V": 1,
                "sgd": {{ "epsilon": 0.01, "m": 1, "eta": 0.5 }},
                "trials": {trials}, "master_seed": 3
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn deterministic_oracle_summary() {
        let s = estimate_expected_tau(&oracle_config(8)).unwrap();
        assert_eq!(s.mean_tau, 5.0);
        assert_eq!(s.ci95_tau, Some(0.0));
        assert_eq!(s.mean_ifo, 9.0);
        assert!(s.bound_valid && s.pass, "{s:?}");
        let one = estimate_expected_tau(&oracle_config(1)).unwrap();
        assert_eq!((one.ci95_tau, one.ci95_ifo), (None, None));
    }

    #[test]
    fn svrg_override_disables_bound() {
        let mut cfg = oracle_config(2);
        cfg.algorithm = Algorithm::Svrg;
        cfg.svrg = Some(super::super::config::SvrgSpec {
            epsilon: 0.01,
            eta: Some(0.5),
            m: Some(1),
            max_epochs: None,
        });
        let s = estimate_expected_tau(&cfg).unwrap();
        assert_eq!(s.mean_tau, 5.0);
        assert!(!s.bound_valid && !s.pass);
    }
}
