//! SGD with validation-gradient early stopping, with optional biased update
//! directions under a geometric drift condition, and the matching bounds on
//! the expected stopping time.
//!
//! The stopping predicate `||grad f_V(x_t)||^2 <= epsilon` is checked at
//! `t = 1, m + 1, 2m + 1, ...`; every failed check is followed by `m` updates
//! `x_{n+1} = x_n - eta (v_n + Delta_n)` where `v_n` is the gradient of one
//! uniformly drawn training example and `Delta_n` the bias term.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bound::BoundReport;
use crate::error::{invalid, precondition, Error, Result};
use crate::numerics;
use crate::problems::FiniteSumObjective;
use crate::rng::Stream;
use crate::run::{Audit, CheckPoint, DriftStep, Outcome, RunRecord};
use crate::vecops;

/// Default iteration cap when no theoretical bound is available.
pub const DEFAULT_MAX_ITERS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub eta: f64,
    pub m: u64,
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    /// Record drift trace and iterate path.
    #[serde(default)]
    pub audit: bool,
}

fn default_max_iters() -> u64 {
    DEFAULT_MAX_ITERS
}

impl SgdConfig {
    pub fn new(eta: f64, m: u64, epsilon: f64) -> Self {
        SgdConfig {
            eta,
            m,
            epsilon,
            max_iters: DEFAULT_MAX_ITERS,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(invalid(format!("eta = {} must be positive", self.eta)));
        }
        if self.m == 0 {
            return Err(invalid("epoch length m must be >= 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be >= 1"));
        }
        Ok(())
    }
}

/// Model for the bias term `Delta_t` of the update direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasModel {
    /// Unbiased updates, `Delta_t = 0` and `V_t = 0`.
    #[default]
    Zero,
    /// Synthetic AR(1) bias: `V_1 = beta w_0`, `U_t = 2 beta w_t`,
    /// `V_{t+1} = alpha V_t + U_t` with `w_t ~ U[0, 1)`, and `Delta_t` a
    /// uniformly random direction of squared norm just below `V_t`.
    Ar1 { alpha: f64, beta: f64 },
}

impl BiasModel {
    /// AR(1) bias with `beta = eta * rate`.
    pub fn ar1_with_rate(alpha: f64, rate: f64, eta: f64) -> Self {
        BiasModel::Ar1 {
            alpha,
            beta: eta * rate,
        }
    }

    pub fn constants(&self) -> (f64, f64) {
        match *self {
            BiasModel::Zero => (0.0, 0.0),
            BiasModel::Ar1 { alpha, beta } => (alpha, beta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (alpha, beta) = self.constants();
        if !(0.0..1.0).contains(&alpha) {
            return Err(invalid(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        if !(beta >= 0.0) {
            return Err(invalid(format!("beta = {beta} must be >= 0")));
        }
        Ok(())
    }
}

struct BiasGenerator {
    alpha: f64,
    beta: f64,
    v: f64,
    rng: Stream,
}

impl BiasGenerator {
    fn new(alpha: f64, beta: f64, mut rng: Stream) -> Self {
        let v = beta * rng.gen::<f64>();
        BiasGenerator { alpha, beta, v, rng }
    }

    /// Writes `Delta_t` into `out`; returns `(V_t, U_t, ||Delta_t||^2)` and
    /// advances to `V_{t+1}`.
    fn step(&mut self, out: &mut [f64]) -> (f64, f64, f64) {
        let vt = self.v;
        let dir = numerics::random_unit(out.len(), &mut self.rng);
        let scale = vt.sqrt() * (1.0 - 1e-12);
        for (o, d) in out.iter_mut().zip(&dir) {
            *o = scale * d;
        }
        let ut = 2.0 * self.beta * self.rng.gen::<f64>();
        self.v = self.alpha * vt + ut;
        (vt, ut, vecops::norm_sq(out))
    }
}

fn check_dims(obj_t: &FiniteSumObjective, obj_v: &FiniteSumObjective, x1: &[f64]) -> Result<()> {
    if obj_t.dim() != obj_v.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj_t.dim(),
            got: obj_v.dim(),
        });
    }
    if x1.len() != obj_t.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj_t.dim(),
            got: x1.len(),
        });
    }
    Ok(())
}

/// Runs SGD with early stopping from `x1`.
///
/// `rng` drives the example sampling; when the bias model is not zero a
/// second stream for the bias generator is seeded from one draw of `rng`
/// taken before the first step.
pub fn run_sgd(
    obj_t: &mut FiniteSumObjective,
    obj_v: &mut FiniteSumObjective,
    config: &SgdConfig,
    bias: BiasModel,
    x1: &[f64],
    rng: &mut Stream,
) -> Result<RunRecord> {
    config.validate()?;
    bias.validate()?;
    check_dims(obj_t, obj_v, x1)?;

    let ifo_start = obj_t.ifo_count() + obj_v.ifo_count();
    let mut generator = match bias {
        BiasModel::Zero => None,
        BiasModel::Ar1 { alpha, beta } => {
            let seed: u64 = rng.gen();
            Some(BiasGenerator::new(alpha, beta, crate::rng::from_seed(seed)))
        }
    };
    let record_drift = config.audit || generator.is_some();

    let mut x = x1.to_vec();
    let mut delta = vec![0.0; x.len()];
    let mut trace = Vec::new();
    let mut audit = Audit {
        drift_constants: record_drift.then(|| bias.constants()),
        ..Audit::default()
    };
    if config.audit {
        audit.path.push(x.clone());
    }

    let mut t: u64 = 1;
    let outcome = loop {
        let gv = obj_v.objective_grad(&x)?;
        let norm_sq = vecops::norm_sq(&gv);
        trace.push(CheckPoint { t, grad_norm_sq: norm_sq });
        if norm_sq <= config.epsilon {
            break Outcome::Stopped;
        }
        if t + config.m > config.max_iters {
            break Outcome::CapHit;
        }
        for n in t..t + config.m {
            let v = obj_t.stochastic_grad(&x, rng)?;
            match generator.as_mut() {
                Some(g) => {
                    let (vt, ut, dsq) = g.step(&mut delta);
                    audit.drift.push(DriftStep {
                        t: n,
                        v: vt,
                        u: ut,
                        delta_norm_sq: dsq,
                    });
                    for ((xi, vi), di) in x.iter_mut().zip(&v).zip(&delta) {
                        *xi -= config.eta * (vi + di);
                    }
                }
                None => {
                    if record_drift {
                        audit.drift.push(DriftStep {
                            t: n,
                            v: 0.0,
                            u: 0.0,
                            delta_norm_sq: 0.0,
                        });
                    }
                    for (xi, vi) in x.iter_mut().zip(&v) {
                        *xi -= config.eta * vi;
                    }
                }
            }
            if config.audit {
                audit.path.push(x.clone());
            }
        }
        t += config.m;
    };

    Ok(RunRecord {
        algorithm: "sgd".into(),
        outcome,
        tau: t,
        ifo_count: obj_t.ifo_count() + obj_v.ifo_count() - ifo_start,
        final_x: x,
        trace,
        audit,
    })
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("c = {c} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    Ok(())
}

/// `epsilon/2 - G^2 d1^2`, which must be positive.
fn stationarity_slack(epsilon: f64, g: f64, d1: f64) -> Result<f64> {
    let gap = g * g * d1 * d1;
    if !(epsilon > 2.0 * gap) {
        return Err(precondition(format!(
            "threshold below irreducible validation-training gap: epsilon = {epsilon} <= 2 G^2 d1^2 = {}",
            2.0 * gap
        )));
    }
    Ok(epsilon / 2.0 - gap)
}

/// Step size for biased SGD with `beta = eta * R`:
/// `c * min{1/L, (eps/2 - G^2 d1^2) / (m (2 L sigma^2 + 2 R / (1 - alpha)))}`.
#[allow(clippy::too_many_arguments)]
pub fn step_size_cor32(
    c: f64,
    l: f64,
    epsilon: f64,
    m: u64,
    g: f64,
    d1: f64,
    sigma2: f64,
    rate: f64,
    alpha: f64,
) -> Result<f64> {
    check_c(c)?;
    check_alpha(alpha)?;
    if !(l > 0.0) || m == 0 {
        return Err(invalid("L must be positive and m >= 1"));
    }
    let slack = stationarity_slack(epsilon, g, d1)?;
    let noise = 2.0 * l * sigma2 + 2.0 * rate / (1.0 - alpha);
    if noise == 0.0 {
        return Ok(c / l);
    }
    Ok(c * (1.0 / l).min(slack / (m as f64 * noise)))
}

/// Inputs of the stopping-time bound for biased SGD at a given step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop31Params {
    pub l: f64,
    pub eta: f64,
    pub m: u64,
    pub epsilon: f64,
    pub sigma2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub g: f64,
    pub d1: f64,
    /// `f_T(x_1) - f*`
    pub f_gap: f64,
}

/// Bound on `E[tau(epsilon)]` for SGD with step `eta <= 1/L`, applicable when
/// `eps - 4 L m eta sigma^2 - 4 m beta / (1 - alpha) - 2 G^2 d1^2 > 0`.
pub fn tau_bound_prop31(p: &Prop31Params) -> Result<BoundReport> {
    if p.eta > 1.0 / p.l {
        return Err(precondition(format!("eta = {} exceeds 1/L = {}", p.eta, 1.0 / p.l)));
    }
    check_alpha(p.alpha)?;
    if p.m == 0 {
        return Err(invalid("m must be >= 1"));
    }
    let m = p.m as f64;
    let drift = p.beta / (1.0 - p.alpha);
    let gap = p.g * p.g * p.d1 * p.d1;
    let margin = p.epsilon - 4.0 * p.l * m * p.eta * p.sigma2 - 4.0 * m * drift - 2.0 * gap;
    let num = gap + 2.0 * p.f_gap / p.eta + p.epsilon + 2.0 * drift;
    let den = p.epsilon / (2.0 * m) - 2.0 * p.l * p.eta * p.sigma2 - 2.0 * drift - gap / m;
    Ok(BoundReport::new(
        "tau_bound_prop31",
        "eps - 4 L m eta sigma2 - 4 m beta/(1-alpha) - 2 G^2 d1^2 > 0",
        margin,
        num / den,
    )
    .with("L", p.l)
    .with("eta", p.eta)
    .with("m", m)
    .with("epsilon", p.epsilon)
    .with("sigma2", p.sigma2)
    .with("alpha", p.alpha)
    .with("beta", p.beta)
    .with("G", p.g)
    .with("d1", p.d1)
    .with("f_gap", p.f_gap))
}

/// Inputs of the closed-form bound for the step size of [`step_size_cor32`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cor32Params {
    pub c: f64,
    pub l: f64,
    pub epsilon: f64,
    pub m: u64,
    pub g: f64,
    pub d1: f64,
    pub sigma2: f64,
    /// Drift rate `R` with `beta = eta R`.
    pub rate: f64,
    pub alpha: f64,
    pub f_gap: f64,
}

/// Exact pre-asymptotic form of the stopping-time bound with `beta = eta R`
/// and the step size of [`step_size_cor32`]:
///
/// ```text
/// 4 m^2 f_gap (L sigma^2 + R/(1-alpha)) / ((1-c) c X^2)
///   + (2 L m f_gap + m c G^2 d1^2 + c eps/2) / ((1-c) c X)
///   + c/(1-c),                      X = eps/2 - G^2 d1^2
/// ```
pub fn tau_bound_cor32(p: &Cor32Params) -> Result<BoundReport> {
    check_c(p.c)?;
    check_alpha(p.alpha)?;
    let slack = stationarity_slack(p.epsilon, p.g, p.d1)?;
    let value = bias_conc(p.c, p.l, p.epsilon, p.m, p.g, p.d1, p.sigma2, p.rate / (1.0 - p.alpha), p.f_gap, slack);
    Ok(BoundReport::new("tau_bound_cor32", "eps - 2 G^2 d1^2 > 0", 2.0 * slack, value)
        .with("c", p.c)
        .with("L", p.l)
        .with("epsilon", p.epsilon)
        .with("m", p.m as f64)
        .with("G", p.g)
        .with("d1", p.d1)
        .with("sigma2", p.sigma2)
        .with("R", p.rate)
        .with("alpha", p.alpha)
        .with("f_gap", p.f_gap))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn bias_conc(
    c: f64,
    l: f64,
    epsilon: f64,
    m: u64,
    g: f64,
    d1: f64,
    sigma2: f64,
    rate_over_contraction: f64,
    f_gap: f64,
    slack: f64,
) -> f64 {
    let m = m as f64;
    let cc = (1.0 - c) * c;
    4.0 * m * m * f_gap * (l * sigma2 + rate_over_contraction) / (cc * slack * slack)
        + (2.0 * l * m * f_gap + m * c * g * g * d1 * d1 + c * epsilon / 2.0) / (cc * slack)
        + c / (1.0 - c)
}

/// `(sqrt(eps) + G d1)^2`, the bound on `||grad f_T||^2` at the returned iterate.
pub fn post_stationarity_bound(epsilon: f64, g: f64, d1: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(invalid("epsilon must be >= 0"));
    }
    let r = epsilon.sqrt() + g * d1;
    Ok(r * r)
}

/// `tau (n_V/m + 1) + n_V`
pub fn ifo_bound_sgd(tau_bound: f64, m: u64, n_v: usize) -> Result<f64> {
    if !(tau_bound >= 1.0) || m == 0 {
        return Err(invalid("tau bound must be >= 1 and m >= 1"));
    }
    let nv = n_v as f64;
    Ok(tau_bound * (nv / m as f64 + 1.0) + nv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::EmpiricalMeasure;
    use crate::problems::quadratic_problem;

    fn singleton() -> FiniteSumObjective {
        FiniteSumObjective::new(quadratic_problem(), EmpiricalMeasure::dirac(vec![0.0]).unwrap()).unwrap()
    }

    #[test]
    fn deterministic_halving() {
        let (mut t, mut v) = (singleton(), singleton());
        let cfg = SgdConfig { audit: true, ..SgdConfig::new(0.5, 1, 0.01) };
        let rec = run_sgd(&mut t, &mut v, &cfg, BiasModel::Zero, &[1.0], &mut crate::rng::from_seed(0)).unwrap();
        assert_eq!(rec.outcome, Outcome::Stopped);
        assert_eq!(rec.tau, 5);
        assert_eq!(rec.final_x, vec![0.0625]);
        let path: Vec<f64> = rec.audit.path.iter().map(|p| p[0]).collect();
        assert_eq!(path, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
        // 5 checks of n_V = 1 plus 4 updates
        assert_eq!(rec.ifo_count, 9);
        assert!(rec.audit.drift.iter().all(|d| d.v == 0.0 && d.u == 0.0));
        assert_eq!(rec.drift_violation(0.0, 0.0, 0.0), None);
    }

    #[test]
    fn immediate_stop() {
        let (mut t, mut v) = (singleton(), singleton());
        let cfg = SgdConfig::new(0.5, 3, 1.0);
        let rec = run_sgd(&mut t, &mut v, &cfg, BiasModel::Zero, &[1.0], &mut crate::rng::from_seed(0)).unwrap();
        assert_eq!(rec.tau, 1);
        assert_eq!(rec.ifo_count, 1);
        assert_eq!(t.ifo_count(), 0);
    }

    #[test]
    fn cap_hit_is_reported() {
        let (mut t, mut v) = (singleton(), singleton());
        let cfg = SgdConfig { max_iters: 3, ..SgdConfig::new(0.01, 1, 1e-12) };
        let rec = run_sgd(&mut t, &mut v, &cfg, BiasModel::Zero, &[1.0], &mut crate::rng::from_seed(0)).unwrap();
        assert_eq!(rec.outcome, Outcome::CapHit);
    }

    #[test]
    fn ar1_bias_trace_satisfies_drift() {
        let (mut t, mut v) = (singleton(), singleton());
        let cfg = SgdConfig::new(0.1, 4, 1e-4);
        let bias = BiasModel::Ar1 { alpha: 0.5, beta: 1e-4 };
        let rec = run_sgd(&mut t, &mut v, &cfg, bias, &[2.0], &mut crate::rng::from_seed(11)).unwrap();
        assert!(rec.stopped());
        assert!(!rec.audit.drift.is_empty());
        assert_eq!(rec.drift_violation(0.5, 1e-4, 0.0), None);
    }

    #[test]
    fn dimension_mismatch() {
        let (mut t, mut v) = (singleton(), singleton());
        let cfg = SgdConfig::new(0.5, 1, 0.01);
        assert!(run_sgd(&mut t, &mut v, &cfg, BiasModel::Zero, &[1.0, 0.0], &mut crate::rng::from_seed(0)).is_err());
    }

    #[test]
    fn step_size_examples() {
        let a = step_size_cor32(0.5, 1.0, 0.1, 10, 0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!((a - 0.00125).abs() < 1e-15);
        assert_eq!(step_size_cor32(0.5, 4.0, 0.1, 10, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap(), 0.125);
        let b = step_size_cor32(0.5, 2.0, 0.2, 5, 1.0, 0.1, 1.0, 2.0, 0.5).unwrap();
        assert!((b - 0.00075).abs() < 1e-15);
        assert!(step_size_cor32(0.5, 1.0, 0.02, 5, 1.0, 0.1, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn prop31_examples() {
        let base = Prop31Params {
            l: 1.0,
            eta: 0.01,
            m: 1,
            epsilon: 0.1,
            sigma2: 0.0,
            alpha: 0.0,
            beta: 0.0,
            g: 0.0,
            d1: 0.0,
            f_gap: 1.0,
        };
        let r = tau_bound_prop31(&base).unwrap();
        assert!(r.valid);
        assert!((r.value.unwrap() - 4002.0).abs() < 1e-9);

        let bad = tau_bound_prop31(&Prop31Params { sigma2: 10.0, m: 10, ..base }).unwrap();
        assert!(!bad.valid && bad.value.is_none());

        let biased = Prop31Params {
            eta: 0.001,
            epsilon: 0.5,
            sigma2: 1.0,
            alpha: 0.5,
            beta: 0.001,
            ..base
        };
        let r = tau_bound_prop31(&biased).unwrap();
        assert!((r.value.unwrap() - 8198.786885245901).abs() < 1e-8);

        assert!(tau_bound_prop31(&Prop31Params { eta: 2.0, ..base }).is_err());
    }

    #[test]
    fn cor32_examples() {
        let p = Cor32Params {
            c: 0.5,
            l: 1.0,
            epsilon: 1.0,
            m: 1,
            g: 0.0,
            d1: 0.0,
            sigma2: 1.0,
            rate: 0.0,
            alpha: 0.0,
            f_gap: 1.0,
        };
        assert!((tau_bound_cor32(&p).unwrap().value.unwrap() - 83.0).abs() < 1e-12);
        assert!((tau_bound_cor32(&Cor32Params { epsilon: 2.0, ..p }).unwrap().value.unwrap() - 27.0).abs() < 1e-12);
        let quiet = tau_bound_cor32(&Cor32Params { sigma2: 0.0, ..p }).unwrap().value.unwrap();
        assert!((quiet - (2.25 / 0.125 + 1.0)).abs() < 1e-12);
        assert!(tau_bound_cor32(&Cor32Params { g: 1.0, d1: 1.0, ..p }).is_err());
    }

    #[test]
    fn small_formulas() {
        assert!((post_stationarity_bound(0.3, 1.0, 0.0).unwrap() - 0.3).abs() < 1e-15);
        assert!((post_stationarity_bound(0.04, 1.0, 0.1).unwrap() - 0.09).abs() < 1e-15);
        assert!((post_stationarity_bound(0.0, 2.0, 0.1).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(ifo_bound_sgd(100.0, 10, 50).unwrap(), 650.0);
        assert_eq!(ifo_bound_sgd(1.0, 1, 0).unwrap(), 1.0);
        assert_eq!(ifo_bound_sgd(4002.0, 1, 10).unwrap(), 44032.0);
    }
}
