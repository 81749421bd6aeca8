//! Loss oracles and finite-sum objectives with IFO accounting.
//!
//! An IFO (incremental first-order oracle) call evaluates one per-example
//! loss and its gradient. Every counted method on [`FiniteSumObjective`]
//! adds to the objective's own counter; the `exact_*` methods are
//! uncounted and exist for audits and reporting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::numerics;
use crate::vecops;

/// Seed used for the Lipschitz certification probes, so a given dataset
/// always certifies the same constant.
const CERTIFY_SEED: u64 = 0x5EED_0F_7A9B;
const CERTIFY_PROBES: usize = 10_000;
const CERTIFY_X_RADIUS: f64 = 3.0;
const CERTIFY_SAFETY: f64 = 1.25;
const CERTIFY_PAIR_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `f(y, x) = 0.5 ||x - y||^2`
    Quadratic,
    /// `f(y, x) = 0.5 ||tanh(x) - y||^2`, tanh applied componentwise.
    TanhComposite,
}

/// A per-example loss `f(y, x)` with its certified constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossFunction {
    pub kind: LossKind,
    /// Lipschitz constant of the gradient in `x`.
    pub l: f64,
    /// Lipschitz constant of the gradient in `y`.
    pub g: f64,
    /// Lower bound on the loss.
    pub f_star: f64,
}

impl LossFunction {
    pub fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        match self.kind {
            LossKind::Quadratic => 0.5 * vecops::dist_sq(x, y),
            LossKind::TanhComposite => {
                0.5 * x
                    .iter()
                    .zip(y)
                    .map(|(xi, yi)| {
                        let r = xi.tanh() - yi;
                        r * r
                    })
                    .sum::<f64>()
            }
        }
    }

    pub fn grad_into(&self, y: &[f64], x: &[f64], out: &mut [f64]) {
        match self.kind {
            LossKind::Quadratic => {
                for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                    *o = xi - yi;
                }
            }
            LossKind::TanhComposite => {
                for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                    let t = xi.tanh();
                    *o = (1.0 - t * t) * (t - yi);
                }
            }
        }
    }

    pub fn grad(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.grad_into(y, x, &mut g);
        g
    }
}

/// `f(y, x) = 0.5 ||x - y||^2` with `L = G = 1`, `f* = 0`.
pub fn quadratic_problem() -> LossFunction {
    LossFunction {
        kind: LossKind::Quadratic,
        l: 1.0,
        g: 1.0,
        f_star: 0.0,
    }
}

/// `f(y, x) = 0.5 ||tanh(x) - y||^2` over targets with `||y|| <= radius`.
///
/// `G = 1`: the mixed derivative is `-diag(1 - tanh^2)`. `L` is certified as
/// 1.25 times the largest finite-difference Lipschitz ratio seen on 10^4
/// probe pairs with `||x|| <= 3` and `||y|| <= radius`.
pub fn tanh_composite_problem(targets: &EmpiricalMeasure, radius: f64) -> Result<LossFunction> {
    if !(radius > 0.0) {
        return Err(invalid("radius J must be positive"));
    }
    for (i, y) in targets.points().enumerate() {
        let n = vecops::norm(y);
        if n > radius {
            return Err(precondition(format!(
                "target {i} has norm {n} > J = {radius}"
            )));
        }
    }
    let mut loss = LossFunction {
        kind: LossKind::TanhComposite,
        l: f64::NAN,
        g: 1.0,
        f_star: 0.0,
    };
    loss.l = CERTIFY_SAFETY * max_lipschitz_ratio(&loss, targets.dim(), radius, CERTIFY_PROBES);
    Ok(loss)
}

/// Largest observed `||grad f(y, x1) - grad f(y, x2)|| / ||x1 - x2||` over
/// random nearby pairs.
pub fn max_lipschitz_ratio(loss: &LossFunction, dim: usize, y_radius: f64, probes: usize) -> f64 {
    let mut rng = crate::rng::from_seed(CERTIFY_SEED);
    let mut g1 = vec![0.0; dim];
    let mut g2 = vec![0.0; dim];
    let mut worst = 0.0_f64;
    for _ in 0..probes {
        let x1 = numerics::random_in_ball(dim, CERTIFY_X_RADIUS, &mut rng);
        let y = numerics::random_in_ball(dim, y_radius, &mut rng);
        let u = numerics::random_unit(dim, &mut rng);
        let mut x2 = x1.clone();
        vecops::axpy(CERTIFY_PAIR_STEP, &u, &mut x2);
        loss.grad_into(&y, &x1, &mut g1);
        loss.grad_into(&y, &x2, &mut g2);
        let dx = vecops::dist_sq(&x1, &x2).sqrt();
        worst = worst.max(vecops::dist_sq(&g1, &g2).sqrt() / dx);
    }
    worst
}

/// `f_D(x) = (1/n) sum_{y in D} f(y, x)` over a uniformly weighted dataset.
#[derive(Debug, Clone)]
pub struct FiniteSumObjective {
    loss: LossFunction,
    data: EmpiricalMeasure,
    ifo: u64,
}

impl FiniteSumObjective {
    pub fn new(loss: LossFunction, data: EmpiricalMeasure) -> Result<Self> {
        if !data.is_uniform() {
            return Err(invalid("finite-sum datasets must carry uniform weights"));
        }
        Ok(FiniteSumObjective { loss, data, ifo: 0 })
    }

    pub fn loss(&self) -> &LossFunction {
        &self.loss
    }

    pub fn data(&self) -> &EmpiricalMeasure {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn ifo_count(&self) -> u64 {
        self.ifo
    }

    pub fn reset_ifo(&mut self) {
        self.ifo = 0;
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Full gradient; `n` IFO calls.
    pub fn objective_grad(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.ifo += self.n() as u64;
        Ok(self.exact_grad(x))
    }

    /// Gradient of one uniformly drawn example; one IFO call.
    pub fn stochastic_grad<R: Rng + ?Sized>(&mut self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let idx = self.sample_index(rng);
        self.example_grad(idx, x)
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.n())
    }

    /// Gradient of example `idx` at `x`; one IFO call.
    pub fn example_grad(&mut self, idx: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.ifo += 1;
        Ok(self.loss.grad(self.data.point(idx), x))
    }

    /// Uncounted full gradient.
    pub fn exact_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; x.len()];
        let mut g = vec![0.0; x.len()];
        for y in self.data.points() {
            self.loss.grad_into(y, x, &mut g);
            vecops::axpy(1.0, &g, &mut acc);
        }
        let n = self.n() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Uncounted objective value.
    pub fn exact_value(&self, x: &[f64]) -> f64 {
        let s: f64 = self.data.points().map(|y| self.loss.value(y, x)).sum();
        s / self.n() as f64
    }

    /// Uncounted per-example gradient.
    pub fn exact_example_grad(&self, idx: usize, x: &[f64]) -> Vec<f64> {
        self.loss.grad(self.data.point(idx), x)
    }

    /// Gradient dispersion `(1/n) sum_y ||grad f(y, x) - grad f_D(x)||^2`.
    pub fn gradient_variance(&self, x: &[f64]) -> f64 {
        let mean = self.exact_grad(x);
        let mut g = vec![0.0; x.len()];
        let s: f64 = self
            .data
            .points()
            .map(|y| {
                self.loss.grad_into(y, x, &mut g);
                vecops::dist_sq(&g, &mean)
            })
            .sum();
        s / self.n() as f64
    }
}

/// Max over `probes` of the per-example gradient variance: an empirical
/// certificate for the variance constant on the probe set.
pub fn empirical_variance_bound(obj: &FiniteSumObjective, probes: &[Vec<f64>]) -> Result<f64> {
    if probes.is_empty() {
        return Err(invalid("probe set must be nonempty"));
    }
    let mut worst = 0.0_f64;
    for x in probes {
        obj.check_dim(x)?;
        worst = worst.max(obj.gradient_variance(x));
    }
    Ok(worst)
}

/// Default probe set for variance certification: `x1`, the origin and
/// `extra` radial samples in the ball of radius 3.
pub fn variance_probes(x1: &[f64], extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = crate::rng::from_seed(seed);
    let mut probes = vec![x1.to_vec(), vec![0.0; x1.len()]];
    probes.extend((0..extra).map(|_| numerics::random_in_ball(x1.len(), CERTIFY_X_RADIUS, &mut rng)));
    probes
}
