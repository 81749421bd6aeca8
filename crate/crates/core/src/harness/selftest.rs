//! Monte Carlo check that a stopped martingale has mean zero.
//!
//! For a martingale difference sequence `x_t` and a bounded stopping time
//! `tau`, `E[sum_{t <= tau} x_t] = 0`. The self-test simulates fair `+-1`
//! steps stopped at the first `+1` or after 50 steps, and checks that zero
//! lies in the 95% interval of the sample mean. It exercises the same
//! stream/aggregation machinery as the stopping-time experiments.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::MeanCi;
use crate::error::{invalid, Result};
use crate::rng::{self, Stream};

pub const HORIZON: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestResult {
    pub trials: usize,
    pub mean: f64,
    pub ci: f64,
    pub pass: bool,
}

/// Sample mean of the stopped sum `S_tau` over `trials` independent paths.
///
/// `increment(rng, t)` draws `x_t`; `stop(t, x_t, s_t)` decides whether to
/// stop after step `t`. Paths are cut at `horizon` steps regardless.
pub fn stopped_sum_experiment<I, S>(trials: usize, seed: u64, horizon: u64, increment: I, stop: S) -> Result<SelftestResult>
where
    I: Fn(&mut Stream, u64) -> f64 + Sync,
    S: Fn(u64, f64, f64) -> bool + Sync,
{
    if trials < 2 || horizon == 0 {
        return Err(invalid("need at least two trials and a positive horizon"));
    }
    let sums: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k, 0);
            let mut s = 0.0;
            for t in 1..=horizon {
                let x = increment(&mut r, t);
                s += x;
                if stop(t, x, s) {
                    break;
                }
            }
            s
        })
        .collect();
    let m = MeanCi::from_values(&sums);
    let ci = m.ci.unwrap_or(f64::NAN);
    Ok(SelftestResult {
        trials,
        mean: m.mean,
        ci,
        pass: m.mean.abs() <= ci,
    })
}

fn fair_step(r: &mut Stream, _t: u64) -> f64 {
    if r.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

pub fn optional_stopping_selftest(trials: usize, seed: u64) -> Result<SelftestResult> {
    if trials < 100 {
        return Err(invalid("optional-stopping self-test needs at least 100 trials"));
    }
    stopped_sum_experiment(trials, seed, HORIZON, fair_step, |_, x, _| x > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stream_has_zero_mean() {
        let r = stopped_sum_experiment(200, 1, HORIZON, |_, _| 0.0, |_, _, _| false).unwrap();
        assert_eq!((r.mean, r.ci), (0.0, 0.0));
    }

    #[test]
    fn single_step_mean_near_zero() {
        let r = stopped_sum_experiment(10_000, 2, HORIZON, fair_step, |_, _, _| true).unwrap();
        assert!(r.mean.abs() < 4.0 * r.ci);
    }

    #[test]
    fn rejects_small_trial_counts() {
        assert!(optional_stopping_selftest(99, 0).is_err());
    }
}
