//! Compensated sums and normal-approximation confidence intervals.

use serde::{Deserialize, Serialize};

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Sum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Sum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Sum::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// z-quantile of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// Sample mean with half-width `1.96 s / sqrt(n)`; `ci` is `None` for fewer
/// than two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub ci: Option<f64>,
}

impl MeanCi {
    pub fn from_values(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanCi { n, mean: f64::NAN, ci: None };
        }
        let mean = xs.iter().copied().collect::<Sum>().value() / n as f64;
        let ci = (n >= 2).then(|| {
            let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<Sum>().value();
            Z95 * (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        });
        MeanCi { n, mean, ci }
    }

    /// `mean + ci`, or `mean` when no interval is available.
    pub fn upper(&self) -> f64 {
        self.mean + self.ci.unwrap_or(0.0)
    }
}
