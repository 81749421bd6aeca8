//! Finite empirical measures on R^q, exact p-Wasserstein distances and the
//! empirical-measure concentration bounds.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::transport;
use crate::vecops;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A probability measure with finitely many atoms.
///
/// Points are stored row-major in a flat buffer. Zero-weight atoms are dropped
/// on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySupport);
        }
        if points.len() != weights.len() {
            return Err(invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(invalid("points must have dimension >= 1"));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        let mut kept = Vec::with_capacity(weights.len());
        for (p, &w) in points.iter().zip(&weights) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(invalid(format!("weight {w} is not a nonnegative number")));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(invalid("point coordinates must be finite"));
            }
            if w > 0.0 {
                flat.extend_from_slice(p);
                kept.push(w);
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptySupport);
        }
        let total: f64 = kept.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(EmpiricalMeasure {
            dim,
            points: flat,
            weights: kept,
        })
    }

    /// Uniform measure on the given points (duplicates allowed).
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// Point mass at `y`.
    pub fn dirac(y: Vec<f64>) -> Result<Self> {
        Self::new(vec![y], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = 1.0 / self.len() as f64;
        self.weights.iter().all(|&w| (w - w0).abs() <= 1e-15)
    }

    /// Merge atoms with bit-identical coordinates, summing their weights.
    /// The resulting measure is the same probability measure.
    pub fn compacted(&self) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut points: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut last: Option<usize> = None;
        for i in order {
            match last {
                Some(l) if self.point(l) == self.point(i) => {
                    *weights.last_mut().unwrap() += self.weights[i];
                }
                _ => {
                    points.extend_from_slice(self.point(i));
                    weights.push(self.weights[i]);
                    last = Some(i);
                }
            }
        }
        EmpiricalMeasure {
            dim: self.dim,
            points,
            weights,
        }
    }

    /// Load from CSV: one row per atom, columns are coordinates. An optional
    /// header row may tag the last column as `weight`; without it the measure
    /// is uniform.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut weighted = false;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(mut row) => {
                    if weighted {
                        let w = row.pop().ok_or_else(|| invalid("empty csv row"))?;
                        weights.push(w);
                    }
                    points.push(row);
                }
                Err(_) if k == 0 => {
                    weighted = rec
                        .iter()
                        .last()
                        .is_some_and(|h| h.eq_ignore_ascii_case("weight"));
                }
                Err(e) => return Err(invalid(format!("csv row {k}: {e}"))),
            }
        }
        if weighted {
            Self::new(points, weights)
        } else {
            Self::uniform(points)
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        wtr.write_record(&header)?;
        for (p, w) in self.points().zip(&self.weights) {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            row.push(format!("{w:?}"));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A joint measure between two finite measures, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<f64>,
}

impl Coupling {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in self.matrix.chunks_exact(self.cols) {
            for (sj, v) in s.iter_mut().zip(r) {
                *sj += v;
            }
        }
        s
    }

    /// Whether the marginals match `mu1` and `mu2` within `tol`.
    pub fn has_marginals(&self, mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, tol: f64) -> bool {
        self.rows == mu1.len()
            && self.cols == mu2.len()
            && self.matrix.iter().all(|&g| g >= 0.0)
            && self
                .row_sums()
                .iter()
                .zip(mu1.weights())
                .all(|(a, b)| (a - b).abs() <= tol)
            && self
                .col_sums()
                .iter()
                .zip(mu2.weights())
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// `E_gamma ||x1 - x2||^p`
    pub fn transport_cost(&self, mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, p: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                total += self.get(i, j) * ground_cost(mu1.point(i), mu2.point(j), p);
            }
        }
        total
    }
}

fn ground_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let d2 = vecops::dist_sq(a, b);
    if p == 2.0 {
        d2
    } else if p == 1.0 {
        d2.sqrt()
    } else {
        d2.sqrt().powf(p)
    }
}

fn check_pair(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("Wasserstein order p = {p} must be a finite value >= 1")));
    }
    if mu1.is_empty() || mu2.is_empty() {
        return Err(Error::EmptySupport);
    }
    if mu1.dim() != mu2.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu1.dim(),
            got: mu2.dim(),
        });
    }
    Ok(())
}

fn cost_matrix(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, p: f64) -> Vec<f64> {
    let mut cost = Vec::with_capacity(mu1.len() * mu2.len());
    for a in mu1.points() {
        for b in mu2.points() {
            cost.push(ground_cost(a, b, p));
        }
    }
    cost
}

/// Minimal-cost coupling for the cost `||x1 - x2||^p`.
pub fn optimal_coupling(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, p: f64) -> Result<Coupling> {
    check_pair(mu1, mu2, p)?;
    let cost = cost_matrix(mu1, mu2, p);
    let sol = transport::solve(mu1.weights(), mu2.weights(), &cost)?;
    Ok(Coupling {
        rows: mu1.len(),
        cols: mu2.len(),
        matrix: sol.flow,
    })
}

/// Exact p-Wasserstein distance `d_p(mu1, mu2)`.
///
/// Duplicate atoms are merged first, which leaves the measures unchanged and
/// keeps the transport problem small for resampled data.
pub fn wasserstein(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure, p: f64) -> Result<f64> {
    check_pair(mu1, mu2, p)?;
    let a = mu1.compacted();
    let b = mu2.compacted();
    let cost = cost_matrix(&a, &b, p);
    let sol = transport::solve(a.weights(), b.weights(), &cost)?;
    Ok(sol.cost.powf(1.0 / p))
}

/// Uniform measure on `n` i.i.d. draws from `mu`.
pub fn sample_empirical<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    n: usize,
    rng: &mut R,
) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(invalid("sample size N must be >= 1"));
    }
    let dist = WeightedIndex::new(mu.weights()).map_err(|e| invalid(e.to_string()))?;
    let points = (0..n)
        .map(|_| mu.point(dist.sample(rng)).to_vec())
        .collect();
    EmpiricalMeasure::uniform(points)
}

/// `J = (E ||y||^3)^(1/3)`
pub fn third_moment(mu: &EmpiricalMeasure) -> Result<f64> {
    if mu.is_empty() {
        return Err(Error::EmptySupport);
    }
    let m3: f64 = mu
        .points()
        .zip(mu.weights())
        .map(|(y, w)| w * vecops::norm(y).powi(3))
        .sum();
    Ok(m3.cbrt())
}

/// Bound `kappa_d * J * N^(-3/d)` on `E[d_2(mu, mu_N)^2]`, valid for `d >= 3`.
pub fn dereich_bound(kappa_d: f64, j: f64, n: usize, d: usize) -> Result<f64> {
    if d < 3 {
        return Err(precondition(format!("dimension d = {d} < 3")));
    }
    if n == 0 {
        return Err(invalid("N must be >= 1"));
    }
    if !(kappa_d > 0.0) || !(j >= 0.0) {
        return Err(invalid("kappa_d must be positive and J nonnegative"));
    }
    Ok(kappa_d * j * (n as f64).powf(-3.0 / d as f64))
}

/// Bound `84 sqrt(m / N)` on `E[d_2(mu, mu_N)^2]` for `mu` supported on at most
/// `m` points of the unit ball.
pub fn discrete_support_bound(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(invalid("m and N must be >= 1"));
    }
    Ok(84.0 * (m as f64 / n as f64).sqrt())
}
