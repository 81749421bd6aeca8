//! Decentralized SGD with early stopping on the system average.
//!
//! `M` nodes hold parameters `x^i`. Each synchronous round every node mixes
//! its neighbours' parameters through a symmetric stochastic matrix `a` and
//! takes a step along its own stochastic gradient:
//! `x^i_{n+1} = sum_j a_ij x^j_n - eta v^i_n`. The stopping predicate is
//! evaluated on the system average `xbar = (1/M) sum_i x^i` every `m` rounds.
//!
//! Since `a` is doubly stochastic, the average moves by
//! `xbar_{n+1} = xbar_n - (eta/M) sum_i v^i_n`, which the consensus audit
//! checks against the recomputed mean.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bound::BoundReport;
use crate::error::{invalid, precondition, Error, Result};
use crate::problems::FiniteSumObjective;
use crate::rng::Stream;
use crate::run::{Audit, CheckPoint, DriftStep, Outcome, RunRecord};
use crate::sgd::{self, SgdConfig};
use crate::vecops;

const MATRIX_TOL: f64 = 1e-12;

/// Symmetric stochastic `M x M` connectivity matrix with its diffusion
/// coefficient `rho = max_{i >= 2} |lambda_i|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityMatrix {
    nodes: usize,
    a: Vec<f64>,
    rho: f64,
}

impl ConnectivityMatrix {
    /// Validates and wraps a row-major matrix. Matrices with `rho = 1` are
    /// accepted here and rejected when a run is started.
    pub fn new(nodes: usize, a: Vec<f64>) -> Result<Self> {
        let rho = diffusion_coefficient(nodes, &a)?;
        Ok(ConnectivityMatrix { nodes, a, rho })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.nodes + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    pub fn is_admissible(&self) -> bool {
        self.rho < 1.0
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nodes, self.nodes, &self.a)
    }

    /// Eigenvalues sorted in nonincreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(self.nodes, &self.a)
    }

    /// Load a square matrix from a header-less CSV file.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut a = Vec::new();
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            for s in rec.iter() {
                a.push(s.parse::<f64>().map_err(|e| invalid(format!("matrix entry {s:?}: {e}")))?);
            }
            rows += 1;
        }
        if rows * rows != a.len() {
            return Err(invalid(format!("matrix has {rows} rows but {} entries", a.len())));
        }
        Self::new(rows, a)
    }
}

fn check_symmetric_stochastic(nodes: usize, a: &[f64]) -> Result<()> {
    if nodes == 0 {
        return Err(invalid("need at least one node"));
    }
    if a.len() != nodes * nodes {
        return Err(Error::DimensionMismatch {
            expected: nodes * nodes,
            got: a.len(),
        });
    }
    for i in 0..nodes {
        let mut row = 0.0;
        for j in 0..nodes {
            let v = a[i * nodes + j];
            if !(v >= 0.0) {
                return Err(Error::NotAdmissible(format!("negative entry a[{i}][{j}] = {v}")));
            }
            if (v - a[j * nodes + i]).abs() > MATRIX_TOL {
                return Err(Error::NotAdmissible(format!("asymmetric at ({i}, {j})")));
            }
            row += v;
        }
        if (row - 1.0).abs() > MATRIX_TOL {
            return Err(Error::NotAdmissible(format!("row {i} sums to {row}")));
        }
    }
    Ok(())
}

fn sorted_eigenvalues(nodes: usize, a: &[f64]) -> Vec<f64> {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(nodes, nodes, a));
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// `max_{2 <= i <= M} |lambda_i(a)|^2`, eigenvalues sorted by value
/// (descending), for a symmetric stochastic matrix. Zero when `M = 1`.
pub fn diffusion_coefficient(nodes: usize, a: &[f64]) -> Result<f64> {
    check_symmetric_stochastic(nodes, a)?;
    let ev = sorted_eigenvalues(nodes, a);
    let rho = ev.iter().skip(1).map(|l| l * l).fold(0.0, f64::max);
    Ok(rho.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Self weight `s`, every other node `(1 - s)/(M - 1)`.
    Complete,
    /// Self weight `s`, each ring neighbour `(1 - s)/2`.
    Ring,
    /// Hub node 0. Leaves keep `s` and send `1 - s` to the hub; the hub keeps
    /// `1 - (M - 1)(1 - s)`, which must be nonnegative.
    Star,
}

pub fn make_topology(kind: Topology, nodes: usize, self_weight: f64) -> Result<ConnectivityMatrix> {
    if nodes == 0 {
        return Err(invalid("need at least one node"));
    }
    if !(0.0..=1.0).contains(&self_weight) {
        return Err(invalid(format!("self weight {self_weight} must lie in [0, 1]")));
    }
    let m = nodes;
    let mut a = vec![0.0; m * m];
    if m == 1 {
        a[0] = 1.0;
        return ConnectivityMatrix::new(1, a);
    }
    let s = self_weight;
    match kind {
        Topology::Complete => {
            let off = (1.0 - s) / (m - 1) as f64;
            for i in 0..m {
                for j in 0..m {
                    a[i * m + j] = if i == j { s } else { off };
                }
            }
        }
        Topology::Ring => {
            let nb = (1.0 - s) / 2.0;
            for i in 0..m {
                a[i * m + i] += s;
                a[i * m + (i + 1) % m] += nb;
                a[i * m + (i + m - 1) % m] += nb;
            }
        }
        Topology::Star => {
            let hub = 1.0 - (m - 1) as f64 * (1.0 - s);
            if hub < -MATRIX_TOL {
                return Err(Error::NotAdmissible(format!(
                    "star with {m} nodes needs self weight >= {}, got {s}",
                    1.0 - 1.0 / (m - 1) as f64
                )));
            }
            a[0] = hub.max(0.0);
            for i in 1..m {
                a[i * m + i] = s;
                a[i * m] = 1.0 - s;
                a[i] = 1.0 - s;
            }
        }
    }
    ConnectivityMatrix::new(m, a)
}

/// Per-node parameters and their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub xs: Vec<Vec<f64>>,
    pub xbar: Vec<f64>,
}

impl NodeState {
    pub fn new(xs: Vec<Vec<f64>>) -> Self {
        let xbar = average(&xs);
        NodeState { xs, xbar }
    }

    pub fn equal(nodes: usize, x1: &[f64]) -> Self {
        Self::new(vec![x1.to_vec(); nodes])
    }
}

pub fn average(xs: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; xs[0].len()];
    for x in xs {
        vecops::axpy(1.0, x, &mut acc);
    }
    let m = xs.len() as f64;
    acc.iter_mut().for_each(|v| *v /= m);
    acc
}

/// Dispersion `V_t = (L^2/M) sum_i ||x^i - xbar||^2` and gradient-noise term
/// `U_t = 32 eta^2 L^2 / (M (1 - sqrt(rho))) sum_i ||v^i - grad f_T(x^i)||^2`.
pub fn dispersion_quantities(
    xs: &[Vec<f64>],
    stochastic: &[Vec<f64>],
    exact: &[Vec<f64>],
    rho: f64,
    eta: f64,
    l: f64,
) -> (f64, f64) {
    let m = xs.len() as f64;
    let xbar = average(xs);
    let spread: f64 = xs.iter().map(|x| vecops::dist_sq(x, &xbar)).sum();
    let noise: f64 = stochastic
        .iter()
        .zip(exact)
        .map(|(v, g)| vecops::dist_sq(v, g))
        .sum();
    let v = l * l / m * spread;
    let u = 32.0 * eta * eta * l * l / (m * (1.0 - rho.sqrt())) * noise;
    (v, u)
}

/// Drift constants `alpha = (3 + sqrt(rho))^2 / 16` and
/// `beta = eta 8 L sigma^2 / (1 - sqrt(rho))`.
pub fn drift_constants(rho: f64, eta: f64, l: f64, sigma2: f64) -> (f64, f64) {
    let sr = rho.sqrt();
    ((3.0 + sr) * (3.0 + sr) / 16.0, eta * 8.0 * l * sigma2 / (1.0 - sr))
}

/// Largest step satisfying `eta <= (1 - sqrt(rho)) / (4 L sqrt(2))`.
pub fn max_admissible_eta(rho: f64, l: f64) -> f64 {
    (1.0 - rho.sqrt()) / (4.0 * l * std::f64::consts::SQRT_2)
}

/// Runs DSGD from equal initial parameters `x1` at every node.
///
/// `streams` holds one independent stream per node.
pub fn run_dsgd(
    obj_t: &mut FiniteSumObjective,
    obj_v: &mut FiniteSumObjective,
    conn: &ConnectivityMatrix,
    config: &SgdConfig,
    x1: &[f64],
    streams: &mut [Stream],
) -> Result<RunRecord> {
    run_dsgd_from(obj_t, obj_v, conn, config, NodeState::equal(conn.nodes(), x1), streams)
}

/// Runs DSGD from arbitrary per-node initial parameters.
pub fn run_dsgd_from(
    obj_t: &mut FiniteSumObjective,
    obj_v: &mut FiniteSumObjective,
    conn: &ConnectivityMatrix,
    config: &SgdConfig,
    init: NodeState,
    streams: &mut [Stream],
) -> Result<RunRecord> {
    config.validate()?;
    if !conn.is_admissible() {
        return Err(Error::NotAdmissible(format!("diffusion coefficient rho = {} >= 1", conn.rho())));
    }
    let nodes = conn.nodes();
    if streams.len() != nodes || init.xs.len() != nodes {
        return Err(invalid(format!(
            "{nodes} nodes but {} streams and {} initial states",
            streams.len(),
            init.xs.len()
        )));
    }
    let d = obj_t.dim();
    if obj_v.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: obj_v.dim() });
    }
    if let Some(bad) = init.xs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
    }

    let ifo_start = obj_t.ifo_count() + obj_v.ifo_count();
    let l = obj_t.loss().l;
    let rho = conn.rho();
    let eta = config.eta;

    let mut xs = init.xs;
    let mut xbar = average(&xs);
    let mut incremental = xbar.clone();
    let mut next = vec![vec![0.0; d]; nodes];
    let mut vs = vec![vec![0.0; d]; nodes];

    let mut trace = Vec::new();
    let mut audit = Audit::default();
    let mut consensus_gap = 0.0_f64;
    if config.audit {
        // The pathwise check needs alpha and V_1 only; sigma^2 enters the
        // expected bound on U_t, not the trace.
        let v1 = l * l / nodes as f64 * xs.iter().map(|x| vecops::dist_sq(x, &xbar)).sum::<f64>();
        audit.drift_constants = Some((drift_constants(rho, eta, l, 0.0).0, v1));
        audit.path.push(xbar.clone());
    }

    let mut t: u64 = 1;
    let outcome = loop {
        let gv = obj_v.objective_grad(&xbar)?;
        let norm_sq = vecops::norm_sq(&gv);
        trace.push(CheckPoint { t, grad_norm_sq: norm_sq });
        if norm_sq <= config.epsilon {
            break Outcome::Stopped;
        }
        if t + config.m > config.max_iters {
            break Outcome::CapHit;
        }
        for n in t..t + config.m {
            for (i, (v, rng)) in vs.iter_mut().zip(streams.iter_mut()).enumerate() {
                *v = obj_t.stochastic_grad(&xs[i], rng)?;
            }
            if config.audit {
                let exact: Vec<Vec<f64>> = xs.iter().map(|x| obj_t.exact_grad(x)).collect();
                let (v_t, u_t) = dispersion_quantities(&xs, &vs, &exact, rho, eta, l);
                audit.drift.push(DriftStep { t: n, v: v_t, u: u_t, delta_norm_sq: v_t });
            }
            for (i, out) in next.iter_mut().enumerate() {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (j, xj) in xs.iter().enumerate() {
                    let w = conn.get(i, j);
                    if w != 0.0 {
                        vecops::axpy(w, xj, out);
                    }
                }
                vecops::axpy(-eta, &vs[i], out);
            }
            std::mem::swap(&mut xs, &mut next);
            let mut vsum = vec![0.0; d];
            for v in &vs {
                vecops::axpy(1.0, v, &mut vsum);
            }
            vecops::axpy(-eta / nodes as f64, &vsum, &mut incremental);
            xbar = average(&xs);
            consensus_gap = consensus_gap.max(vecops::max_abs_diff(&xbar, &incremental));
            if config.audit {
                audit.path.push(xbar.clone());
            }
        }
        t += config.m;
    };
    if config.audit {
        let l2 = l * l / nodes as f64;
        let spread: f64 = xs.iter().map(|x| vecops::dist_sq(x, &xbar)).sum();
        audit.drift.push(DriftStep { t, v: l2 * spread, u: 0.0, delta_norm_sq: l2 * spread });
        audit.consensus_gap = Some(consensus_gap);
    }

    Ok(RunRecord {
        algorithm: "dsgd".into(),
        outcome,
        tau: t,
        ifo_count: obj_t.ifo_count() + obj_v.ifo_count() - ifo_start,
        final_x: xbar,
        trace,
        audit,
    })
}

fn check_dsgd_c(c: f64, rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::NotAdmissible(format!("rho = {rho} must lie in [0, 1)")));
    }
    let cmax = (1.0 - rho.sqrt()) / (4.0 * std::f64::consts::SQRT_2);
    if !(c > 0.0) || c > cmax {
        return Err(precondition(format!(
            "c = {c} must lie in (0, (1 - sqrt(rho))/(4 sqrt 2) = {cmax}]"
        )));
    }
    Ok(())
}

/// `7 + 5 rho + rho^{3/2} - 13 sqrt(rho)`, equal to
/// `(1 - sqrt(rho))(7 - 6 sqrt(rho) - rho)`.
fn contraction_denominator(rho: f64) -> f64 {
    7.0 + 5.0 * rho + rho.powf(1.5) - 13.0 * rho.sqrt()
}

/// `(c/L) min{1, (eps/2 - G^2 d1^2) / (2 m sigma^2 (1 + 128/(7 + 5 rho + rho^{3/2} - 13 sqrt rho)))}`
#[allow(clippy::too_many_arguments)]
pub fn dsgd_step_size(c: f64, l: f64, epsilon: f64, m: u64, g: f64, d1: f64, sigma2: f64, rho: f64) -> Result<f64> {
    check_dsgd_c(c, rho)?;
    if !(l > 0.0) || m == 0 {
        return Err(invalid("L must be positive and m >= 1"));
    }
    let gap = g * g * d1 * d1;
    if !(epsilon > 2.0 * gap) {
        return Err(precondition(format!(
            "threshold below irreducible validation-training gap: epsilon = {epsilon} <= {}",
            2.0 * gap
        )));
    }
    if sigma2 == 0.0 {
        return Ok(c / l);
    }
    let factor = 1.0 + 128.0 / contraction_denominator(rho);
    Ok(c / l * (1.0f64).min((epsilon / 2.0 - gap) / (2.0 * m as f64 * sigma2 * factor)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsgdBoundParams {
    pub l: f64,
    pub epsilon: f64,
    pub m: u64,
    pub g: f64,
    pub d1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub c: f64,
    pub f_gap: f64,
}

/// Stopping-time bound for DSGD, obtained from the biased-SGD closed form
/// with `R = 8 L sigma^2 / (1 - sqrt rho)` and `alpha = (3 + sqrt rho)^2/16`.
///
/// `params["simplified"]` carries the looser value that replaces
/// `R/(1 - alpha)` by `128 L sigma^2 / (7 (1 - sqrt rho)^2)`.
pub fn tau_bound_dsgd(p: &DsgdBoundParams) -> Result<BoundReport> {
    check_dsgd_c(p.c, p.rho)?;
    let gap = p.g * p.g * p.d1 * p.d1;
    if !(p.epsilon > 2.0 * gap) {
        return Err(precondition(format!(
            "threshold below irreducible validation-training gap: epsilon = {} <= {}",
            p.epsilon,
            2.0 * gap
        )));
    }
    let sr = p.rho.sqrt();
    let rate = 8.0 * p.l * p.sigma2 / (1.0 - sr);
    let alpha = (3.0 + sr) * (3.0 + sr) / 16.0;
    let exact = sgd::tau_bound_cor32(&sgd::Cor32Params {
        c: p.c,
        l: p.l,
        epsilon: p.epsilon,
        m: p.m,
        g: p.g,
        d1: p.d1,
        sigma2: p.sigma2,
        rate,
        alpha,
        f_gap: p.f_gap,
    })?;
    let slack = p.epsilon / 2.0 - gap;
    let loose_ratio = 128.0 * p.l * p.sigma2 / (7.0 * (1.0 - sr) * (1.0 - sr));
    let simplified = sgd::bias_conc(p.c, p.l, p.epsilon, p.m, p.g, p.d1, p.sigma2, loose_ratio, p.f_gap, slack);
    let value = exact.value.unwrap_or(f64::NAN);
    Ok(BoundReport::new(
        "tau_bound_dsgd",
        "eps - 2 G^2 d1^2 > 0 and c <= (1 - sqrt rho)/(4 sqrt 2)",
        exact.margin,
        value,
    )
    .with("L", p.l)
    .with("epsilon", p.epsilon)
    .with("m", p.m as f64)
    .with("G", p.g)
    .with("d1", p.d1)
    .with("sigma2", p.sigma2)
    .with("rho", p.rho)
    .with("c", p.c)
    .with("f_gap", p.f_gap)
    .with("R", rate)
    .with("alpha", alpha)
    .with("simplified", simplified))
}

/// `tau (n_V/m + M) + n_V`
pub fn ifo_bound_dsgd(tau_bound: f64, m: u64, n_v: usize, nodes: usize) -> Result<f64> {
    if !(tau_bound >= 1.0) || m == 0 {
        return Err(invalid("tau bound must be >= 1 and m >= 1"));
    }
    let nv = n_v as f64;
    Ok(tau_bound * (nv / m as f64 + nodes as f64) + nv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::EmpiricalMeasure;
    use crate::problems::quadratic_problem;
    use crate::rng;

    fn singleton() -> FiniteSumObjective {
        FiniteSumObjective::new(quadratic_problem(), EmpiricalMeasure::dirac(vec![0.0]).unwrap()).unwrap()
    }

    #[test]
    fn diffusion_examples() {
        assert_eq!(diffusion_coefficient(2, &[1.0, 0.0, 0.0, 1.0]).unwrap(), 1.0);
        let avg = vec![0.25; 16];
        assert!(diffusion_coefficient(4, &avg).unwrap() < 1e-24);
        let ring = make_topology(Topology::Ring, 4, 0.5).unwrap();
        assert!((ring.rho() - 0.25).abs() < 1e-12);
        let ev = ring.eigenvalues();
        for (got, want) in ev.iter().zip([1.0, 0.5, 0.5, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(diffusion_coefficient(2, &[0.5, 0.5, 0.3, 0.7]).is_err());
        assert!(diffusion_coefficient(2, &[0.6, 0.6, 0.6, 0.6]).is_err());
        assert!(diffusion_coefficient(2, &[1.5, -0.5, -0.5, 1.5]).is_err());
        assert!(make_topology(Topology::Star, 4, 0.5).is_err());
    }

    #[test]
    fn topologies() {
        let c = make_topology(Topology::Complete, 4, 0.25).unwrap();
        assert!(c.as_slice().iter().all(|&v| v == 0.25));
        assert!(c.rho() < 1e-24);
        let r2 = make_topology(Topology::Ring, 2, 0.5).unwrap();
        assert_eq!(r2.as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        assert!(r2.rho() < 1e-24);
        let s = make_topology(Topology::Star, 4, 0.75).unwrap();
        assert!(s.is_admissible());
    }

    #[test]
    fn identity_network_is_not_admissible() {
        let id = ConnectivityMatrix::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (mut t, mut v) = (singleton(), singleton());
        let mut streams = vec![rng::from_seed(0), rng::from_seed(1)];
        let err = run_dsgd(&mut t, &mut v, &id, &SgdConfig::new(0.1, 1, 0.1), &[1.0], &mut streams);
        assert!(matches!(err, Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn symmetric_consensus_reduces_to_gd() {
        let conn = make_topology(Topology::Complete, 2, 0.5).unwrap();
        let (mut t, mut v) = (singleton(), singleton());
        let mut streams = vec![rng::from_seed(0), rng::from_seed(1)];
        let cfg = SgdConfig { audit: true, ..SgdConfig::new(0.5, 1, 0.01) };
        let rec = run_dsgd(&mut t, &mut v, &conn, &cfg, &[1.0], &mut streams).unwrap();
        assert_eq!(rec.tau, 5);
        assert_eq!(rec.final_x, vec![0.0625]);
        // 5 checks + 4 rounds of 2 nodes
        assert_eq!(rec.ifo_count, 5 + 8);
        assert!(rec.audit.drift.iter().all(|d| d.v == 0.0 && d.u == 0.0));
    }

    #[test]
    fn immediate_stop() {
        let conn = make_topology(Topology::Ring, 4, 0.5).unwrap();
        let (mut t, mut v) = (singleton(), singleton());
        let mut streams: Vec<_> = (0..4).map(|i| rng::stream(1, 0, i)).collect();
        let rec = run_dsgd(&mut t, &mut v, &conn, &SgdConfig::new(0.1, 5, 2.0), &[1.0], &mut streams).unwrap();
        assert_eq!(rec.tau, 1);
        assert_eq!(rec.ifo_count, 1);
    }

    #[test]
    fn dispersion_examples() {
        let xs = vec![vec![1.0, 2.0]; 3];
        let vs = vec![vec![0.5, 0.5]; 3];
        let (v, u) = dispersion_quantities(&xs, &vs, &vs, 0.25, 0.1, 2.0);
        assert_eq!((v, u), (0.0, 0.0));
        assert_eq!(drift_constants(0.0, 1.0, 1.0, 1.0).0, 9.0 / 16.0);
        assert_eq!(drift_constants(0.25, 1.0, 1.0, 1.0).0, 0.765625);
        assert_eq!(drift_constants(0.25, 0.5, 1.0, 1.0).1, 8.0);
    }

    #[test]
    fn step_size_examples() {
        assert_eq!(dsgd_step_size(0.1, 2.0, 1.0, 3, 0.0, 0.0, 0.0, 0.0).unwrap(), 0.05);
        let c = 1.0 / (4.0 * std::f64::consts::SQRT_2);
        let eta = dsgd_step_size(c, 1.0, 1.0, 1, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert!((eta - 0.002291549753845293).abs() < 1e-15);
        assert!((contraction_denominator(0.25) - 1.875).abs() < 1e-15);
        assert!(dsgd_step_size(0.2, 1.0, 1.0, 1, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(dsgd_step_size(0.1, 1.0, 0.01, 1, 1.0, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn tau_bound_examples() {
        let c0 = 1.0 / (4.0 * std::f64::consts::SQRT_2);
        let p = DsgdBoundParams {
            l: 1.0,
            epsilon: 1.0,
            m: 1,
            g: 0.0,
            d1: 0.0,
            sigma2: 1.0,
            rho: 0.0,
            c: c0,
            f_gap: 1.0,
        };
        let r = tau_bound_dsgd(&p).unwrap();
        assert!((r.value.unwrap() - 2149.292640976734).abs() < 1e-8);
        assert_eq!(r.params["R"], 8.0);
        assert!((r.params["R"] / (1.0 - r.params["alpha"]) - 128.0 / 7.0).abs() < 1e-12);

        let q = DsgdBoundParams { rho: 0.25, c: 0.5 / (4.0 * std::f64::consts::SQRT_2), ..p };
        let r = tau_bound_dsgd(&q).unwrap();
        assert!((r.value.unwrap() - 13805.164946813058).abs() < 1e-7);
        assert!((r.params["simplified"] - 14773.433353489581).abs() < 1e-7);
        assert_eq!(r.params["R"], 16.0);

        let quiet = tau_bound_dsgd(&DsgdBoundParams { sigma2: 0.0, ..p }).unwrap();
        let unbiased = sgd::tau_bound_cor32(&sgd::Cor32Params {
            c: c0,
            l: 1.0,
            epsilon: 1.0,
            m: 1,
            g: 0.0,
            d1: 0.0,
            sigma2: 0.0,
            rate: 0.0,
            alpha: 0.0,
            f_gap: 1.0,
        })
        .unwrap();
        assert_eq!(quiet.value, unbiased.value);
    }

    #[test]
    fn ifo_examples() {
        assert_eq!(ifo_bound_dsgd(100.0, 10, 50, 4).unwrap(), 950.0);
        assert_eq!(ifo_bound_dsgd(10.0, 1, 0, 8).unwrap(), 80.0);
        assert_eq!(
            ifo_bound_dsgd(37.0, 3, 11, 1).unwrap(),
            sgd::ifo_bound_sgd(37.0, 3, 11).unwrap()
        );
    }
}
