//! The record of one algorithm execution.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The stopping predicate held at `tau`.
    Stopped,
    /// The iteration cap was reached first; `tau` is the last checked index.
    CapHit,
}

/// One evaluation of the stopping predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckPoint {
    /// Iteration index (SGD/DSGD) or epoch index (SVRG).
    pub t: u64,
    pub grad_norm_sq: f64,
}

/// Bias/dispersion quantities at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStep {
    pub t: u64,
    pub v: f64,
    pub u: f64,
    /// `||Delta_t||^2` when the bias vector is materialized, else `v`.
    pub delta_norm_sq: f64,
}

/// Snapshot of one SVRG inner step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerStep {
    pub epoch: u64,
    pub anchor: Vec<f64>,
    pub x: Vec<f64>,
    pub anchor_grad: Vec<f64>,
    pub sampled: usize,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    /// Drift constants `(alpha, beta)` the trace is expected to satisfy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_constants: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drift: Vec<DriftStep>,
    /// Iterates `x_1, x_2, ...` (system average for DSGD, anchors for SVRG).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inner: Vec<InnerStep>,
    /// Max deviation between the incrementally updated and the recomputed
    /// system average (DSGD only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub outcome: Outcome,
    pub tau: u64,
    pub ifo_count: u64,
    pub final_x: Vec<f64>,
    pub trace: Vec<CheckPoint>,
    #[serde(default)]
    pub audit: Audit,
}

impl RunRecord {
    pub fn stopped(&self) -> bool {
        self.outcome == Outcome::Stopped
    }

    /// Squared gradient norm at the final check.
    pub fn final_check(&self) -> f64 {
        self.trace.last().map(|c| c.grad_norm_sq).unwrap_or(f64::NAN)
    }

    /// Checks `V_1 <= beta`, `V_t <= alpha V_{t-1} + U_{t-1} + tol` and
    /// `||Delta_t||^2 <= V_t` along the recorded drift trace. Returns the
    /// first violating step.
    pub fn drift_violation(&self, alpha: f64, beta: f64, tol: f64) -> Option<u64> {
        let d = &self.audit.drift;
        if let Some(first) = d.first() {
            if first.v > beta + tol {
                return Some(first.t);
            }
        }
        for w in d.windows(2) {
            if w[1].v > alpha * w[0].v + w[0].u + tol {
                return Some(w[1].t);
            }
        }
        d.iter().find(|s| s.delta_norm_sq > s.v + tol).map(|s| s.t)
    }
}
