use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A theoretical bound together with the status of its validity condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    /// `None` when the validity condition fails and the bound does not apply.
    pub value: Option<f64>,
    pub valid: bool,
    /// Human-readable validity condition.
    pub condition: String,
    /// Left-hand side of the condition `margin > 0`.
    pub margin: f64,
    pub params: BTreeMap<String, f64>,
}

impl BoundReport {
    pub(crate) fn new(name: &str, condition: &str, margin: f64, value: f64) -> Self {
        let valid = margin > 0.0 && value.is_finite();
        BoundReport {
            name: name.to_string(),
            value: valid.then_some(value),
            valid,
            condition: condition.to_string(),
            margin,
            params: BTreeMap::new(),
        }
    }

    /// A bound whose inputs fail a precondition; `reason` replaces the
    /// condition text.
    pub(crate) fn unavailable(name: &str, reason: &str) -> Self {
        BoundReport {
            name: name.to_string(),
            value: None,
            valid: false,
            condition: reason.to_string(),
            margin: 0.0,
            params: BTreeMap::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    /// The bound value, or `+inf` when not applicable.
    pub fn value_or_inf(&self) -> f64 {
        self.value.unwrap_or(f64::INFINITY)
    }
}
