//! Early stopping for stochastic, decentralized and variance-reduced
//! gradient methods, with exact Wasserstein distances between empirical
//! measures and calculators for the expected stopping-time bounds.

pub mod bound;
pub mod dsgd;
pub mod error;
pub mod generalization;
pub mod harness;
pub mod measures;
pub mod numerics;
pub mod problems;
pub mod rng;
pub mod run;
pub mod sgd;
pub mod svrg;
pub mod transport;
pub mod vecops;

pub use bound::BoundReport;
pub use error::{Error, Result};
pub use measures::{wasserstein, EmpiricalMeasure};
pub use problems::{FiniteSumObjective, LossFunction};
pub use run::{Outcome, RunRecord};
