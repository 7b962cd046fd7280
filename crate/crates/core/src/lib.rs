//! Ensemble optimization: Bayesian optimization over learner
//! hyperparameters where each evaluation is scored by how much it improves
//! a fixed-size majority-vote ensemble.

pub mod acquisition;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod hyperspace;
pub mod learners;
pub mod optimizer;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};
