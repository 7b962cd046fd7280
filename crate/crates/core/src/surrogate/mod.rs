//! Gaussian-process surrogate of the loss surface.
//!
//! A zero-mean GP with a Matérn-5/2 ARD kernel is fit on standardized losses.
//! Kernel hyperparameters are not optimized; they are drawn by slice sampling
//! from their posterior so the acquisition can average over them.

mod gp;
mod kernel;
mod slice;

pub use gp::{log_marginal_likelihood, GpHyperparams, GpState, ObservationSet};
pub use kernel::matern52;
pub use slice::{slice_sample_hypers, HyperPriors, LogNormalPrior, SliceSchedule};
