//! Search loops (BO and ensemble optimization), final selections and run
//! persistence.

mod artifact;
mod history;
mod search;

pub use artifact::{
    load_run, write_run, LoadedRun, RunArtifact, RunMeta, SelectionRecord, Selections,
};
pub use history::{CvModelSource, Evaluation, History, ModelRecord, ModelSource};
pub use search::{
    minimize, observation_digest, run_bo, run_eo, IterationRecord, Minimum, SearchOutcome,
    SearchSettings, DEFAULT_GP_SAMPLES, DEFAULT_INIT,
};

use crate::ensemble::{greedy_select, zero_one_ensemble_loss, Ensemble, LossKind};
use crate::error::{Error, Result};

pub const DEFAULT_WARM_K: usize = 3;

/// Model with the lowest single-model validation error; ties go to the
/// lowest id.
pub fn select_best(history: &History) -> Result<usize> {
    let losses = history.val_losses();
    if losses.is_empty() {
        return Err(Error::InvalidArgument("history is empty".into()));
    }
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Greedy forward selection over the whole pool with zero-one loss.
pub fn post_hoc(history: &History, size: usize, warm_k: usize) -> Result<Ensemble> {
    greedy_select(history.val_predictions(), size, warm_k, LossKind::ZeroOne)
}

/// What to score on the test rows.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'a> {
    Model(usize),
    Ensemble(&'a Ensemble),
}

fn members(selection: Selection<'_>) -> Vec<usize> {
    match selection {
        Selection::Model(id) => vec![id],
        Selection::Ensemble(e) => e.members(),
    }
}

/// Zero-one error of a model or majority-vote ensemble on the test rows.
pub fn evaluate_on_test(selection: Selection<'_>, history: &History) -> Result<f64> {
    if history.test_predictions().n_samples() == 0 {
        return Err(Error::InvalidArgument("history has no test rows".into()));
    }
    zero_one_ensemble_loss(&members(selection), history.test_predictions())
}

/// Zero-one error on the pooled validation rows.
pub fn evaluate_on_val(selection: Selection<'_>, history: &History) -> Result<f64> {
    zero_one_ensemble_loss(&members(selection), history.val_predictions())
}
