use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::{next_point, AcquisitionContext, DEFAULT_CANDIDATES, DEFAULT_REFINEMENTS};
use crate::ensemble::{observation_vector, round_robin_replace, Ensemble, LossKind};
use crate::error::{Error, Result};
use crate::hyperspace::{Config, SearchSpace};
use crate::surrogate::{
    slice_sample_hypers, GpHyperparams, GpState, HyperPriors, ObservationSet, SliceSchedule,
};

use super::history::{Evaluation, History, ModelSource};

pub const DEFAULT_INIT: usize = 5;
pub const DEFAULT_GP_SAMPLES: usize = 10;

/// Knobs shared by every search loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSettings {
    pub budget: usize,
    /// Uniform random points before the first surrogate fit.
    pub init: usize,
    pub seed: u64,
    pub gp_samples: usize,
    pub candidates: usize,
    pub refinements: usize,
    pub schedule: SliceSchedule,
    pub priors: HyperPriors,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            budget: 50,
            init: DEFAULT_INIT,
            seed: 0,
            gp_samples: DEFAULT_GP_SAMPLES,
            candidates: DEFAULT_CANDIDATES,
            refinements: DEFAULT_REFINEMENTS,
            schedule: SliceSchedule::default(),
            priors: HyperPriors::default(),
        }
    }
}

impl SearchSettings {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        // An init larger than the budget just makes the whole run random.
        if self.init == 0 || self.budget == 0 {
            return Err(Error::InvalidArgument(format!(
                "budget and init must be at least 1, got budget {} and init {}",
                self.budget, self.init
            )));
        }
        if self.gp_samples == 0 || self.candidates == 0 {
            return Err(Error::InvalidArgument(
                "gp_samples and candidates must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One line of the per-iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0-based iteration index.
    pub iteration: usize,
    /// Ensemble slot optimized in this iteration; `None` for plain BO.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    pub point: Vec<f64>,
    pub model_id: usize,
    /// SHA-256 over the little-endian bytes of the observation vector the
    /// surrogate saw (or would have seen, during the random phase).
    pub observation_digest: String,
    pub random: bool,
    /// Ensemble slots after the update (EO only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Option<usize>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gp_samples: Vec<GpHyperparams>,
    /// Set when the surrogate step failed and the point was drawn at random.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner_failure: Option<String>,
}

/// What a search loop returns.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub history: History,
    pub iterations: Vec<IterationRecord>,
    /// Observation vectors `L_i`, one per iteration, in memory only.
    pub observations: Vec<Vec<f64>>,
    /// Final slot ensemble (EO only).
    pub ensemble: Option<Ensemble>,
}

pub fn observation_digest(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

struct Proposal {
    point: Vec<f64>,
    gp_samples: Vec<GpHyperparams>,
    failure: Option<String>,
}

/// Surrogate step: fit GPs under sampled hyperparameters and maximize the
/// averaged EI, with the incumbent taken as the minimum observation.
fn propose<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    targets: &[f64],
    dim: usize,
    settings: &SearchSettings,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<GpHyperparams>)> {
    let obs = ObservationSet::new(points.to_vec(), targets)?;
    let hypers = slice_sample_hypers(
        &obs,
        &settings.priors,
        &settings.schedule,
        settings.gp_samples,
        rng,
    )?;
    let states: Vec<GpState> = hypers
        .iter()
        .filter_map(|h| GpState::fit(&obs, h).ok())
        .collect();
    if states.is_empty() {
        return Err(Error::Numerical(
            "no sampled hyperparameters gave a usable GP".into(),
        ));
    }
    let best = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let ctx = AcquisitionContext::new(states, best)?
        .with_search(settings.candidates, settings.refinements);
    let x = next_point(&ctx, rng)?;
    debug_assert_eq!(x.len(), dim);
    Ok((x, hypers))
}

fn choose<R: Rng + ?Sized>(
    iteration: usize,
    space: &SearchSpace,
    points: &[Vec<f64>],
    targets: &[f64],
    settings: &SearchSettings,
    rng: &mut R,
) -> Proposal {
    if iteration < settings.init || points.is_empty() {
        return Proposal {
            point: space.sample(rng),
            gp_samples: Vec::new(),
            failure: None,
        };
    }
    match propose(points, targets, space.dim(), settings, rng) {
        Ok((point, gp_samples)) => Proposal {
            point,
            gp_samples,
            failure: None,
        },
        Err(e) => {
            log::warn!("iteration {iteration}: surrogate step failed ({e}); drawing at random");
            Proposal {
                point: space.sample(rng),
                gp_samples: Vec::new(),
                failure: Some(e.to_string()),
            }
        }
    }
}

fn evaluate_or_fallback<S: ModelSource + ?Sized>(
    source: &S,
    config: &Config,
    seed: u64,
) -> (Evaluation, Option<String>) {
    match source.evaluate(config, seed) {
        Ok(e) => (e, None),
        Err(err) => {
            log::warn!("learner failed on {config:?}: {err}; recording a constant model");
            let c = source.fallback_label();
            (
                Evaluation {
                    val: vec![c; source.val_labels().len()],
                    test: vec![c; source.test_labels().len()],
                },
                Some(err.to_string()),
            )
        }
    }
}

/// Shared loop. `ensemble = None` gives classical BO on single-model
/// zero-one losses; `Some((m, loss))` gives ensemble optimization with
/// round-robin slot updates.
fn search<S: ModelSource + ?Sized>(
    source: &S,
    space: &SearchSpace,
    settings: &SearchSettings,
    ensemble: Option<(usize, LossKind)>,
) -> Result<SearchOutcome> {
    settings.validate()?;
    if let Some((0, _)) = ensemble {
        return Err(Error::InvalidArgument(
            "ensemble size must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut history = History::for_source(source)?;
    let mut ens = ensemble.map(|(m, _)| Ensemble::with_size(m));
    let mut iterations = Vec::with_capacity(settings.budget);
    let mut observations = Vec::with_capacity(settings.budget);

    for i in 0..settings.budget {
        let slot = ensemble.map(|(m, _)| i % m);
        let targets = match (&mut ens, ensemble) {
            (Some(e), Some((_, loss))) => {
                let j = slot.expect("slot set with ensemble");
                e.slots[j] = None;
                observation_vector(e, history.val_predictions(), loss)?
            }
            _ => history.val_losses(),
        };
        let points = history.points();
        let proposal = choose(i, space, &points, &targets, settings, &mut rng);
        let config = space.decode(&proposal.point)?;
        let (eval, learner_failure) = evaluate_or_fallback(source, &config, settings.seed);
        let id = history.push(
            config,
            proposal.point.clone(),
            eval,
            learner_failure.clone(),
        )?;

        let composition = match (&mut ens, ensemble) {
            (Some(e), Some((_, loss))) => {
                *e = round_robin_replace(
                    e,
                    slot.expect("slot set"),
                    history.val_predictions(),
                    loss,
                )?;
                Some(e.slots.clone())
            }
            _ => None,
        };
        iterations.push(IterationRecord {
            iteration: i,
            slot,
            point: proposal.point,
            model_id: id,
            observation_digest: observation_digest(&targets),
            random: proposal.gp_samples.is_empty(),
            ensemble: composition,
            gp_samples: proposal.gp_samples,
            surrogate_failure: proposal.failure,
            learner_failure,
        });
        observations.push(targets);
    }
    Ok(SearchOutcome {
        history,
        iterations,
        observations,
        ensemble: ens,
    })
}

/// Classical Bayesian optimization of single-model validation error.
pub fn run_bo<S: ModelSource + ?Sized>(
    source: &S,
    space: &SearchSpace,
    settings: &SearchSettings,
) -> Result<SearchOutcome> {
    search(source, space, settings, None)
}

/// Ensemble optimization: each iteration tunes the model for slot
/// `i mod m` against the rest of the ensemble.
pub fn run_eo<S: ModelSource + ?Sized>(
    source: &S,
    space: &SearchSpace,
    settings: &SearchSettings,
    ensemble_size: usize,
    loss: LossKind,
) -> Result<SearchOutcome> {
    search(source, space, settings, Some((ensemble_size, loss)))
}

/// Result of [`minimize`].
#[derive(Debug, Clone)]
pub struct Minimum {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl Minimum {
    pub fn best(&self) -> (Vec<f64>, f64) {
        let mut b = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[b] {
                b = i;
            }
        }
        (self.points[b].clone(), self.values[b])
    }
}

/// The same surrogate loop applied to an objective on the unit cube.
pub fn minimize<F>(dim: usize, objective: F, settings: &SearchSettings) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    settings.validate()?;
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let space = SearchSpace::new(
        (0..dim)
            .map(|i| crate::hyperspace::ParamSpec::continuous(format!("u{i}"), 0.0, 1.0))
            .collect(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    for i in 0..settings.budget {
        let p = choose(i, &space, &points, &values, settings, &mut rng);
        values.push(objective(&p.point));
        points.push(p.point);
    }
    Ok(Minimum { points, values })
}
