//! Expected Improvement and its maximization over the unit hypercube.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::surrogate::GpState;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub const DEFAULT_CANDIDATES: usize = 1000;
pub const DEFAULT_REFINEMENTS: usize = 20;
const REFINE_SD: f64 = 0.02;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected Improvement of a Gaussian prediction over `best`, for
/// minimization. No exploration offset is applied.
pub fn expected_improvement(mean: f64, variance: f64, best: f64) -> Result<f64> {
    if variance < -1e-10 || variance.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "negative variance {variance}"
        )));
    }
    let sigma = variance.max(0.0).sqrt();
    let gap = best - mean;
    if sigma == 0.0 {
        return Ok(gap.max(0.0));
    }
    let z = gap / sigma;
    let pdf = INV_SQRT_2PI * (-0.5 * z * z).exp();
    Ok((gap * std_normal_cdf(z) + sigma * pdf).max(0.0))
}

/// Everything needed to score candidate points.
#[derive(Debug, Clone)]
pub struct AcquisitionContext {
    /// One conditioned GP per hyperparameter sample.
    pub states: Vec<GpState>,
    /// Incumbent loss (minimum observed), in raw units.
    pub best: f64,
    pub candidates: usize,
    pub refinements: usize,
}

impl AcquisitionContext {
    pub fn new(states: Vec<GpState>, best: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument(
                "acquisition needs at least one GP state".into(),
            ));
        }
        Ok(Self {
            states,
            best,
            candidates: DEFAULT_CANDIDATES,
            refinements: DEFAULT_REFINEMENTS,
        })
    }

    pub fn with_search(mut self, candidates: usize, refinements: usize) -> Self {
        self.candidates = candidates;
        self.refinements = refinements;
        self
    }

    fn dim(&self) -> usize {
        self.states[0].observations().dim()
    }

    /// EI averaged over all GP states.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for state in &self.states {
            let (m, v) = state.predict(x)?;
            total += expected_improvement(m, v, self.best)?;
        }
        Ok(total / self.states.len() as f64)
    }
}

/// Draws `ctx.candidates` uniform points, keeps the best by averaged EI and
/// polishes it by coordinate-wise perturbation.
pub fn next_point<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> Result<Vec<f64>> {
    if ctx.candidates == 0 {
        return Err(Error::InvalidArgument(
            "candidate count must be at least 1".into(),
        ));
    }
    let d = ctx.dim();
    let candidates: Vec<Vec<f64>> = (0..ctx.candidates)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    next_point_from_candidates(ctx, candidates, rng)
}

/// Same as [`next_point`] with an explicit candidate set.
pub fn next_point_from_candidates<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    candidates: Vec<Vec<f64>>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if ctx.states.is_empty() {
        return Err(Error::InvalidArgument(
            "acquisition needs at least one GP state".into(),
        ));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    let d = ctx.dim();
    if let Some(bad) = candidates.iter().find(|c| c.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| ctx.score(c))
        .collect::<Result<_>>()?;
    let mut best_idx = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_idx] {
            best_idx = i;
        }
    }
    let mut x = candidates[best_idx].clone();
    let mut fx = scores[best_idx];

    let step = Normal::new(0.0, REFINE_SD).expect("valid sd");
    for _ in 0..ctx.refinements {
        for c in 0..d {
            let mut y = x.clone();
            y[c] = (y[c] + step.sample(rng)).clamp(0.0, 1.0);
            let fy = ctx.score(&y)?;
            if fy > fx {
                x = y;
                fx = fy;
            }
        }
    }
    Ok(x)
}
