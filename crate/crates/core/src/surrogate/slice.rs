use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{GpHyperparams, GpState, ObservationSet};

/// Log-normal prior, parameterized by its median and the standard deviation
/// of the underlying normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalPrior {
    pub median: f64,
    pub log_sd: f64,
}

impl LogNormalPrior {
    fn log_density_of_log(&self, log_x: f64) -> f64 {
        let z = (log_x - self.median.ln()) / self.log_sd;
        -0.5 * z * z
    }
}

/// Priors over the GP hyperparameters, all truncated to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPriors {
    pub amplitude: LogNormalPrior,
    pub lengthscale: LogNormalPrior,
    pub noise: LogNormalPrior,
    pub lower: f64,
    pub upper: f64,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            amplitude: LogNormalPrior {
                median: 1.0,
                log_sd: 1.0,
            },
            lengthscale: LogNormalPrior {
                median: 0.25,
                log_sd: 1.0,
            },
            noise: LogNormalPrior {
                median: 0.01,
                log_sd: 1.0,
            },
            lower: 1e-6,
            upper: 1e3,
        }
    }
}

impl HyperPriors {
    fn prior_for(&self, coord: usize, dim: usize) -> LogNormalPrior {
        if coord == 0 {
            self.amplitude
        } else if coord <= dim {
            self.lengthscale
        } else {
            self.noise
        }
    }

    /// Starting point of every chain: the prior medians, in log space.
    fn medians(&self, dim: usize) -> Vec<f64> {
        (0..dim + 2)
            .map(|c| self.prior_for(c, dim).median.ln())
            .collect()
    }
}

/// Burn-in, retention and thinning of the slice sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSchedule {
    pub burn_in: usize,
    pub thin: usize,
    /// Initial bracket width in log space.
    pub width: f64,
    pub max_step_out: usize,
}

impl Default for SliceSchedule {
    fn default() -> Self {
        Self {
            burn_in: 30,
            thin: 2,
            width: 1.0,
            max_step_out: 10,
        }
    }
}

fn unpack(theta: &[f64]) -> GpHyperparams {
    let d = theta.len() - 2;
    GpHyperparams {
        amplitude: theta[0].exp(),
        lengthscales: theta[1..=d].iter().map(|v| v.exp()).collect(),
        noise: theta[d + 1].exp(),
    }
}

struct Target<'a> {
    obs: &'a ObservationSet,
    priors: &'a HyperPriors,
    log_lower: f64,
    log_upper: f64,
}

impl Target<'_> {
    fn log_density(&self, theta: &[f64]) -> f64 {
        let dim = theta.len() - 2;
        let mut lp = 0.0;
        for (c, &v) in theta.iter().enumerate() {
            if v < self.log_lower || v > self.log_upper {
                return f64::NEG_INFINITY;
            }
            lp += self.priors.prior_for(c, dim).log_density_of_log(v);
        }
        match GpState::fit(self.obs, &unpack(theta)) {
            Ok(state) => {
                let lml = state.log_marginal_likelihood();
                if lml.is_finite() {
                    lp + lml
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// One univariate slice-sampling update of coordinate `c` (stepping out,
/// then shrinkage). Returns the new log density.
fn update_coordinate<R: Rng + ?Sized>(
    theta: &mut [f64],
    c: usize,
    current: f64,
    target: &Target<'_>,
    schedule: &SliceSchedule,
    rng: &mut R,
) -> f64 {
    let x0 = theta[c];
    let level = current + rng.random::<f64>().ln();
    let eval = |theta: &mut [f64], x: f64| {
        theta[c] = x;
        target.log_density(theta)
    };

    let mut left = x0 - schedule.width * rng.random::<f64>();
    let mut right = left + schedule.width;
    let mut steps = schedule.max_step_out;
    while steps > 0 && eval(theta, left) > level {
        left -= schedule.width;
        steps -= 1;
    }
    let mut steps = schedule.max_step_out;
    while steps > 0 && eval(theta, right) > level {
        right += schedule.width;
        steps -= 1;
    }

    for _ in 0..200 {
        let x1 = left + rng.random::<f64>() * (right - left);
        let lp = eval(theta, x1);
        if lp > level {
            return lp;
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
    }
    theta[c] = x0;
    current
}

/// Draws `count` GP hyperparameter samples from their posterior given `obs`.
///
/// Each call starts a fresh chain at the prior medians; nothing is carried
/// over between calls. Coordinates are `(log amplitude, log lengthscales,
/// log noise)`, updated in turn once per sweep.
pub fn slice_sample_hypers<R: Rng + ?Sized>(
    obs: &ObservationSet,
    priors: &HyperPriors,
    schedule: &SliceSchedule,
    count: usize,
    rng: &mut R,
) -> Result<Vec<GpHyperparams>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    if !(priors.lower > 0.0 && priors.lower < priors.upper) {
        return Err(Error::InvalidArgument(
            "prior truncation bounds are invalid".into(),
        ));
    }
    let target = Target {
        obs,
        priors,
        log_lower: priors.lower.ln(),
        log_upper: priors.upper.ln(),
    };
    let mut theta: Vec<f64> = priors
        .medians(obs.dim())
        .into_iter()
        .map(|v| v.clamp(target.log_lower, target.log_upper))
        .collect();
    let mut current = target.log_density(&theta);
    if !current.is_finite() {
        // The start point sits inside the support, so only a failed fit can land here.
        return Err(Error::NotPositiveDefinite {
            jitter: 1e-4 * priors.amplitude.median,
        });
    }

    let thin = schedule.thin.max(1);
    let total = schedule.burn_in + count * thin;
    let mut samples = Vec::with_capacity(count);
    for sweep in 0..total {
        for c in 0..theta.len() {
            current = update_coordinate(&mut theta, c, current, &target, schedule, rng);
        }
        if sweep >= schedule.burn_in && (sweep - schedule.burn_in + 1).is_multiple_of(thin) {
            samples.push(unpack(&theta));
        }
    }
    Ok(samples)
}
