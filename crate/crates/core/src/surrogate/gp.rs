use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::kernel::matern52_unchecked;

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Kernel hyperparameters: signal variance, ARD lengthscales and the
/// observation-noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub amplitude: f64,
    pub lengthscales: Vec<f64>,
    pub noise: f64,
}

impl GpHyperparams {
    pub fn new(amplitude: f64, lengthscales: Vec<f64>, noise: f64) -> Self {
        Self {
            amplitude,
            lengthscales,
            noise,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lengthscales.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.lengthscales.len(),
            });
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if self
            .lengthscales
            .iter()
            .any(|l| !(*l > 0.0) || !l.is_finite())
        {
            return Err(Error::InvalidArgument(
                "lengthscales must be positive".into(),
            ));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Training inputs with standardized targets.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    mean: f64,
    scale: f64,
    constant: bool,
}

impl ObservationSet {
    /// Standardizes `raw_targets` to zero mean and unit variance. Constant
    /// targets are only centred and flagged.
    pub fn new(inputs: Vec<Vec<f64>>, raw_targets: &[f64]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("observation set is empty".into()));
        }
        if inputs.len() != raw_targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: raw_targets.len(),
            });
        }
        let dim = inputs[0].len();
        if let Some(bad) = inputs.iter().find(|x| x.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        if raw_targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::Numerical("non-finite observation".into()));
        }
        let t = raw_targets.len() as f64;
        let mean = raw_targets.iter().sum::<f64>() / t;
        let var = raw_targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / t;
        let sd = var.sqrt();
        let constant = !(sd > 1e-12 * mean.abs().max(1.0));
        let scale = if constant { 1.0 } else { sd };
        let targets = raw_targets.iter().map(|y| (y - mean) / scale).collect();
        Ok(Self {
            inputs,
            targets,
            mean,
            scale,
            constant,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Standardized targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `(mean, scale)` used to standardize; `scale` is 1 for constant targets.
    pub fn standardization(&self) -> (f64, f64) {
        (self.mean, self.scale)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

/// A GP conditioned on an observation set under fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct GpState {
    hypers: GpHyperparams,
    obs: ObservationSet,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpState {
    pub fn fit(obs: &ObservationSet, hypers: &GpHyperparams) -> Result<Self> {
        hypers.validate(obs.dim())?;
        let t = obs.len();
        let amp = hypers.amplitude;
        let mut k = DMatrix::<f64>::zeros(t, t);
        for i in 0..t {
            for j in 0..i {
                let v =
                    matern52_unchecked(&obs.inputs[i], &obs.inputs[j], &hypers.lengthscales, amp);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] = amp;
        }
        let mut jitter = JITTER_START * amp;
        let chol = loop {
            let mut m = k.clone();
            for i in 0..t {
                m[(i, i)] += hypers.noise + jitter;
            }
            if let Some(c) = m.cholesky() {
                break c;
            }
            jitter *= 10.0;
            if jitter > JITTER_MAX * amp * (1.0 + 1e-9) {
                return Err(Error::NotPositiveDefinite {
                    jitter: jitter / 10.0,
                });
            }
        };
        let y = DVector::from_column_slice(&obs.targets);
        let alpha = chol.solve(&y);
        Ok(Self {
            hypers: hypers.clone(),
            obs: obs.clone(),
            chol,
            alpha,
            jitter,
        })
    }

    pub fn hypers(&self) -> &GpHyperparams {
        &self.hypers
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.obs
    }

    /// Jitter that was added to the diagonal on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor of `K + (noise + jitter) I`.
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Solved vector `(K + (noise + jitter) I)^-1 y` on standardized targets.
    pub fn alpha(&self) -> &[f64] {
        self.alpha.as_slice()
    }

    /// Posterior mean and latent variance at `x`, in raw loss units.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.obs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.obs.dim(),
                got: x.len(),
            });
        }
        let (m, v) = self.predict_standardized(x);
        let (mean, scale) = self.obs.standardization();
        Ok((mean + scale * m, scale * scale * v))
    }

    fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let h = &self.hypers;
        let kstar = DVector::from_iterator(
            self.obs.len(),
            self.obs
                .inputs
                .iter()
                .map(|xi| matern52_unchecked(xi, x, &h.lengthscales, h.amplitude)),
        );
        let mean = kstar.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor has a positive diagonal");
        let var = h.amplitude - v.norm_squared();
        // Tiny negative values come from round-off only.
        (mean, var.max(0.0))
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let y = DVector::from_column_slice(&self.obs.targets);
        let logdet_half: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * y.dot(&self.alpha) - logdet_half - 0.5 * self.obs.len() as f64 * LN_2PI
    }
}

/// Convenience wrapper around [`GpState::fit`] followed by
/// [`GpState::log_marginal_likelihood`].
pub fn log_marginal_likelihood(obs: &ObservationSet, hypers: &GpHyperparams) -> Result<f64> {
    Ok(GpState::fit(obs, hypers)?.log_marginal_likelihood())
}
