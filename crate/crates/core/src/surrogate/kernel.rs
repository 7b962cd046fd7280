use crate::error::{Error, Result};

use super::GpHyperparams;

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn-5/2 covariance with one lengthscale per input dimension.
pub fn matern52(x1: &[f64], x2: &[f64], hypers: &GpHyperparams) -> Result<f64> {
    let d = hypers.lengthscales.len();
    for len in [x1.len(), x2.len()] {
        if len != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: len,
            });
        }
    }
    if let Some(&l) = hypers.lengthscales.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "non-positive lengthscale {l}"
        )));
    }
    Ok(matern52_unchecked(
        x1,
        x2,
        &hypers.lengthscales,
        hypers.amplitude,
    ))
}

#[inline]
pub(crate) fn matern52_unchecked(
    x1: &[f64],
    x2: &[f64],
    lengthscales: &[f64],
    amplitude: f64,
) -> f64 {
    let r2: f64 = x1
        .iter()
        .zip(x2)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let z = (a - b) / l;
            z * z
        })
        .sum();
    let sr = SQRT5 * r2.sqrt();
    amplitude * (1.0 + sr + 5.0 * r2 / 3.0) * (-sr).exp()
}
