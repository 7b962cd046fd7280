use crate::ensemble::Label;

use super::Dataset;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gaussian naive Bayes with variance smoothing of `1e-9` times the largest
/// feature variance.
#[derive(Debug, Clone)]
pub struct GaussianNbModel {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

impl GaussianNbModel {
    pub fn fit(data: &Dataset) -> Self {
        let (c, p) = (data.n_classes(), data.p());
        let n = data.n() as f64;
        let mut counts = vec![0usize; c];
        let mut means = vec![vec![0.0; p]; c];
        for (x, &y) in data.features().iter().zip(data.labels()) {
            counts[y as usize] += 1;
            for (m, v) in means[y as usize].iter_mut().zip(x) {
                *m += v;
            }
        }
        for (m, &k) in means.iter_mut().zip(&counts) {
            if k > 0 {
                m.iter_mut().for_each(|v| *v /= k as f64);
            }
        }
        let mut vars = vec![vec![0.0; p]; c];
        for (x, &y) in data.features().iter().zip(data.labels()) {
            let y = y as usize;
            for j in 0..p {
                vars[y][j] += (x[j] - means[y][j]).powi(2);
            }
        }
        let max_var = data
            .scaling()
            .iter()
            .map(|&(_, sd)| sd * sd)
            .fold(0.0f64, f64::max);
        let smoothing = 1e-9 * max_var.max(f64::MIN_POSITIVE);
        for (v, &k) in vars.iter_mut().zip(&counts) {
            v.iter_mut()
                .for_each(|s| *s = if k > 0 { *s / k as f64 } else { 0.0 } + smoothing);
        }
        let log_priors = counts
            .iter()
            .map(|&k| {
                if k > 0 {
                    (k as f64 / n).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        Self {
            log_priors,
            means,
            vars,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Label {
        let mut best = (0, f64::NEG_INFINITY);
        for (c, &lp) in self.log_priors.iter().enumerate() {
            if lp == f64::NEG_INFINITY {
                continue;
            }
            let ll: f64 = row
                .iter()
                .zip(&self.means[c])
                .zip(&self.vars[c])
                .map(|((x, m), v)| -0.5 * (LN_2PI + v.ln() + (x - m).powi(2) / v))
                .sum();
            if lp + ll > best.1 {
                best = (c, lp + ll);
            }
        }
        best.0 as Label
    }
}
