use crate::ensemble::Label;

use super::{Dataset, Standardizer};

const ITERATIONS: usize = 500;

/// One-vs-rest L2-regularized logistic regression trained by full-batch
/// gradient descent from zero weights.
///
/// Each class minimizes `mean logistic loss + ||w||^2 / (2 C n)` (bias not
/// penalized). The penalty is applied as a proximal shrink after each
/// gradient step, which stays stable for arbitrarily small `C`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    scaler: Standardizer,
    /// Per class: `p` weights followed by the bias.
    weights: Vec<Vec<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    pub fn fit(data: &Dataset, c: f64) -> Self {
        let scaler = Standardizer::fit(data.features(), data.p());
        let x = scaler.transform(data.features());
        let (n, p) = (data.n(), data.p());
        let lambda = 1.0 / (c * n as f64);
        let weights = (0..data.n_classes())
            .map(|class| {
                let y: Vec<f64> = data
                    .labels()
                    .iter()
                    .map(|&l| (l as usize == class) as u8 as f64)
                    .collect();
                let mut w = vec![0.0; p + 1];
                let mut grad = vec![0.0; p + 1];
                for iter in 0..ITERATIONS {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for (xi, yi) in x.iter().zip(&y) {
                        let z = w[p] + xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                        let r = sigmoid(z) - yi;
                        for j in 0..p {
                            grad[j] += r * xi[j];
                        }
                        grad[p] += r;
                    }
                    let step = 0.1 / (1.0 + 0.01 * iter as f64);
                    let shrink = 1.0 / (1.0 + step * lambda);
                    for j in 0..p {
                        w[j] = (w[j] - step * grad[j] / n as f64) * shrink;
                    }
                    w[p] -= step * grad[p] / n as f64;
                }
                w
            })
            .collect();
        Self { scaler, weights }
    }

    pub fn predict_row(&self, row: &[f64]) -> Label {
        let x = self.scaler.transform_row(row);
        let p = x.len();
        let mut best = (0, f64::NEG_INFINITY);
        for (c, w) in self.weights.iter().enumerate() {
            let z = w[p] + x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            if z > best.1 {
                best = (c, z);
            }
        }
        best.0 as Label
    }
}
