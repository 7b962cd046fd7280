use crate::ensemble::Label;

use super::{Dataset, Standardizer};

/// k-nearest neighbours, Euclidean distance on standardized features.
#[derive(Debug, Clone)]
pub struct KnnModel {
    scaler: Standardizer,
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
    k: usize,
    n_classes: usize,
}

impl KnnModel {
    /// `k` is clamped to the number of training rows.
    pub fn fit(data: &Dataset, k: usize) -> Self {
        let scaler = Standardizer::fit(data.features(), data.p());
        Self {
            points: scaler.transform(data.features()),
            scaler,
            labels: data.labels().to_vec(),
            k: k.clamp(1, data.n()),
            n_classes: data.n_classes(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Majority label among the `k` nearest rows. Equal distances resolve
    /// to the lower training index, equal votes to the smaller label.
    pub fn predict_row(&self, row: &[f64]) -> Label {
        let q = self.scaler.transform_row(row);
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_key);
            dist.truncate(self.k);
        }
        let mut votes = vec![0usize; self.n_classes];
        for &(_, i) in &dist {
            votes[self.labels[i] as usize] += 1;
        }
        let mut best = 0;
        for (l, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = l;
            }
        }
        best as Label
    }
}
