//! Reference implementations used as test oracles. They are written
//! independently of the library: naive loops, dense inverses and full
//! enumeration.

#![allow(dead_code)]

use ensopt::ensemble::{LossKind, PredictionMatrix};
use rand::Rng;

// ---------------------------------------------------------------- ensembles

pub fn vote(rows: &[Vec<u32>], members: &[usize], i: usize, n_classes: usize) -> u32 {
    let mut counts = vec![0usize; n_classes];
    for &m in members {
        counts[rows[m][i] as usize] += 1;
    }
    let top = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == top).unwrap() as u32
}

/// Exact loss as a rational `(numerator, denominator)` so that ties are
/// compared exactly.
pub fn loss_rational(
    rows: &[Vec<u32>],
    labels: &[u32],
    n_classes: usize,
    members: &[usize],
    kind: LossKind,
) -> (u64, u64) {
    let n = labels.len() as u64;
    let e = members.len() as u64;
    let mut num = 0u64;
    for (i, &y) in labels.iter().enumerate() {
        let wrong = members.iter().filter(|&&m| rows[m][i] != y).count() as u64;
        num += match kind {
            LossKind::ZeroOne => (vote(rows, members, i, n_classes) != y) as u64,
            LossKind::Margin => wrong,
            LossKind::SquaredMargin => wrong * wrong,
        };
    }
    let den = match kind {
        LossKind::ZeroOne => n,
        LossKind::Margin => e * n,
        LossKind::SquaredMargin => e * e * n,
    };
    (num, den)
}

pub fn loss(rows: &[Vec<u32>], labels: &[u32], c: usize, members: &[usize], kind: LossKind) -> f64 {
    let (a, b) = loss_rational(rows, labels, c, members, kind);
    a as f64 / b as f64
}

/// Direct per-sample margin formula.
pub fn margin_direct(rows: &[Vec<u32>], labels: &[u32], members: &[usize], i: usize) -> f64 {
    let s: f64 = members
        .iter()
        .map(|&m| if rows[m][i] == labels[i] { 1.0 } else { -1.0 })
        .sum();
    s / members.len() as f64
}

fn less(a: (u64, u64), b: (u64, u64)) -> bool {
    (a.0 as u128) * (b.1 as u128) < (b.0 as u128) * (a.1 as u128)
}

/// Index of the first minimum over candidates `0..t` of `f(h)`.
fn argmin_exact(t: usize, f: impl Fn(usize) -> (u64, u64)) -> usize {
    let mut best = 0;
    let mut bv = f(0);
    for h in 1..t {
        let v = f(h);
        if less(v, bv) {
            best = h;
            bv = v;
        }
    }
    best
}

/// Step-wise brute force greedy forward selection with replacement.
pub fn greedy_oracle(
    rows: &[Vec<u32>],
    labels: &[u32],
    c: usize,
    size: usize,
    warm_k: usize,
    kind: LossKind,
) -> Vec<usize> {
    let t = rows.len();
    let mut ids: Vec<usize> = (0..t).collect();
    // insertion sort on exact single losses keeps equal ids in order
    for a in 1..t {
        let mut b = a;
        while b > 0
            && less(
                loss_rational(rows, labels, c, &[ids[b]], kind),
                loss_rational(rows, labels, c, &[ids[b - 1]], kind),
            )
        {
            ids.swap(b, b - 1);
            b -= 1;
        }
    }
    let mut members: Vec<usize> = ids[..warm_k].to_vec();
    while members.len() < size {
        let h = argmin_exact(t, |h| {
            let mut m = members.clone();
            m.push(h);
            loss_rational(rows, labels, c, &m, kind)
        });
        members.push(h);
    }
    members
}

/// Exhaustive scan for the refill of `slot`.
pub fn replace_oracle(
    slots: &[Option<usize>],
    slot: usize,
    rows: &[Vec<u32>],
    labels: &[u32],
    c: usize,
    kind: LossKind,
) -> Vec<Option<usize>> {
    let others: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != slot)
        .filter_map(|(_, s)| *s)
        .collect();
    let h = argmin_exact(rows.len(), |h| {
        let mut m = others.clone();
        m.push(h);
        loss_rational(rows, labels, c, &m, kind)
    });
    let mut out = slots.to_vec();
    out[slot] = Some(h);
    out
}

pub fn random_pool<R: Rng>(rng: &mut R, t: usize, n: usize, c: usize) -> (Vec<Vec<u32>>, Vec<u32>) {
    let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..c as u32)).collect();
    let rows = (0..t)
        .map(|_| {
            // mostly-correct models make ties and interactions likely
            let acc: f64 = rng.random_range(0.3..0.9);
            labels
                .iter()
                .map(|&y| {
                    if rng.random::<f64>() < acc {
                        y
                    } else {
                        rng.random_range(0..c as u32)
                    }
                })
                .collect()
        })
        .collect();
    (rows, labels)
}

pub fn matrix(rows: &[Vec<u32>], labels: &[u32], c: usize) -> PredictionMatrix {
    PredictionMatrix::new(rows.to_vec(), labels.to_vec(), c).unwrap()
}

// ---------------------------------------------------------------- GP

pub fn matern52(a: &[f64], b: &[f64], ls: &[f64], amp: f64) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(ls)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    let r = r2.sqrt();
    let s5 = 5f64.sqrt();
    amp * (1.0 + s5 * r + 5.0 * r2 / 3.0) * (-s5 * r).exp()
}

/// Gauss-Jordan inverse with partial pivoting; also returns log |det|.
pub fn invert(mut a: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    let mut logdet = 0.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        inv.swap(col, p);
        let d = a[col][col];
        logdet += d.abs().ln();
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    (inv, logdet)
}

/// Dense GP posterior: standardize, invert `K + diag I`, multiply out.
pub struct DenseGp {
    xs: Vec<Vec<f64>>,
    ls: Vec<f64>,
    amp: f64,
    mean: f64,
    scale: f64,
    inv: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    pub lml: f64,
}

impl DenseGp {
    pub fn new(xs: &[Vec<f64>], ys: &[f64], amp: f64, ls: &[f64], diag: f64) -> Self {
        let t = ys.len();
        let mean = ys.iter().sum::<f64>() / t as f64;
        let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / t as f64).sqrt();
        let scale = if sd > 1e-12 * mean.abs().max(1.0) {
            sd
        } else {
            1.0
        };
        let z: Vec<f64> = ys.iter().map(|y| (y - mean) / scale).collect();
        let k: Vec<Vec<f64>> = (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| matern52(&xs[i], &xs[j], ls, amp) + if i == j { diag } else { 0.0 })
                    .collect()
            })
            .collect();
        let (inv, logdet) = invert(k);
        let alpha: Vec<f64> = (0..t)
            .map(|i| (0..t).map(|j| inv[i][j] * z[j]).sum())
            .collect();
        let quad: f64 = z.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let lml = -0.5 * quad - 0.5 * logdet - 0.5 * t as f64 * (2.0 * std::f64::consts::PI).ln();
        Self {
            xs: xs.to_vec(),
            ls: ls.to_vec(),
            amp,
            mean,
            scale,
            inv,
            alpha,
            lml,
        }
    }

    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let ks: Vec<f64> = self
            .xs
            .iter()
            .map(|xi| matern52(xi, x, &self.ls, self.amp))
            .collect();
        let m: f64 = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let t = ks.len();
        let mut q = 0.0;
        for i in 0..t {
            for j in 0..t {
                q += ks[i] * self.inv[i][j] * ks[j];
            }
        }
        let v = (self.amp - q).max(0.0);
        (self.mean + self.scale * m, self.scale * self.scale * v)
    }
}

// ---------------------------------------------------------------- EI

pub fn ei_oracle(mean: f64, var: f64, best: f64) -> f64 {
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};
    let s = var.sqrt();
    if s == 0.0 {
        return (best - mean).max(0.0);
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    let z = (best - mean) / s;
    (best - mean) * n.cdf(z) + s * n.pdf(z)
}

// ---------------------------------------------------------------- Wilcoxon

fn midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact p by enumerating all `2^N'` sign assignments.
pub fn wilcoxon_enumeration(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|v| *v != 0.0)
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let total: f64 = ranks.iter().sum();
    let w: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let dev = (w - total / 2.0).abs();
    let n = d.len();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if (s - total / 2.0).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

// ---------------------------------------------------------------- stats

/// Reference per-dataset mean errors (percent) of the four methods on the
/// 18-dataset SVM benchmark: BO-best, BO-post, EO, EO-post.
#[allow(clippy::approx_constant)]
pub const REFERENCE_MEANS: [[f64; 18]; 4] = [
    [
        15.52, 10.67, 1.27, 16.86, 2.45, 12.49, 0.29, 3.06, 25.52, 4.43, 6.47, 23.20, 3.57, 0.10,
        23.91, 3.09, 20.59, 35.28,
    ],
    [
        15.38, 10.71, 1.56, 16.72, 2.50, 12.21, 0.28, 3.01, 25.65, 4.37, 6.47, 23.45, 2.94, 0.08,
        22.58, 3.17, 20.59, 35.09,
    ],
    [
        15.39, 10.44, 0.81, 15.06, 2.34, 12.18, 0.30, 3.14, 23.70, 4.58, 6.45, 23.05, 2.73, 0.09,
        22.61, 2.51, 20.27, 33.29,
    ],
    [
        15.27, 10.60, 0.95, 15.08, 2.36, 12.21, 0.28, 2.97, 24.03, 4.40, 6.36, 23.40, 2.55, 0.09,
        22.63, 2.69, 20.57, 33.70,
    ],
];
pub const REFERENCE_RANKS: [f64; 4] = [3.39, 2.81, 1.89, 1.92];
pub const REFERENCE_METHODS: [&str; 4] = ["BO-best", "BO-post", "EO", "EO-post"];

pub fn reference_fractions() -> Vec<Vec<f64>> {
    REFERENCE_MEANS
        .iter()
        .map(|r| r.iter().map(|v| v / 100.0).collect())
        .collect()
}

/// Rank-and-sum Friedman statistic computed from scratch.
pub fn friedman_oracle(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    let n = m[0].len();
    let mut sums = vec![0.0; k];
    for d in 0..n {
        let col: Vec<f64> = m.iter().map(|r| r[d]).collect();
        for (s, r) in sums.iter_mut().zip(midranks(&col)) {
            *s += r;
        }
    }
    let (kf, nf) = (k as f64, n as f64);
    12.0 / (nf * kf * (kf + 1.0)) * sums.iter().map(|s| s * s).sum::<f64>() - 3.0 * nf * (kf + 1.0)
}

pub fn oracle_midranks(v: &[f64]) -> Vec<f64> {
    midranks(v)
}

// ---------------------------------------------------------------- model sources

use ensopt::hyperspace::{Config, ParamSpec, SearchSpace};
use ensopt::optimizer::{Evaluation, ModelSource};
use std::sync::Mutex;

/// One-parameter threshold classifiers on a fixed grid of features: the
/// model for `x` predicts class 1 wherever the feature exceeds `x`, while
/// the truth threshold is `cut`. Validation error is the grid mass between
/// the two thresholds.
pub struct ThresholdSource {
    val_z: Vec<f64>,
    test_z: Vec<f64>,
    val_labels: Vec<u32>,
    test_labels: Vec<u32>,
    /// Calls whose 0-based index is listed here fail.
    pub fail_on: Vec<usize>,
    calls: Mutex<usize>,
}

impl ThresholdSource {
    pub fn new(n_val: usize, n_test: usize, cut: f64) -> Self {
        let grid = |n: usize, off: f64| {
            (0..n)
                .map(|i| (i as f64 + off) / n as f64)
                .collect::<Vec<_>>()
        };
        let val_z = grid(n_val, 0.5);
        let test_z = grid(n_test, 0.25);
        let lab = |z: &[f64]| z.iter().map(|&v| (v > cut) as u32).collect::<Vec<_>>();
        Self {
            val_labels: lab(&val_z),
            test_labels: lab(&test_z),
            val_z,
            test_z,
            fail_on: Vec::new(),
            calls: Mutex::new(0),
        }
    }

    pub fn space() -> SearchSpace {
        SearchSpace::new(vec![ParamSpec::continuous("x", 0.0, 1.0)]).unwrap()
    }
}

impl ModelSource for ThresholdSource {
    fn val_labels(&self) -> &[u32] {
        &self.val_labels
    }
    fn test_labels(&self) -> &[u32] {
        &self.test_labels
    }
    fn n_classes(&self) -> usize {
        2
    }
    fn fallback_label(&self) -> u32 {
        0
    }
    fn evaluate(&self, config: &Config, _seed: u64) -> ensopt::Result<Evaluation> {
        let mut calls = self.calls.lock().unwrap();
        let k = *calls;
        *calls += 1;
        if self.fail_on.contains(&k) {
            return Err(ensopt::Error::Numerical("scripted failure".into()));
        }
        let x = config.get("x").and_then(|v| v.as_f64()).unwrap();
        let pred = |z: &[f64]| z.iter().map(|&v| (v > x) as u32).collect();
        Ok(Evaluation {
            val: pred(&self.val_z),
            test: pred(&self.test_z),
        })
    }
}

/// Returns canned rows in call order, ignoring the configuration.
pub struct ScriptedSource {
    pub rows: Vec<Vec<u32>>,
    pub labels: Vec<u32>,
    pub n_classes: usize,
    calls: Mutex<usize>,
}

impl ScriptedSource {
    pub fn new(rows: Vec<Vec<u32>>, labels: Vec<u32>, n_classes: usize) -> Self {
        Self {
            rows,
            labels,
            n_classes,
            calls: Mutex::new(0),
        }
    }
}

impl ModelSource for ScriptedSource {
    fn val_labels(&self) -> &[u32] {
        &self.labels
    }
    fn test_labels(&self) -> &[u32] {
        &self.labels
    }
    fn n_classes(&self) -> usize {
        self.n_classes
    }
    fn fallback_label(&self) -> u32 {
        0
    }
    fn evaluate(&self, _config: &Config, _seed: u64) -> ensopt::Result<Evaluation> {
        let mut calls = self.calls.lock().unwrap();
        let row = self.rows[*calls % self.rows.len()].clone();
        *calls += 1;
        Ok(Evaluation {
            val: row.clone(),
            test: row,
        })
    }
}
