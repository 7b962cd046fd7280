//! Majority-vote ensembles over stored prediction rows.
//!
//! Models never appear here as trained objects: a pool is a
//! [`PredictionMatrix`] with one row of predicted labels per model, and an
//! ensemble is a multiset of row indices. All losses are normalized by the
//! number of evaluation samples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a canonical, ordered label set.
pub type Label = u32;

/// Ensemble loss used to score candidate additions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Majority-vote misclassification rate.
    ZeroOne,
    /// `(1 - M) / 2` averaged over samples. Analysis only.
    Margin,
    /// `(1 - M)^2 / 4` averaged over samples.
    SquaredMargin,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::ZeroOne => "zero-one",
            LossKind::Margin => "margin",
            LossKind::SquaredMargin => "squared-margin",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-one" => Ok(LossKind::ZeroOne),
            "margin" => Ok(LossKind::Margin),
            "squared-margin" => Ok(LossKind::SquaredMargin),
            other => Err(Error::InvalidConfig(format!("unknown loss `{other}`"))),
        }
    }
}

/// Per-model label predictions over a fixed evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    rows: Vec<Vec<Label>>,
    labels: Vec<Label>,
    n_classes: usize,
}

impl PredictionMatrix {
    pub fn new(rows: Vec<Vec<Label>>, labels: Vec<Label>, n_classes: usize) -> Result<Self> {
        let mut m = Self::empty(labels, n_classes)?;
        for row in rows {
            m.push(row)?;
        }
        Ok(m)
    }

    /// A pool with no models yet.
    pub fn empty(labels: Vec<Label>, n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::InvalidArgument("label set is empty".into()));
        }
        if labels.iter().any(|&l| l as usize >= n_classes) {
            return Err(Error::InvalidArgument(
                "true label outside the label set".into(),
            ));
        }
        Ok(Self {
            rows: Vec::new(),
            labels,
            n_classes,
        })
    }

    /// Appends one model's predictions; returns its id.
    pub fn push(&mut self, row: Vec<Label>) -> Result<usize> {
        self.check_row(&row)?;
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    /// Checks that `row` could be pushed.
    pub fn check_row(&self, row: &[Label]) -> Result<()> {
        if row.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: row.len(),
            });
        }
        if row.iter().any(|&l| l as usize >= self.n_classes) {
            return Err(Error::InvalidArgument(
                "prediction outside the label set".into(),
            ));
        }
        Ok(())
    }

    pub fn n_models(&self) -> usize {
        self.rows.len()
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<Label>] {
        &self.rows
    }

    pub fn row(&self, id: usize) -> Result<&[Label]> {
        self.rows
            .get(id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownModel(id))
    }

    fn check_members(&self, members: &[usize]) -> Result<()> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("ensemble has no members".into()));
        }
        match members.iter().find(|&&id| id >= self.rows.len()) {
            Some(&id) => Err(Error::UnknownModel(id)),
            None => Ok(()),
        }
    }
}

/// Fixed-size ensemble of slots; each slot is empty or holds a pool id.
/// The same model may occupy several slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ensemble {
    pub slots: Vec<Option<usize>>,
}

impl Ensemble {
    pub fn with_size(m: usize) -> Self {
        Self {
            slots: vec![None; m],
        }
    }

    pub fn from_members(members: Vec<usize>) -> Self {
        Self {
            slots: members.into_iter().map(Some).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.slots.len()
    }

    /// Ids in occupied slots, in slot order.
    pub fn members(&self) -> Vec<usize> {
        self.slots.iter().flatten().copied().collect()
    }

    pub fn occupied(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// `members()` with the slot at `skip` left out.
    fn members_except(&self, skip: usize) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != skip)
            .filter_map(|(_, s)| *s)
            .collect()
    }
}

/// Majority vote of `members` on sample `i`; ties go to the smallest label.
pub fn majority_vote(members: &[usize], preds: &PredictionMatrix, i: usize) -> Result<Label> {
    preds.check_members(members)?;
    if i >= preds.n_samples() {
        return Err(Error::InvalidArgument(format!(
            "sample index {i} out of range"
        )));
    }
    let mut counts = vec![0u32; preds.n_classes];
    for &h in members {
        counts[preds.rows[h][i] as usize] += 1;
    }
    Ok(argmax_smallest(&counts))
}

fn argmax_smallest(counts: &[u32]) -> Label {
    let mut best = 0;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = l;
        }
    }
    best as Label
}

/// Normalized multi-class margin on sample `i`.
pub fn margin(members: &[usize], preds: &PredictionMatrix, i: usize) -> Result<f64> {
    preds.check_members(members)?;
    if i >= preds.n_samples() {
        return Err(Error::InvalidArgument(format!(
            "sample index {i} out of range"
        )));
    }
    let y = preds.labels[i];
    let correct = members.iter().filter(|&&h| preds.rows[h][i] == y).count();
    Ok(margin_from_counts(correct as u32, members.len() as u32))
}

#[inline]
fn margin_from_counts(correct: u32, size: u32) -> f64 {
    (2.0 * correct as f64 - size as f64) / size as f64
}

/// Integer numerator of one sample's margin-family loss. With `size`
/// voters and `correct` of them right, `(1 - M) / 2 = wrong / size` and
/// `(1 - M)^2 / 4 = wrong^2 / size^2`; summing numerators keeps tied
/// candidates bit-identical.
#[inline]
fn margin_numerator(correct: u32, size: u32, loss: LossKind) -> u64 {
    let wrong = (size - correct) as u64;
    match loss {
        LossKind::Margin => wrong,
        LossKind::SquaredMargin => wrong * wrong,
        LossKind::ZeroOne => unreachable!("zero-one loss is vote based"),
    }
}

#[inline]
fn margin_denominator(size: u32, n: usize, loss: LossKind) -> f64 {
    let s = size as f64;
    match loss {
        LossKind::Margin => s * n as f64,
        LossKind::SquaredMargin => s * s * n as f64,
        LossKind::ZeroOne => unreachable!("zero-one loss is vote based"),
    }
}

/// Loss of the ensemble made of `members` (a multiset).
pub fn ensemble_loss(members: &[usize], preds: &PredictionMatrix, loss: LossKind) -> Result<f64> {
    preds.check_members(members)?;
    let n = preds.n_samples();
    if n == 0 {
        return Ok(0.0);
    }
    match loss {
        LossKind::ZeroOne => {
            let mut errors = 0usize;
            for i in 0..n {
                if majority_vote(members, preds, i)? != preds.labels[i] {
                    errors += 1;
                }
            }
            Ok(errors as f64 / n as f64)
        }
        LossKind::Margin | LossKind::SquaredMargin => {
            let size = members.len() as u32;
            let mut total = 0u64;
            for i in 0..n {
                let y = preds.labels[i];
                let correct = members.iter().filter(|&&h| preds.rows[h][i] == y).count() as u32;
                total += margin_numerator(correct, size, loss);
            }
            Ok(total as f64 / margin_denominator(size, n, loss))
        }
    }
}

pub fn zero_one_ensemble_loss(members: &[usize], preds: &PredictionMatrix) -> Result<f64> {
    ensemble_loss(members, preds, LossKind::ZeroOne)
}

pub fn margin_loss(members: &[usize], preds: &PredictionMatrix) -> Result<f64> {
    ensemble_loss(members, preds, LossKind::Margin)
}

pub fn squared_margin_loss(members: &[usize], preds: &PredictionMatrix) -> Result<f64> {
    ensemble_loss(members, preds, LossKind::SquaredMargin)
}

/// Loss of the occupied slots plus `candidate`; on an empty ensemble this is
/// the candidate's own loss.
pub fn eval_with_candidate(
    ensemble: &Ensemble,
    candidate: usize,
    preds: &PredictionMatrix,
    loss: LossKind,
) -> Result<f64> {
    if candidate >= preds.n_models() {
        return Err(Error::UnknownModel(candidate));
    }
    let mut members = ensemble.members();
    members.push(candidate);
    ensemble_loss(&members, preds, loss)
}

/// Vote tallies of a fixed base ensemble, so that the loss of "base plus one
/// candidate" costs O(n) per candidate.
struct BaseVotes<'a> {
    preds: &'a PredictionMatrix,
    size: u32,
    counts: Vec<u32>,
    winner: Vec<Label>,
    top: Vec<u32>,
    correct: Vec<u32>,
}

impl<'a> BaseVotes<'a> {
    fn new(members: &[usize], preds: &'a PredictionMatrix) -> Result<Self> {
        if let Some(&id) = members.iter().find(|&&id| id >= preds.n_models()) {
            return Err(Error::UnknownModel(id));
        }
        let n = preds.n_samples();
        let c = preds.n_classes;
        let mut counts = vec![0u32; n * c];
        let mut correct = vec![0u32; n];
        for &h in members {
            let row = &preds.rows[h];
            for i in 0..n {
                counts[i * c + row[i] as usize] += 1;
                if row[i] == preds.labels[i] {
                    correct[i] += 1;
                }
            }
        }
        let mut winner = vec![0; n];
        let mut top = vec![0; n];
        for i in 0..n {
            let w = argmax_smallest(&counts[i * c..(i + 1) * c]);
            winner[i] = w;
            top[i] = counts[i * c + w as usize];
        }
        Ok(Self {
            preds,
            size: members.len() as u32,
            counts,
            winner,
            top,
            correct,
        })
    }

    fn loss_with(&self, candidate: usize, loss: LossKind) -> f64 {
        let n = self.preds.n_samples();
        if n == 0 {
            return 0.0;
        }
        let row = &self.preds.rows[candidate];
        let labels = &self.preds.labels;
        let c = self.preds.n_classes;
        match loss {
            LossKind::ZeroOne => {
                let mut errors = 0usize;
                for i in 0..n {
                    let l = row[i];
                    let votes = self.counts[i * c + l as usize] + 1;
                    let w = self.winner[i];
                    let vote = if l == w || votes > self.top[i] {
                        l
                    } else if votes == self.top[i] {
                        l.min(w)
                    } else {
                        w
                    };
                    if vote != labels[i] {
                        errors += 1;
                    }
                }
                errors as f64 / n as f64
            }
            LossKind::Margin | LossKind::SquaredMargin => {
                let size = self.size + 1;
                let mut total = 0u64;
                for i in 0..n {
                    let correct = self.correct[i] + (row[i] == labels[i]) as u32;
                    total += margin_numerator(correct, size, loss);
                }
                total as f64 / margin_denominator(size, n, loss)
            }
        }
    }

    /// Pool-wide argmin of `loss_with`; ties go to the lowest id.
    fn best_candidate(&self, loss: LossKind) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for h in 0..self.preds.n_models() {
            let v = self.loss_with(h, loss);
            if v < best.1 {
                best = (h, v);
            }
        }
        best
    }
}

/// `eval_with_candidate` for every pool model, in pool order.
pub fn observation_vector(
    ensemble: &Ensemble,
    preds: &PredictionMatrix,
    loss: LossKind,
) -> Result<Vec<f64>> {
    let base = BaseVotes::new(&ensemble.members(), preds)?;
    Ok((0..preds.n_models())
        .map(|h| base.loss_with(h, loss))
        .collect())
}

/// Forward greedy selection with replacement, warm-started with the
/// `warm_k` individually best models.
pub fn greedy_select(
    preds: &PredictionMatrix,
    size: usize,
    warm_k: usize,
    loss: LossKind,
) -> Result<Ensemble> {
    let t = preds.n_models();
    if t == 0 {
        return Err(Error::InvalidArgument("pool is empty".into()));
    }
    if warm_k > size {
        return Err(Error::InvalidArgument(format!(
            "warm start {warm_k} exceeds ensemble size {size}"
        )));
    }
    if warm_k > t {
        return Err(Error::InvalidArgument(format!(
            "warm start {warm_k} exceeds pool size {t}"
        )));
    }
    let singles = observation_vector(&Ensemble::with_size(0), preds, loss)?;
    let mut order: Vec<usize> = (0..t).collect();
    // Stable sort keeps lower ids first among equal losses.
    order.sort_by(|&a, &b| singles[a].total_cmp(&singles[b]));
    let mut members: Vec<usize> = order[..warm_k].to_vec();
    while members.len() < size {
        let base = BaseVotes::new(&members, preds)?;
        members.push(base.best_candidate(loss).0);
    }
    Ok(Ensemble::from_members(members))
}

/// Vacates slot `slot` and refills it with the pool-wide best addition given
/// the remaining slots. The removed model may be chosen again.
pub fn round_robin_replace(
    ensemble: &Ensemble,
    slot: usize,
    preds: &PredictionMatrix,
    loss: LossKind,
) -> Result<Ensemble> {
    if slot >= ensemble.size() {
        return Err(Error::InvalidArgument(format!(
            "slot {slot} out of range for ensemble of size {}",
            ensemble.size()
        )));
    }
    if preds.n_models() == 0 {
        return Err(Error::InvalidArgument("pool is empty".into()));
    }
    let base = BaseVotes::new(&ensemble.members_except(slot), preds)?;
    let mut out = ensemble.clone();
    out.slots[slot] = Some(base.best_candidate(loss).0);
    Ok(out)
}
