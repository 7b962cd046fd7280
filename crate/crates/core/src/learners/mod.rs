//! Deterministic base classifiers.
//!
//! Four small learners cover instance-based, tree, generative and linear
//! models. Each reads its hyperparameters from a [`Config`]; values that a
//! learner does not use are ignored, so one joint search space can drive all
//! of them.

mod knn;
mod linear;
mod naive_bayes;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::Label;
use crate::error::{Error, Result};
use crate::hyperspace::{Config, ParamSpec, ParamValue, SearchSpace};

pub use knn::KnnModel;
pub use linear::LinearModel;
pub use naive_bayes::GaussianNbModel;
pub use tree::{DecisionTreeModel, TreeNode};

/// Name of the categorical parameter that selects the learner.
pub const ALGORITHM_PARAM: &str = "algorithm";

/// Feature matrix with labels over a canonical, ordered label set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<Label>,
    label_names: Vec<String>,
    feature_names: Vec<String>,
    scaling: Vec<(f64, f64)>,
}

impl Dataset {
    /// Builds a dataset; requires `p >= 1`, finite features and at least two
    /// distinct labels.
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<Label>,
        label_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self::unchecked(features, labels, label_names, feature_names)?;
        let mut seen = vec![false; ds.label_names.len()];
        for &l in &ds.labels {
            seen[l as usize] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::Data(
                "dataset needs at least two distinct labels".into(),
            ));
        }
        Ok(ds)
    }

    fn unchecked(
        features: Vec<Vec<f64>>,
        labels: Vec<Label>,
        label_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let p = feature_names.len();
        if p == 0 {
            return Err(Error::Data("dataset has no feature columns".into()));
        }
        for (r, row) in features.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Data(format!(
                    "row {r} has {} features, expected {p}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {r} has a non-finite feature")));
            }
        }
        if labels.iter().any(|&l| l as usize >= label_names.len()) {
            return Err(Error::Data("label index outside the label set".into()));
        }
        let scaling = Standardizer::fit(&features, p).columns;
        Ok(Self {
            features,
            labels,
            label_names,
            feature_names,
            scaling,
        })
    }

    /// Builds a dataset from string labels, mapping them onto a canonical
    /// order: numeric order when every label parses as a number, otherwise
    /// lexicographic.
    pub fn from_labeled_rows(
        features: Vec<Vec<f64>>,
        raw_labels: &[String],
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let names = canonical_label_set(raw_labels);
        let labels = raw_labels
            .iter()
            .map(|l| names.iter().position(|n| n == l).unwrap() as Label)
            .collect();
        Self::new(features, labels, names, feature_names)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Per-column `(mean, sd)` of the full dataset, for reference only;
    /// learners standardize on their own training rows.
    pub fn scaling(&self) -> &[(f64, f64)] {
        &self.scaling
    }

    /// Rows at `indices`, keeping the full label set.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::unchecked(
            features,
            labels,
            self.label_names.clone(),
            self.feature_names.clone(),
        )
        .expect("subset of a valid dataset")
    }

    /// Appends `other`'s rows; both must share feature names, and label sets
    /// are merged into one canonical order.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.feature_names != other.feature_names {
            return Err(Error::Data(
                "datasets have different feature columns".into(),
            ));
        }
        let raw: Vec<String> = self
            .labels
            .iter()
            .map(|&l| self.label_names[l as usize].clone())
            .chain(
                other
                    .labels
                    .iter()
                    .map(|&l| other.label_names[l as usize].clone()),
            )
            .collect();
        let mut features = self.features.clone();
        features.extend(other.features.iter().cloned());
        Dataset::from_labeled_rows(features, &raw, self.feature_names.clone())
    }

    /// Most frequent label; ties to the smallest.
    pub fn majority_label(&self) -> Label {
        majority(&self.labels, self.n_classes())
    }
}

pub(crate) fn majority(labels: &[Label], n_classes: usize) -> Label {
    let mut counts = vec![0usize; n_classes.max(1)];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let mut best = 0;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = l;
        }
    }
    best as Label
}

fn canonical_label_set(raw: &[String]) -> Vec<String> {
    let mut names: Vec<String> = raw.to_vec();
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.trim().parse::<f64>().is_ok()) {
        names.sort_by(|a, b| {
            let (x, y) = (
                a.trim().parse::<f64>().unwrap(),
                b.trim().parse::<f64>().unwrap(),
            );
            x.total_cmp(&y).then_with(|| a.cmp(b))
        });
    }
    names
}

/// Column standardization fit on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    columns: Vec<(f64, f64)>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>], p: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let columns = (0..p)
            .map(|j| {
                let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (mean, if sd > 1e-12 { sd } else { 1.0 })
            })
            .collect();
        Self { columns }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.columns)
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn columns(&self) -> &[(f64, f64)] {
        &self.columns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Knn,
    DecisionTree,
    GaussianNb,
    Linear,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Knn,
        Algorithm::DecisionTree,
        Algorithm::GaussianNb,
        Algorithm::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::DecisionTree => "decision-tree",
            Algorithm::GaussianNb => "gaussian-nb",
            Algorithm::Linear => "linear",
        }
    }

    /// The hyperparameters this learner reads.
    pub fn subspace(self) -> Vec<ParamSpec> {
        match self {
            Algorithm::Knn => vec![ParamSpec::integer("n_neighbors", 1, 30)],
            Algorithm::DecisionTree => vec![
                ParamSpec::integer("max_depth", 1, 10),
                ParamSpec::integer("min_samples_split", 2, 100),
                ParamSpec::integer("min_samples_leaf", 2, 100),
            ],
            Algorithm::GaussianNb => vec![],
            Algorithm::Linear => vec![ParamSpec::log_continuous("C", 1e-5, 1e5)],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// Joint space: an `algorithm` categorical plus the union of the learners'
/// subspaces.
pub fn joint_space(algorithms: &[Algorithm]) -> Result<SearchSpace> {
    if algorithms.is_empty() {
        return Err(Error::InvalidSpace("no algorithms selected".into()));
    }
    let mut params = Vec::new();
    if algorithms.len() > 1 {
        params.push(ParamSpec::categorical(
            ALGORITHM_PARAM,
            algorithms.iter().map(|a| a.name()),
        ));
    }
    for a in algorithms {
        params.extend(a.subspace());
    }
    if params.is_empty() {
        // Gaussian NB alone has nothing to tune; keep a dummy coordinate so the
        // surrogate still has an input.
        params.push(ParamSpec::categorical(
            ALGORITHM_PARAM,
            [algorithms[0].name()],
        ));
    }
    SearchSpace::new(params)
}

/// Hyperparameters resolved from a [`Config`], with defaults for absent
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerParams {
    pub algorithm: Algorithm,
    pub n_neighbors: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub c: f64,
}

impl LearnerParams {
    pub fn from_config(config: &Config, default_algorithm: Algorithm) -> Result<Self> {
        let algorithm = match config.get(ALGORITHM_PARAM) {
            Some(v) => v
                .as_category()
                .ok_or_else(|| Error::InvalidConfig("`algorithm` must be a category".into()))?
                .parse()?,
            None => default_algorithm,
        };
        let int = |name: &str, default: i64, min: i64| -> Result<usize> {
            let v = match config.get(name) {
                Some(v) => v
                    .as_i64()
                    .ok_or_else(|| Error::InvalidConfig(format!("`{name}` must be an integer")))?,
                None => default,
            };
            if v < min {
                return Err(Error::InvalidConfig(format!(
                    "`{name}` must be at least {min}"
                )));
            }
            Ok(v as usize)
        };
        let c = match config.get("C") {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::InvalidConfig("`C` must be numeric".into()))?,
            None => 1.0,
        };
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidConfig("`C` must be positive".into()));
        }
        Ok(Self {
            algorithm,
            n_neighbors: int("n_neighbors", 5, 1)?,
            max_depth: int("max_depth", 5, 1)?,
            min_samples_split: int("min_samples_split", 2, 2)?,
            min_samples_leaf: int("min_samples_leaf", 1, 1)?,
            c,
        })
    }

    pub fn to_config(&self) -> Config {
        Config::new()
            .with(
                ALGORITHM_PARAM,
                ParamValue::Category(self.algorithm.name().into()),
            )
            .with("n_neighbors", ParamValue::Int(self.n_neighbors as i64))
            .with("max_depth", ParamValue::Int(self.max_depth as i64))
            .with(
                "min_samples_split",
                ParamValue::Int(self.min_samples_split as i64),
            )
            .with(
                "min_samples_leaf",
                ParamValue::Int(self.min_samples_leaf as i64),
            )
            .with("C", ParamValue::Real(self.c))
    }
}

#[derive(Debug, Clone)]
pub enum FittedModel {
    /// Single-class training data.
    Constant(Label),
    Knn(KnnModel),
    Tree(DecisionTreeModel),
    GaussianNb(GaussianNbModel),
    Linear(LinearModel),
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub config: Config,
    pub fitted: FittedModel,
    pub seed: u64,
    pub fold: Option<usize>,
    pub n_features: usize,
}

impl TrainedModel {
    pub fn is_degenerate(&self) -> bool {
        matches!(self.fitted, FittedModel::Constant(_))
    }
}

/// Trains `algo` on `data`. Hyperparameters are read from `config`;
/// an `algorithm` entry in `config` overrides `algo`.
pub fn train(algo: Algorithm, config: &Config, data: &Dataset, seed: u64) -> Result<TrainedModel> {
    let params = LearnerParams::from_config(config, algo)?;
    let n_classes = data.n_classes();
    let mut present = vec![false; n_classes];
    for &l in data.labels() {
        present[l as usize] = true;
    }
    if data.n() == 0 {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let fitted = if present.iter().filter(|&&p| p).count() < 2 {
        FittedModel::Constant(data.labels()[0])
    } else {
        match params.algorithm {
            Algorithm::Knn => FittedModel::Knn(KnnModel::fit(data, params.n_neighbors)),
            Algorithm::DecisionTree => FittedModel::Tree(DecisionTreeModel::fit(
                data,
                params.max_depth,
                params.min_samples_split,
                params.min_samples_leaf,
            )),
            Algorithm::GaussianNb => FittedModel::GaussianNb(GaussianNbModel::fit(data)),
            Algorithm::Linear => FittedModel::Linear(LinearModel::fit(data, params.c)),
        }
    };
    Ok(TrainedModel {
        algorithm: params.algorithm,
        config: config.clone(),
        fitted,
        seed,
        fold: None,
        n_features: data.p(),
    })
}

pub fn predict(model: &TrainedModel, features: &[Vec<f64>]) -> Result<Vec<Label>> {
    if let Some(bad) = features.iter().find(|r| r.len() != model.n_features) {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            got: bad.len(),
        });
    }
    Ok(features
        .iter()
        .map(|row| match &model.fitted {
            FittedModel::Constant(l) => *l,
            FittedModel::Knn(m) => m.predict_row(row),
            FittedModel::Tree(m) => m.predict_row(row),
            FittedModel::GaussianNb(m) => m.predict_row(row),
            FittedModel::Linear(m) => m.predict_row(row),
        })
        .collect())
}
