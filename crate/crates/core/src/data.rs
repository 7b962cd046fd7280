//! CSV ingestion, stratified splits and cross-validated predictions.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ensemble::Label;
use crate::error::{Error, Result};
use crate::hyperspace::Config;
use crate::learners::{predict, train, Algorithm, Dataset};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        LabelColumn::Name(s.to_string())
    }
}

impl From<usize> for LabelColumn {
    fn from(i: usize) -> Self {
        LabelColumn::Index(i)
    }
}

impl LabelColumn {
    /// Parses a command-line value: all digits means an index.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

/// Reads a headed CSV with numeric feature columns.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, label)
}

pub fn read_csv<R: std::io::Read>(reader: R, label: &LabelColumn) -> Result<Dataset> {
    let raw = parse_csv(reader, label)?;
    Dataset::from_labeled_rows(raw.features, &raw.labels, raw.feature_names)
}

/// Loads a training CSV and a fixed test CSV. Returns the concatenated
/// dataset and the number of training rows preceding the test rows. The
/// test file may contain a single class.
pub fn load_csv_with_test(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    label: &LabelColumn,
) -> Result<(Dataset, usize)> {
    let mut train = parse_csv(std::fs::File::open(train_path.as_ref())?, label)?;
    let test = parse_csv(std::fs::File::open(test_path.as_ref())?, label)?;
    if test.feature_names != train.feature_names {
        return Err(Error::Data(
            "test file columns differ from the training file".into(),
        ));
    }
    let n_train = train.labels.len();
    train.features.extend(test.features);
    train.labels.extend(test.labels);
    Ok((
        Dataset::from_labeled_rows(train.features, &train.labels, train.feature_names)?,
        n_train,
    ))
}

struct RawTable {
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
    feature_names: Vec<String>,
}

fn parse_csv<R: std::io::Read>(reader: R, label: &LabelColumn) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::Data(format!("label column index {i} out of range")))
        }
        LabelColumn::Name(n) => headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Data(format!("label column `{n}` not found")))?,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: "-".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut x = Vec::with_capacity(feature_names.len());
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                if cell.is_empty() {
                    return Err(Error::Parse {
                        row,
                        column: headers[i].clone(),
                        message: "missing label".into(),
                    });
                }
                labels.push(cell.to_string());
                continue;
            }
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: headers[i].clone(),
                    message: format!("`{cell}` is not a finite number"),
                })?;
            x.push(v);
        }
        features.push(x);
    }
    Ok(RawTable {
        features,
        labels,
        feature_names,
    })
}

/// Test indices plus `k` validation folds over the remaining rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
    /// Labels with fewer non-test rows than folds.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SplitPlan {
    /// Sorted indices not in the test set; prediction rows are aligned to
    /// this order.
    pub fn non_test(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.folds.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }
}

fn indices_by_label(data: &Dataset, pool: &[usize]) -> Vec<Vec<usize>> {
    let mut by = vec![Vec::new(); data.n_classes()];
    for &i in pool {
        by[data.labels()[i] as usize].push(i);
    }
    by
}

fn assign_folds(
    data: &Dataset,
    pool: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<usize>>, Vec<String>) {
    let mut folds = vec![Vec::new(); k];
    let mut warnings = Vec::new();
    let mut pos = 0;
    for (label, mut idx) in indices_by_label(data, pool).into_iter().enumerate() {
        if !idx.is_empty() && idx.len() < k {
            warnings.push(format!(
                "label `{}` has {} non-test rows for {k} folds",
                data.label_names()[label],
                idx.len()
            ));
        }
        idx.shuffle(rng);
        for i in idx {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    (folds, warnings)
}

/// Stratified test split of `floor(n * test_fraction)` rows, then `k`
/// stratified folds over the rest.
pub fn make_split(data: &Dataset, test_fraction: f64, k: usize, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(
            "at least two folds are required".into(),
        ));
    }
    let n = data.n();
    let total = (n as f64 * test_fraction).floor() as usize;
    let by_label = indices_by_label(data, &(0..n).collect::<Vec<_>>());

    // Largest-remainder apportionment keeps each label within one row of
    // its exact share.
    let quotas: Vec<f64> = by_label
        .iter()
        .map(|v| v.len() as f64 * test_fraction)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = total.saturating_sub(take.iter().sum());
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        (quotas[b] - quotas[b].floor())
            .total_cmp(&(quotas[a] - quotas[a].floor()))
            .then(a.cmp(&b))
    });
    for &l in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if take[l] < by_label[l].len() {
            take[l] += 1;
            remaining -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(total);
    let mut rest = Vec::with_capacity(n - total);
    for (mut idx, t) in by_label.into_iter().zip(take) {
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..t]);
        rest.extend_from_slice(&idx[t..]);
    }
    test.sort_unstable();
    rest.sort_unstable();
    let (folds, warnings) = assign_folds(data, &rest, k, &mut rng);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SplitPlan {
        test,
        folds,
        seed,
        warnings,
    })
}

/// Split with a predetermined test set (e.g. the rows of a separate test
/// file); folds are drawn over the remaining rows.
pub fn make_split_fixed_test(
    data: &Dataset,
    test: Vec<usize>,
    k: usize,
    seed: u64,
) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "at least two folds are required".into(),
        ));
    }
    if let Some(&bad) = test.iter().find(|&&i| i >= data.n()) {
        return Err(Error::InvalidArgument(format!(
            "test index {bad} out of range"
        )));
    }
    let mut test = test;
    test.sort_unstable();
    test.dedup();
    let rest: Vec<usize> = (0..data.n())
        .filter(|i| test.binary_search(i).is_err())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (folds, warnings) = assign_folds(data, &rest, k, &mut rng);
    Ok(SplitPlan {
        test,
        folds,
        seed,
        warnings,
    })
}

/// Cross-validated predictions of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPredictions {
    /// Pooled out-of-fold predictions over `plan.non_test()`.
    pub val: Vec<Label>,
    /// Predictions on `plan.test` from a model retrained on all non-test rows.
    pub test: Vec<Label>,
    /// Per-fold predictions, aligned to `plan.folds[f]`.
    pub folds: Vec<Vec<Label>>,
}

pub fn cross_val_predictions(
    algo: Algorithm,
    config: &Config,
    data: &Dataset,
    plan: &SplitPlan,
    seed: u64,
) -> Result<CvPredictions> {
    let non_test = plan.non_test();
    let mut val = vec![0; non_test.len()];
    let mut fold_rows = Vec::with_capacity(plan.k());
    for (f, fold) in plan.folds.iter().enumerate() {
        let train_idx: Vec<usize> = plan
            .folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        if fold.is_empty() {
            fold_rows.push(Vec::new());
            continue;
        }
        let mut model = train(algo, config, &data.subset(&train_idx), seed)?;
        model.fold = Some(f);
        let rows: Vec<Vec<f64>> = fold.iter().map(|&i| data.features()[i].clone()).collect();
        let pred = predict(&model, &rows)?;
        for (&i, &p) in fold.iter().zip(&pred) {
            val[non_test.binary_search(&i).expect("fold index is non-test")] = p;
        }
        fold_rows.push(pred);
    }
    let full = train(algo, config, &data.subset(&non_test), seed)?;
    let test_rows: Vec<Vec<f64>> = plan
        .test
        .iter()
        .map(|&i| data.features()[i].clone())
        .collect();
    let test = predict(&full, &test_rows)?;
    Ok(CvPredictions {
        val,
        test,
        folds: fold_rows,
    })
}

/// Isotropic Gaussian blobs with `per_class` rows around each center.
pub fn make_blobs(centers: &[Vec<f64>], per_class: usize, sd: f64, seed: u64) -> Result<Dataset> {
    if centers.len() < 2 || per_class == 0 {
        return Err(Error::InvalidArgument(
            "need at least two centers and one row per class".into(),
        ));
    }
    let p = centers[0].len();
    if p == 0 || centers.iter().any(|c| c.len() != p) {
        return Err(Error::InvalidArgument(
            "centers must share a positive dimension".into(),
        ));
    }
    let noise = Normal::new(0.0, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per_class {
        for (c, center) in centers.iter().enumerate() {
            features.push(center.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(c as Label);
        }
    }
    Dataset::new(
        features,
        labels,
        (0..centers.len()).map(|c| c.to_string()).collect(),
        (0..p).map(|j| format!("x{j}")).collect(),
    )
}

/// Two interleaved half circles with Gaussian noise, `n` rows in total.
pub fn make_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::InvalidArgument("need at least four rows".into()));
    }
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let outer = n / 2;
    for i in 0..n {
        let (x, y, l) = if i < outer {
            let t = std::f64::consts::PI * i as f64 / (outer - 1).max(1) as f64;
            (t.cos(), t.sin(), 0)
        } else {
            let k = n - outer;
            let t = std::f64::consts::PI * (i - outer) as f64 / (k - 1).max(1) as f64;
            (1.0 - t.cos(), 0.5 - t.sin(), 1)
        };
        features.push(vec![
            x + jitter.sample(&mut rng),
            y + jitter.sample(&mut rng),
        ]);
        labels.push(l);
    }
    Dataset::new(
        features,
        labels,
        vec!["0".into(), "1".into()],
        vec!["x0".into(), "x1".into()],
    )
}

/// Writes a dataset as CSV with a trailing `label` column.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = data.feature_names().to_vec();
    header.push("label".into());
    w.write_record(&header)?;
    for (x, &l) in data.features().iter().zip(data.labels()) {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(data.label_names()[l as usize].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
