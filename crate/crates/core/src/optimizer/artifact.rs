use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{Label, LossKind, PredictionMatrix};
use crate::error::{Error, Result};
use crate::hyperspace::SearchSpace;

use super::history::{Evaluation, History, ModelRecord};
use super::search::IterationRecord;

/// Run parameters needed to interpret the artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: String,
    pub budget: usize,
    pub init: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    pub loss: LossKind,
    pub seed: u64,
    pub space_digest: String,
    pub space: SearchSpace,
    /// Canonical label order; CSV files store these names.
    pub label_names: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// A final model or ensemble and its errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub members: Vec<usize>,
    pub val_error: f64,
    pub test_error: f64,
}

/// Final selections keyed by method name (`bo-best`, `eo-post`, ...).
pub type Selections = BTreeMap<String, SelectionRecord>;

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub meta: RunMeta,
    pub iterations: Vec<IterationRecord>,
    pub selections: Selections,
}

/// An artifact directory read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub artifact: RunArtifact,
    pub history: History,
}

fn artifact_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn write_predictions(path: &Path, preds: &PredictionMatrix, names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..preds.n_samples()).map(|i| format!("s{i}")));
    w.write_record(&header)?;
    for (id, row) in preds.rows().iter().enumerate() {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|&l| names[l as usize].clone()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_labels(path: &Path, labels: &[Label], names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "label"])?;
    for (i, &l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), names[l as usize].clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `run.json`, `history/configs.json`, `history/predictions_*.csv`
/// and `labels_*.csv` under `dir`.
pub fn write_run(dir: impl AsRef<Path>, artifact: &RunArtifact, history: &History) -> Result<()> {
    let dir = dir.as_ref();
    let names = &artifact.meta.label_names;
    if names.len() != history.val_predictions().n_classes() {
        return Err(Error::InvalidArgument(
            "label names do not match the history".into(),
        ));
    }
    fs::create_dir_all(dir.join("history"))?;
    fs::write(
        dir.join("run.json"),
        serde_json::to_string_pretty(artifact)? + "\n",
    )?;
    fs::write(
        dir.join("history/configs.json"),
        serde_json::to_string_pretty(history.records())? + "\n",
    )?;
    write_predictions(
        &dir.join("history/predictions_val.csv"),
        history.val_predictions(),
        names,
    )?;
    write_predictions(
        &dir.join("history/predictions_test.csv"),
        history.test_predictions(),
        names,
    )?;
    write_labels(
        &dir.join("labels_val.csv"),
        history.val_predictions().labels(),
        names,
    )?;
    write_labels(
        &dir.join("labels_test.csv"),
        history.test_predictions().labels(),
        names,
    )?;
    Ok(())
}

fn label_index(path: &Path, names: &[String], cell: &str) -> Result<Label> {
    names
        .iter()
        .position(|n| n == cell)
        .map(|i| i as Label)
        .ok_or_else(|| artifact_err(path, format!("unknown label `{cell}`")))
}

fn read_labels(path: &Path, names: &[String]) -> Result<Vec<Label>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| artifact_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| artifact_err(path, e.to_string()))?;
        if rec.len() != 2 || rec[0].parse::<usize>().ok() != Some(i) {
            return Err(artifact_err(path, format!("malformed row {}", i + 1)));
        }
        out.push(label_index(path, names, &rec[1])?);
    }
    Ok(out)
}

fn read_predictions(path: &Path, names: &[String], n_samples: usize) -> Result<Vec<Vec<Label>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| artifact_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| artifact_err(path, e.to_string()))?;
        if rec.len() != n_samples + 1 || rec[0].parse::<usize>().ok() != Some(i) {
            return Err(artifact_err(path, format!("malformed row for model {i}")));
        }
        out.push(
            rec.iter()
                .skip(1)
                .map(|c| label_index(path, names, c))
                .collect::<Result<_>>()?,
        );
    }
    Ok(out)
}

fn read_json<T: serde::de::DeserializeOwned>(path: PathBuf) -> Result<T> {
    let text = fs::read_to_string(&path).map_err(|e| artifact_err(&path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| artifact_err(&path, e.to_string()))
}

/// Rebuilds the artifact and the full history from an artifact directory.
pub fn load_run(dir: impl AsRef<Path>) -> Result<LoadedRun> {
    let dir = dir.as_ref();
    let artifact: RunArtifact = read_json(dir.join("run.json"))?;
    let records: Vec<ModelRecord> = read_json(dir.join("history/configs.json"))?;
    let names = &artifact.meta.label_names;
    let val_labels = read_labels(&dir.join("labels_val.csv"), names)?;
    let test_labels = read_labels(&dir.join("labels_test.csv"), names)?;
    let val_path = dir.join("history/predictions_val.csv");
    let test_path = dir.join("history/predictions_test.csv");
    let val = read_predictions(&val_path, names, val_labels.len())?;
    let test = read_predictions(&test_path, names, test_labels.len())?;
    if val.len() != records.len() || test.len() != records.len() {
        return Err(artifact_err(
            dir,
            "prediction files and configs.json disagree on the model count",
        ));
    }
    let mut history = History::new(val_labels, test_labels, names.len())?;
    for ((rec, v), t) in records.into_iter().zip(val).zip(test) {
        let id = history.push(
            rec.config,
            rec.point,
            Evaluation { val: v, test: t },
            rec.failure,
        )?;
        if id != rec.id {
            return Err(artifact_err(
                dir,
                format!("model ids are not dense at {}", rec.id),
            ));
        }
    }
    Ok(LoadedRun { artifact, history })
}
