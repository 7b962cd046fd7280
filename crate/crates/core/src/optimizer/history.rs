use serde::{Deserialize, Serialize};

use crate::data::{cross_val_predictions, SplitPlan};
use crate::ensemble::{zero_one_ensemble_loss, Label, PredictionMatrix};
use crate::error::{Error, Result};
use crate::hyperspace::Config;
use crate::learners::{Algorithm, Dataset};

/// Validation and test predictions of one trained configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub val: Vec<Label>,
    pub test: Vec<Label>,
}

/// Anything that turns a configuration into prediction rows.
///
/// The cross-validation harness is the real implementation; tests plug in
/// stubs that return canned rows.
pub trait ModelSource: Sync {
    fn val_labels(&self) -> &[Label];
    fn test_labels(&self) -> &[Label];
    fn n_classes(&self) -> usize;
    /// Label predicted by the constant model recorded when training fails.
    fn fallback_label(&self) -> Label;
    fn evaluate(&self, config: &Config, seed: u64) -> Result<Evaluation>;
}

/// Pooled cross-validation over a split plan.
#[derive(Debug, Clone)]
pub struct CvModelSource<'a> {
    data: &'a Dataset,
    plan: &'a SplitPlan,
    algorithm: Algorithm,
    val_labels: Vec<Label>,
    test_labels: Vec<Label>,
    fallback: Label,
}

impl<'a> CvModelSource<'a> {
    /// `algorithm` is used when a configuration carries no `algorithm` entry.
    pub fn new(data: &'a Dataset, plan: &'a SplitPlan, algorithm: Algorithm) -> Self {
        let non_test = plan.non_test();
        let val_labels: Vec<Label> = non_test.iter().map(|&i| data.labels()[i]).collect();
        let test_labels = plan.test.iter().map(|&i| data.labels()[i]).collect();
        let fallback = crate::learners::majority(&val_labels, data.n_classes());
        Self {
            data,
            plan,
            algorithm,
            val_labels,
            test_labels,
            fallback,
        }
    }
}

impl ModelSource for CvModelSource<'_> {
    fn val_labels(&self) -> &[Label] {
        &self.val_labels
    }

    fn test_labels(&self) -> &[Label] {
        &self.test_labels
    }

    fn n_classes(&self) -> usize {
        self.data.n_classes()
    }

    fn fallback_label(&self) -> Label {
        self.fallback
    }

    fn evaluate(&self, config: &Config, seed: u64) -> Result<Evaluation> {
        let cv = cross_val_predictions(self.algorithm, config, self.data, self.plan, seed)?;
        Ok(Evaluation {
            val: cv.val,
            test: cv.test,
        })
    }
}

/// Metadata of one pool model. Prediction rows live in the history's
/// matrices under the same id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: usize,
    pub config: Config,
    pub point: Vec<f64>,
    /// Single-model zero-one loss on the pooled validation rows.
    pub val_loss: f64,
    /// Set when training failed and a constant model was recorded instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Every model trained during an optimization, in creation order.
/// Ids are 0-based and dense.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    records: Vec<ModelRecord>,
    val: PredictionMatrix,
    test: PredictionMatrix,
}

impl History {
    pub fn new(val_labels: Vec<Label>, test_labels: Vec<Label>, n_classes: usize) -> Result<Self> {
        if val_labels.is_empty() {
            return Err(Error::InvalidArgument("no validation rows".into()));
        }
        Ok(Self {
            records: Vec::new(),
            val: PredictionMatrix::empty(val_labels, n_classes)?,
            test: PredictionMatrix::empty(test_labels, n_classes)?,
        })
    }

    pub fn for_source<S: ModelSource + ?Sized>(source: &S) -> Result<Self> {
        Self::new(
            source.val_labels().to_vec(),
            source.test_labels().to_vec(),
            source.n_classes(),
        )
    }

    /// Appends a model and returns its id.
    pub fn push(
        &mut self,
        config: Config,
        point: Vec<f64>,
        eval: Evaluation,
        failure: Option<String>,
    ) -> Result<usize> {
        let id = self.records.len();
        self.val.check_row(&eval.val)?;
        self.test.check_row(&eval.test)?;
        self.val.push(eval.val)?;
        self.test.push(eval.test)?;
        let val_loss = zero_one_ensemble_loss(&[id], &self.val)?;
        self.records.push(ModelRecord {
            id,
            config,
            point,
            val_loss,
            failure,
        });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn record(&self, id: usize) -> Result<&ModelRecord> {
        self.records.get(id).ok_or(Error::UnknownModel(id))
    }

    pub fn val_predictions(&self) -> &PredictionMatrix {
        &self.val
    }

    pub fn test_predictions(&self) -> &PredictionMatrix {
        &self.test
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.point.clone()).collect()
    }

    pub fn val_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.val_loss).collect()
    }
}
