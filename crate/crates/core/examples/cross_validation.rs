//! Loading a CSV, splitting it and producing pooled cross-validation
//! predictions for each learner.

use std::path::Path;

use ensopt::data::{cross_val_predictions, load_csv, make_split, LabelColumn};
use ensopt::hyperspace::{Config, ParamValue};
use ensopt::learners::Algorithm;

fn error(pred: &[u32], truth: &[u32]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / truth.len() as f64
}

fn main() -> ensopt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/toy.csv");
    let data = load_csv(&path, &LabelColumn::from("species"))?;
    println!(
        "{} rows, {} features, labels {:?}",
        data.n(),
        data.p(),
        data.label_names()
    );

    let plan = make_split(&data, 0.33, 5, 0)?;
    println!(
        "test {} rows, fold sizes {:?}",
        plan.test.len(),
        plan.folds.iter().map(Vec::len).collect::<Vec<_>>()
    );
    let val_truth: Vec<u32> = plan.non_test().iter().map(|&i| data.labels()[i]).collect();
    let test_truth: Vec<u32> = plan.test.iter().map(|&i| data.labels()[i]).collect();

    let configs = [
        (
            Algorithm::Knn,
            Config::new().with("n_neighbors", ParamValue::Int(7)),
        ),
        (
            Algorithm::DecisionTree,
            Config::new().with("max_depth", ParamValue::Int(3)),
        ),
        (Algorithm::GaussianNb, Config::new()),
        (
            Algorithm::Linear,
            Config::new().with("C", ParamValue::Real(10.0)),
        ),
    ];
    for (algo, cfg) in configs {
        let cv = cross_val_predictions(algo, &cfg, &data, &plan, 0)?;
        println!(
            "{:>14}: validation error {:.3}, test error {:.3}",
            algo.name(),
            error(&cv.val, &val_truth),
            error(&cv.test, &test_truth)
        );
    }
    Ok(())
}
