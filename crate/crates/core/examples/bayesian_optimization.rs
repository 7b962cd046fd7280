//! Classical Bayesian optimization: first on a plain function, then over
//! learner hyperparameters with cross-validation.

use std::path::Path;

use ensopt::data::{load_csv, make_split, LabelColumn};
use ensopt::learners::{joint_space, Algorithm};
use ensopt::optimizer::{
    evaluate_on_test, minimize, run_bo, select_best, CvModelSource, SearchSettings, Selection,
};

fn main() -> ensopt::Result<()> {
    let m = minimize(
        2,
        |u| (u[0] - 0.3).powi(2) + (u[1] - 0.7).powi(2),
        &SearchSettings::new(25, 0),
    )?;
    let (x, v) = m.best();
    println!("minimum {v:.2e} at {x:.3?}");

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/toy.csv");
    let data = load_csv(&path, &LabelColumn::from("species"))?;
    let plan = make_split(&data, 0.33, 5, 1)?;
    let source = CvModelSource::new(&data, &plan, Algorithm::Knn);
    let space = joint_space(&Algorithm::ALL)?;
    let out = run_bo(&source, &space, &SearchSettings::new(15, 1))?;

    for r in out.history.records() {
        println!("{:>2} {:.3} {}", r.id, r.val_loss, r.config);
    }
    let best = select_best(&out.history)?;
    println!(
        "best model {best}: test error {:.3}",
        evaluate_on_test(Selection::Model(best), &out.history)?
    );
    Ok(())
}
