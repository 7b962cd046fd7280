//! Ensemble optimization against classical BO and post-hoc ensembles on
//! a synthetic two-moons problem.

use ensopt::data::{make_moons, make_split};
use ensopt::ensemble::LossKind;
use ensopt::learners::{joint_space, Algorithm};
use ensopt::optimizer::{
    evaluate_on_test, post_hoc, run_bo, run_eo, select_best, CvModelSource, SearchSettings,
    Selection,
};

fn main() -> ensopt::Result<()> {
    let data = make_moons(400, 0.3, 5)?;
    let plan = make_split(&data, 0.33, 5, 5)?;
    let source = CvModelSource::new(&data, &plan, Algorithm::Knn);
    let space = joint_space(&Algorithm::ALL)?;
    let settings = SearchSettings::new(30, 5);
    let m = 5;

    let bo = run_bo(&source, &space, &settings)?;
    let eo = run_eo(&source, &space, &settings, m, LossKind::SquaredMargin)?;
    for r in eo.iterations.iter().step_by(5) {
        println!(
            "iteration {:>2} slot {:?} ensemble {:?}",
            r.iteration,
            r.slot.unwrap(),
            r.ensemble.as_ref().unwrap()
        );
    }

    let final_eo = eo.ensemble.as_ref().expect("EO keeps its ensemble");
    let best = select_best(&bo.history)?;
    let bo_post = post_hoc(&bo.history, m, 3)?;
    let eo_post = post_hoc(&eo.history, m, 3)?;
    println!("\ntest error");
    println!(
        "  BO-best {:.4}",
        evaluate_on_test(Selection::Model(best), &bo.history)?
    );
    println!(
        "  BO-post {:.4}",
        evaluate_on_test(Selection::Ensemble(&bo_post), &bo.history)?
    );
    println!(
        "  EO      {:.4}",
        evaluate_on_test(Selection::Ensemble(final_eo), &eo.history)?
    );
    println!(
        "  EO-post {:.4}",
        evaluate_on_test(Selection::Ensemble(&eo_post), &eo.history)?
    );
    Ok(())
}
