//! Majority voting, margin losses, greedy selection and round-robin slot
//! replacement on a small prediction matrix.

use ensopt::ensemble::{
    ensemble_loss, greedy_select, margin, observation_vector, round_robin_replace, Ensemble,
    LossKind, PredictionMatrix,
};

fn main() -> ensopt::Result<()> {
    // five models, eight samples, three classes
    let labels = vec![0, 1, 2, 0, 1, 2, 0, 1];
    let rows = vec![
        vec![0, 1, 2, 0, 1, 0, 0, 2],
        vec![0, 1, 1, 0, 2, 2, 0, 1],
        vec![1, 1, 2, 0, 1, 2, 1, 1],
        vec![0, 0, 2, 2, 1, 2, 0, 1],
        vec![2, 1, 0, 0, 1, 2, 0, 0],
    ];
    let preds = PredictionMatrix::new(rows, labels, 3)?;

    for h in 0..preds.n_models() {
        println!(
            "model {h}: error {:.3}",
            ensemble_loss(&[h], &preds, LossKind::ZeroOne)?
        );
    }
    let members = [0, 1, 2];
    for kind in [LossKind::ZeroOne, LossKind::Margin, LossKind::SquaredMargin] {
        println!(
            "{{0,1,2}} {:>14}: {:.4}",
            kind.name(),
            ensemble_loss(&members, &preds, kind)?
        );
    }
    let margins: Vec<f64> = (0..preds.n_samples())
        .map(|i| margin(&members, &preds, i))
        .collect::<Result<_, _>>()?;
    println!("margins {margins:.2?}");

    let greedy = greedy_select(&preds, 5, 1, LossKind::ZeroOne)?;
    println!("\ngreedy ensemble {:?}", greedy.members());

    // slot 1 is vacated and refilled with the best addition to the others
    let e = Ensemble::from_members(vec![0, 4, 2]);
    let obs = observation_vector(
        &Ensemble {
            slots: vec![Some(0), None, Some(2)],
        },
        &preds,
        LossKind::SquaredMargin,
    )?;
    println!("observation vector with slot 1 empty {obs:.4?}");
    let e = round_robin_replace(&e, 1, &preds, LossKind::SquaredMargin)?;
    println!("after replacing slot 1 {:?}", e.slots);
    Ok(())
}
