mod common;

use common::{greedy_oracle, loss, random_pool, ScriptedSource, ThresholdSource};
use ensopt::ensemble::{eval_with_candidate, Ensemble, LossKind, PredictionMatrix};
use ensopt::hyperspace::Config;
use ensopt::optimizer::{
    evaluate_on_test, minimize, post_hoc, run_bo, run_eo, select_best, Evaluation, History,
    SearchSettings, Selection,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quick(budget: usize, seed: u64) -> SearchSettings {
    SearchSettings {
        candidates: 200,
        refinements: 5,
        ..SearchSettings::new(budget, seed)
    }
}

#[test]
fn budget_of_one() {
    let src = ThresholdSource::new(40, 20, 0.37);
    let out = run_bo(&src, &ThresholdSource::space(), &quick(1, 0)).unwrap();
    assert_eq!(out.history.len(), 1);
    assert!(out.iterations[0].random);
    assert!(out.observations[0].is_empty());
    let eo = run_eo(
        &src,
        &ThresholdSource::space(),
        &quick(1, 0),
        3,
        LossKind::Margin,
    )
    .unwrap();
    assert_eq!(eo.ensemble.unwrap().occupied(), 1);
}

#[test]
fn runs_are_seeded() {
    let src = || ThresholdSource::new(40, 20, 0.37);
    let space = ThresholdSource::space();
    let a = run_eo(&src(), &space, &quick(9, 3), 2, LossKind::SquaredMargin).unwrap();
    let b = run_eo(&src(), &space, &quick(9, 3), 2, LossKind::SquaredMargin).unwrap();
    let c = run_eo(&src(), &space, &quick(9, 4), 2, LossKind::SquaredMargin).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.history, b.history);
    assert_ne!(a.iterations[0].point, c.iterations[0].point);
}

#[test]
fn minimize_quadratic() {
    let m = minimize(1, |u| (u[0] - 0.3).powi(2), &SearchSettings::new(30, 0)).unwrap();
    let (_, v) = m.best();
    assert!(v <= 1e-3, "best value {v}");
}

#[test]
fn bo_finds_the_threshold() {
    let src = ThresholdSource::new(100, 50, 0.37);
    let out = run_bo(&src, &ThresholdSource::space(), &quick(20, 1)).unwrap();
    let best = select_best(&out.history).unwrap();
    assert!(out.history.records()[best].val_loss <= 0.03);
    assert!(out.iterations[5..].iter().all(|r| !r.random));
}

#[test]
fn single_slot_zero_one_equals_bo() {
    let space = ThresholdSource::space();
    let bo = run_bo(&ThresholdSource::new(40, 20, 0.6), &space, &quick(12, 2)).unwrap();
    let eo = run_eo(
        &ThresholdSource::new(40, 20, 0.6),
        &space,
        &quick(12, 2),
        1,
        LossKind::ZeroOne,
    )
    .unwrap();
    assert_eq!(bo.observations, eo.observations);
    let pts = |o: &ensopt::optimizer::SearchOutcome| {
        o.iterations
            .iter()
            .map(|r| r.point.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(pts(&bo), pts(&eo));
}

#[test]
fn occupancy_grows_to_ensemble_size() {
    let src = ThresholdSource::new(30, 10, 0.5);
    let m = 4;
    let out = run_eo(
        &src,
        &ThresholdSource::space(),
        &quick(10, 0),
        m,
        LossKind::Margin,
    )
    .unwrap();
    for r in &out.iterations {
        let slots = r.ensemble.as_ref().unwrap();
        assert_eq!(slots.len(), m);
        assert_eq!(slots.iter().flatten().count(), (r.iteration + 1).min(m));
        assert_eq!(r.slot, Some(r.iteration % m));
    }
}

#[test]
fn ensemble_larger_than_budget() {
    let src = ThresholdSource::new(30, 10, 0.5);
    let out = run_eo(
        &src,
        &ThresholdSource::space(),
        &quick(3, 0),
        8,
        LossKind::Margin,
    )
    .unwrap();
    let e = out.ensemble.unwrap();
    assert_eq!(e.size(), 8);
    assert_eq!(e.occupied(), 3);
}

#[test]
fn hand_traced_replay() {
    // labels all 0; wrong counts 2, 2, 1, 4; margin loss = wrong / (size * 4)
    let rows = vec![
        vec![0, 0, 1, 1],
        vec![1, 1, 0, 0],
        vec![0, 0, 0, 1],
        vec![1, 1, 1, 1],
    ];
    let src = ScriptedSource::new(rows, vec![0; 4], 2);
    let settings = SearchSettings {
        init: 10,
        ..quick(4, 0)
    };
    let out = run_eo(
        &src,
        &ThresholdSource::space(),
        &settings,
        2,
        LossKind::Margin,
    )
    .unwrap();
    let slots: Vec<Vec<Option<usize>>> = out
        .iterations
        .iter()
        .map(|r| r.ensemble.clone().unwrap())
        .collect();
    assert_eq!(slots[0], vec![Some(0), None]);
    // {0,0} and {0,1} both have 4 wrong votes; the tie goes to id 0
    assert_eq!(slots[1], vec![Some(0), Some(0)]);
    assert_eq!(slots[2], vec![Some(2), Some(0)]);
    assert_eq!(slots[3], vec![Some(2), Some(2)]);
    let expect: Vec<Vec<f64>> = vec![vec![], vec![0.5], vec![0.5, 0.5], vec![0.375, 0.375, 0.25]];
    assert_eq!(out.observations, expect);
}

#[test]
fn observations_match_offline_recomputation() {
    let src = ThresholdSource::new(30, 10, 0.45);
    let m = 3;
    let loss = LossKind::SquaredMargin;
    let out = run_eo(&src, &ThresholdSource::space(), &quick(10, 5), m, loss).unwrap();
    let preds = out.history.val_predictions();
    for (i, obs) in out.observations.iter().enumerate() {
        let prefix =
            PredictionMatrix::new(preds.rows()[..i].to_vec(), preds.labels().to_vec(), 2).unwrap();
        let mut before = if i == 0 {
            Ensemble::with_size(m)
        } else {
            Ensemble {
                slots: out.iterations[i - 1].ensemble.clone().unwrap(),
            }
        };
        before.slots[i % m] = None;
        let offline: Vec<f64> = (0..i)
            .map(|h| eval_with_candidate(&before, h, &prefix, loss).unwrap())
            .collect();
        assert_eq!(obs, &offline);
        assert_eq!(
            out.iterations[i].observation_digest,
            ensopt::optimizer::observation_digest(&offline)
        );
    }
}

#[test]
fn learner_failure_becomes_constant_model() {
    let mut src = ThresholdSource::new(20, 10, 0.5);
    src.fail_on = vec![1];
    let out = run_bo(&src, &ThresholdSource::space(), &quick(3, 0)).unwrap();
    let rec = &out.history.records()[1];
    assert!(rec.failure.is_some());
    assert!(out.iterations[1].learner_failure.is_some());
    assert!(out.history.val_predictions().rows()[1]
        .iter()
        .all(|&l| l == 0));
    assert_eq!(out.history.len(), 3);
}

#[test]
fn surrogate_failure_falls_back_to_random() {
    let src = ThresholdSource::new(20, 10, 0.5);
    let mut settings = quick(4, 0);
    settings.init = 2;
    settings.priors.lower = 10.0;
    settings.priors.upper = 1.0;
    let out = run_bo(&src, &ThresholdSource::space(), &settings).unwrap();
    assert!(out.iterations[2].surrogate_failure.is_some());
    assert!(out.iterations[2].random);
    assert_eq!(out.history.len(), 4);
}

fn pooled_history(rows: &[Vec<u32>], labels: &[u32], c: usize) -> History {
    let mut h = History::new(labels.to_vec(), labels.to_vec(), c).unwrap();
    for r in rows {
        let e = Evaluation {
            val: r.clone(),
            test: r.clone(),
        };
        h.push(Config::new(), vec![0.0], e, None).unwrap();
    }
    h
}

#[test]
fn selections_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let (rows, labels) = random_pool(&mut rng, 20, 25, 3);
        let h = pooled_history(&rows, &labels, 3);
        let errs: Vec<f64> = (0..20)
            .map(|i| loss(&rows, &labels, 3, &[i], LossKind::ZeroOne))
            .collect();
        let mut scan = 0;
        for i in 1..20 {
            if errs[i] < errs[scan] {
                scan = i;
            }
        }
        assert_eq!(select_best(&h).unwrap(), scan);
        let e = post_hoc(&h, 7, 3).unwrap();
        assert_eq!(
            e.members(),
            greedy_oracle(&rows, &labels, 3, 7, 3, LossKind::ZeroOne)
        );
        let test = evaluate_on_test(Selection::Ensemble(&e), &h).unwrap();
        assert_eq!(
            test,
            loss(&rows, &labels, 3, &e.members(), LossKind::ZeroOne)
        );
    }
}

#[test]
fn invalid_settings_rejected() {
    let src = ThresholdSource::new(10, 5, 0.5);
    let space = ThresholdSource::space();
    assert!(run_bo(&src, &space, &quick(0, 0)).is_err());
    assert!(run_eo(&src, &space, &quick(3, 0), 0, LossKind::Margin).is_err());
    let mut s = quick(3, 0);
    s.init = 0;
    assert!(run_bo(&src, &space, &s).is_err());
}
