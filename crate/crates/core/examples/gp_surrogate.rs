//! Fitting the Matérn-5/2 GP under slice-sampled hyperparameters.

use ensopt::surrogate::{slice_sample_hypers, GpState, HyperPriors, ObservationSet, SliceSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ensopt::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = |x: f64| (6.0 * x).sin() + 0.5 * x;
    let xs: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random::<f64>()]).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| f(x[0]) + 0.05 * (rng.random::<f64>() - 0.5))
        .collect();
    let obs = ObservationSet::new(xs, &ys)?;

    let samples = slice_sample_hypers(
        &obs,
        &HyperPriors::default(),
        &SliceSchedule::default(),
        10,
        &mut rng,
    )?;
    for h in &samples[..3] {
        println!(
            "amplitude {:.3} lengthscale {:.3} noise {:.2e}",
            h.amplitude, h.lengthscales[0], h.noise
        );
    }
    let states: Vec<GpState> = samples
        .iter()
        .map(|h| GpState::fit(&obs, h))
        .collect::<Result<_, _>>()?;

    println!("\n    x   truth    mean      sd");
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        // mixture over the samples: average the means, combine variances
        let preds: Vec<(f64, f64)> = states
            .iter()
            .map(|s| s.predict(&[x]))
            .collect::<Result<_, _>>()?;
        let mean = preds.iter().map(|p| p.0).sum::<f64>() / preds.len() as f64;
        let second = preds.iter().map(|p| p.1 + p.0 * p.0).sum::<f64>() / preds.len() as f64;
        println!(
            "{x:5.2} {:7.3} {mean:7.3} {:7.3}",
            f(x),
            (second - mean * mean).max(0.0).sqrt()
        );
    }
    Ok(())
}
