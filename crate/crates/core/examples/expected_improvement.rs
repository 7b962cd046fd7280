//! Expected Improvement and the candidate search behind `next_point`.

use ensopt::acquisition::{expected_improvement, next_point, AcquisitionContext};
use ensopt::surrogate::{GpHyperparams, GpState, ObservationSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ensopt::Result<()> {
    println!(
        "EI(mean = best, sd = 1) = {:.6}",
        expected_improvement(0.0, 1.0, 0.0)?
    );
    println!(
        "EI(mean = best - 1, sd = 0) = {}",
        expected_improvement(-1.0, 0.0, 0.0)?
    );

    let obs = ObservationSet::new(vec![vec![0.1], vec![0.5], vec![0.9]], &[0.9, 0.4, 0.1])?;
    let state = GpState::fit(&obs, &GpHyperparams::new(1.0, vec![0.2], 1e-6))?;
    let ctx = AcquisitionContext::new(vec![state], 0.1)?;
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        println!("  EI({x:.1}) = {:.4}", ctx.score(&[x])?);
    }
    let x = next_point(&ctx, &mut ChaCha8Rng::seed_from_u64(0))?;
    println!("next point {:.4}", x[0]);
    Ok(())
}
