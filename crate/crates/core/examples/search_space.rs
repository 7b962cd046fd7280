//! Declaring a mixed search space and moving between raw values and the
//! unit cube.

use ensopt::hyperspace::{ParamSpec, SearchSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ensopt::Result<()> {
    let space = SearchSpace::new(vec![
        ParamSpec::log_continuous("C", 1e-5, 1e5),
        ParamSpec::integer("n_neighbors", 1, 30),
        ParamSpec::categorical("kernel", ["linear", "rbf", "poly"]),
        ParamSpec::continuous("dropout", 0.0, 0.5),
    ])?;
    println!("dimension {} digest {}", space.dim(), &space.digest()[..12]);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let u = space.sample(&mut rng);
        let cfg = space.decode(&u)?;
        // integers and categories come back at their bin centres
        let back = space.encode(&cfg)?;
        println!("{cfg}\n  u    = {u:.3?}\n  back = {back:.3?}");
    }

    println!("\n{}", space.to_json());
    Ok(())
}
