//! Ranks, Friedman, Nemenyi and pairwise Wilcoxon tests over a results
//! table of several methods on several datasets.

use ensopt::cli::{compare_report, CompareOptions};
use ensopt::stats::{ResultRow, ResultTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ensopt::Result<()> {
    // method "c" is a little better than "b", which is a little better than "a"
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = Vec::new();
    for d in 0..12 {
        let base: f64 = rng.random_range(0.05..0.3);
        for (m, shift) in [("a", 0.02), ("b", 0.01), ("c", 0.0)] {
            for r in 0..3 {
                rows.push(ResultRow {
                    method: m.into(),
                    dataset: format!("set{d:02}"),
                    repetition: r,
                    error: base + shift + rng.random_range(-0.01..0.01),
                });
            }
        }
    }
    let table = ResultTable::from_rows(&rows)?;
    print!("{}", compare_report(&table, CompareOptions::default())?);
    Ok(())
}
