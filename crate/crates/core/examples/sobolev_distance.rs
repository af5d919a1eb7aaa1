//! Negative-Sobolev distance between empirical measures: two samples of the
//! same law get closer as the sample grows, a shifted law stays away.
//!
//! cargo run --release --example sobolev_distance

use mfchaos::metrics::sobolev_distance;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> mfchaos::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut draw = |n: usize, shift: f64| -> Vec<f64> {
        (0..2 * n).map(|_| StandardNormal.sample(&mut rng)).map(|z: f64| z + shift).collect()
    };
    println!("{:>6} {:>12} {:>12}", "n", "same law", "shifted");
    for n in [64, 256, 1024, 4096] {
        let (a, b, c) = (draw(n, 0.0), draw(n, 0.0), draw(n, 0.5));
        let same = sobolev_distance(&a, &b, 2, 2.1, 2048, 11)?;
        let shifted = sobolev_distance(&a, &c, 2, 2.1, 2048, 11)?;
        println!("{n:>6} {same:>12.5} {shifted:>12.5}");
    }
    Ok(())
}
