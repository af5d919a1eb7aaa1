//! Sample fractional Brownian motion at several Hurst indices and compare
//! the empirical variance at the horizon with `T^{2H}`; then condition a
//! path on two observations.
//!
//! cargo run --release --example fbm_paths

use mfchaos::fbm::{conditional_law, fbm_cov, sample_fbm, HurstParam, TimeGrid};

fn main() -> mfchaos::Result<()> {
    let grid = TimeGrid::new(2.0, 128)?;
    let count = 4000;
    println!("{:>6} {:>12} {:>12}", "H", "Var W_T", "T^2H");
    for h in [0.2, 0.5, 0.8] {
        let hurst = HurstParam::new(h)?;
        let paths = sample_fbm(&grid, hurst, 1, count, 42)?;
        let n = grid.steps();
        let var = (0..count).map(|r| paths.at(r, 0, n)[0].powi(2)).sum::<f64>() / count as f64;
        println!("{h:>6} {var:>12.4} {:>12.4}", fbm_cov(2.0, 2.0, hurst)?);
    }

    let hurst = HurstParam::new(0.3)?;
    let (mean, var) = conditional_law(&[(0.5, 0.2), (1.0, -0.1)], hurst, 1.5)?;
    println!("W_1.5 given W_0.5 = 0.2, W_1 = -0.1: mean {mean:.4}, variance {var:.4}");
    Ok(())
}
