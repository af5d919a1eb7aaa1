//! Path norms: kappa-variation and Gagliardo seminorms of a Brownian path,
//! and the control axioms for `w(s, t) = |t - s|`.
//!
//! cargo run --release --example path_norms

use mfchaos::fbm::{sample_fbm, HurstParam, TimeGrid};
use mfchaos::metrics::{control_check, gagliardo_seminorm, kappa_variation, ControlSample};

fn main() -> mfchaos::Result<()> {
    let grid = TimeGrid::new(1.0, 512)?;
    let paths = sample_fbm(&grid, HurstParam::new(0.5)?, 1, 1, 8)?;
    let path = paths.path(0, 0);
    println!("{:>6} {:>12} {:>12} {:>12}", "n", "var k=1.5", "var k=2.5", "W b=0.3");
    for n in [64, 128, 256, 512] {
        let stride = 512 / n;
        let sub: Vec<f64> = path.iter().step_by(stride).copied().collect();
        let dt = 1.0 / n as f64;
        println!(
            "{n:>6} {:>12.4} {:>12.4} {:>12.4}",
            kappa_variation(&sub, 1, 1.5)?,
            kappa_variation(&sub, 1, 2.5)?,
            gagliardo_seminorm(&sub, 1, dt, 0.3, 2.0)?
        );
    }

    let times: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
    let w = ControlSample::from_fn(&times, |s, t| (t - s).abs());
    let report = control_check(&w);
    println!("|t - s| is a control: {}, closure {:?}", report.pass(), report.closure);
    Ok(())
}
