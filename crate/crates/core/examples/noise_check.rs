//! Monte Carlo check of the fBm sampler: increment second moments at all
//! dyadic pairs, the self-similarity slope and the integral identity.
//!
//! cargo run --release --example noise_check

use mfchaos::experiments::NoiseCheckConfig;

fn main() -> mfchaos::Result<()> {
    let report = NoiseCheckConfig::default().run(1)?;
    print!("{report}");
    println!("{}", if report.passed() { "all checks pass" } else { "some checks FAILED" });
    Ok(())
}
