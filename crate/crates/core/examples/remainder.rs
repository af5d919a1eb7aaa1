//! Remainder diagnostic: increments of `X - X_0 - W` scaled by the
//! admissible exponent, across a family of mollification widths.
//!
//! cargo run --release --example remainder

use mfchaos::experiments::{remainder_diagnostic, ConfigFile, RemainderConfig};

fn main() -> mfchaos::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/remainder.toml");
    let sim = ConfigFile::load(path.as_ref(), &[])?.sim()?;
    let rc = RemainderConfig { deltas: vec![0.2, 0.1, 0.05, 0.025], q: 2.0, levels: 5 };
    print!("{}", remainder_diagnostic(&sim, &rc)?);
    Ok(())
}
