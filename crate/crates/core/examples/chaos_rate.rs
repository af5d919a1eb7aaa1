//! Coupling-error rate over N at a fixed kernel. Takes a config file and
//! `key=value` overrides; without arguments runs a reduced version of the
//! smooth-kernel config.
//!
//! cargo run --release --example chaos_rate -- examples/configs/dirac_chaos.toml

use std::path::PathBuf;

use mfchaos::experiments::{run_chaos_campaign, ConfigFile};

fn main() -> mfchaos::Result<()> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let path = match args.first() {
        Some(a) if !a.contains('=') => PathBuf::from(args.remove(0)),
        _ => {
            args.splice(0..0, ["sim.replicas=50".to_string(), "campaign.n_grid=[8, 16, 32, 64]".to_string()]);
            PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/smooth_chaos.toml"))
        }
    };
    let cfg = ConfigFile::load(&path, &args)?.experiment()?;
    let result = run_chaos_campaign(&cfg)?;
    println!("{}", result.fingerprint);
    print!("{}", result.summary_table());
    Ok(())
}
