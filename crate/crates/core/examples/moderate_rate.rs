//! Moderate interactions: the mollification width shrinks like
//! `c N^{-1/2}` and the reference flow uses the finest width.
//!
//! cargo run --release --example moderate_rate -- [config.toml] [key=value ...]

use std::path::PathBuf;

use mfchaos::experiments::{run_moderate_campaign, ConfigFile};

fn main() -> mfchaos::Result<()> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let path = match args.first() {
        Some(a) if !a.contains('=') => PathBuf::from(args.remove(0)),
        _ => {
            args.splice(0..0, ["sim.replicas=40".to_string(), "campaign.n_grid=[8, 16, 32, 64]".to_string()]);
            PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/log_moderate.toml"))
        }
    };
    let cfg = ConfigFile::load(&path, &args)?.experiment()?;
    let result = run_moderate_campaign(&cfg)?;
    print!("{}", result.summary_table());
    for cell in &result.cells {
        println!("N = {:>4}: delta = {:.4}, M = {}", cell.particles, cell.delta, cell.mkv_size);
    }
    Ok(())
}
