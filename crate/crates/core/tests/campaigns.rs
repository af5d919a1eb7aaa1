use std::path::Path;

use mfchaos::dynamics::build_mkv_reference;
use mfchaos::experiments::{load_result, persist, run_chaos_campaign, ConfigFile, ExperimentConfig};

fn smooth(overrides: &[&str]) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/smooth_chaos.toml");
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ConfigFile::load(&path, &overrides).unwrap().experiment().unwrap()
}

#[test]
fn smaller_systems_see_a_prefix_of_the_data() {
    let cfg = smooth(&["sim.replicas=3", "sim.grid.steps=32"]);
    let (small, large) = (cfg.cell(8), cfg.cell(32));
    let (n8, n32) = (small.sample_noise(8).unwrap(), large.sample_noise(32).unwrap());
    let (i8, i32) = (small.sample_initials(8).unwrap(), large.sample_initials(32).unwrap());
    for r in 0..3 {
        for p in 0..8 {
            assert_eq!(n8.path(r, p), n32.path(r, p));
            assert_eq!(i8.at(r, p), i32.at(r, p));
        }
    }
    assert_eq!(n32.truncate_particles(8).unwrap(), n8);

    // a different seed gives different data
    let other = ExperimentConfig { seed: cfg.seed + 1, ..cfg.clone() }.cell(8);
    assert_ne!(other.sample_noise(8).unwrap(), n8);

    // the auxiliary system does not touch the coupling streams
    let flow = build_mkv_reference(&small, 1).unwrap();
    assert_eq!(flow.size(), 32);
    assert_eq!(small.sample_noise(8).unwrap(), n8);
}

#[test]
fn bootstrap_agrees_with_the_analytic_stderr() {
    let cfg = smooth(&[
        "sim.grid.steps=32",
        "campaign.n_grid=[4, 8, 16, 32]",
        "campaign.metrics=[{ type = \"coupling\" }, { type = \"observable\", phi = { type = \"tanh\" } }]",
        "campaign.gates={}",
        "campaign.bootstrap_resamples=400",
    ]);
    assert_eq!(cfg.sim.replicas, 200);
    let r = run_chaos_campaign(&cfg).unwrap();
    for cell in &r.cells {
        for (key, m) in &cell.metrics {
            let ratio = m.bootstrap_stderr / m.stderr;
            assert!((1.0 / 1.5..=1.5).contains(&ratio), "N = {} {key}: {ratio}", cell.particles);
        }
    }
}

#[test]
fn reruns_write_identical_artifacts() {
    let cfg = smooth(&[
        "sim.replicas=8",
        "sim.grid.steps=32",
        "campaign.n_grid=[4, 8, 16, 32]",
        "campaign.metrics=[{ type = \"coupling\" }, { type = \"sobolev\", freq_samples = 64 }]",
        "campaign.gates={}",
    ]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_chaos_campaign(&cfg).unwrap();
    let second = run_chaos_campaign(&cfg).unwrap();
    let files = persist(&first, a.path()).unwrap();
    persist(&second, b.path()).unwrap();
    assert_eq!(files.len(), 3 + 2 * 2);
    for f in files {
        let name = f.file_name().unwrap();
        if name == "timings.json" {
            continue;
        }
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
    assert_eq!(load_result(a.path()).unwrap(), first);
}
