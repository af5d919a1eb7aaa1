use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfchaos::experiments::{config_hash, ConfigFile};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn mfchaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfchaos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ZERO_KERNEL: &str = r#"
seed = 77

[sim]
particles = 5
dim = 2
hurst = 0.35
replicas = 2
grid = { horizon = 1.0, steps = 16 }
kernel = { family = { type = "zero" } }
init = { type = "uniform_box", lo = [-1.0, 0.0], hi = [1.0, 2.0] }
"#;

#[test]
fn coulomb_kernel_report() {
    let cfg = config("coulomb_info.toml");
    let o = mfchaos(&["kernel-info", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("H < 0.25"), "{text}");
    assert!(text.contains("admissible at H = 0.2"), "{text}");
}

#[test]
fn zero_kernel_trajectories_are_initial_data_plus_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    std::fs::write(&cfg, ZERO_KERNEL).unwrap();
    let out = dir.path().join("run");
    let o = mfchaos(&["simulate", "--trajectories", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let sim = ConfigFile::parse(ZERO_KERNEL, &[]).unwrap().sim().unwrap();
    let noise = sim.sample_noise(sim.particles).unwrap();
    let init = sim.sample_initials(sim.particles).unwrap();
    for name in ["ips.csv", "copies.csv"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("replica,particle,k,t,x_1,x_2"));
        let mut count = 0;
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let (r, p, k): (usize, usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
            for c in 0..2 {
                let x: f64 = f[4 + c].parse().unwrap();
                let want = init.at(r, p)[c] + noise.at(r, p, k)[c];
                assert_eq!(x.to_bits(), want.to_bits(), "{name} line {line}");
            }
            count += 1;
        }
        assert_eq!(count, 2 * 5 * 17);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(summary["coupling"]["value"], 0.0);
}

#[test]
fn malformed_config_names_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, ZERO_KERNEL.replace("replicas = 2", "replicas = 2\nreplica_count = 3")).unwrap();
    let o = mfchaos(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("sim.replica_count") && err.contains("line 9"), "{err}");

    let o = mfchaos(&["simulate", "--config", cfg.to_str().unwrap(), "--set", "sim.replicas=x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_config_is_an_error() {
    let o = mfchaos(&["chaos-rate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/config.toml"));
}

#[test]
fn version_carries_seed_and_config_hash() {
    let cfg = config("smooth_chaos.toml");
    let o = mfchaos(&["--version", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let exp = ConfigFile::load(&cfg, &[]).unwrap().experiment().unwrap();
    let line = stdout(&o);
    assert!(line.starts_with(concat!("mfchaos ", env!("CARGO_PKG_VERSION"))), "{line}");
    assert!(line.contains("seed 20240611"), "{line}");
    assert!(line.trim_end().ends_with(&config_hash(&exp)), "{line}");

    let o = mfchaos(&["--version", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert!(stdout(&o).contains("seed 5 "));
}

#[test]
fn failed_gate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("smooth_chaos.toml");
    let o = mfchaos(&[
        "chaos-rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "-q",
        "--set",
        "sim.replicas=4",
        "--set",
        "sim.grid.steps=16",
        "--set",
        "campaign.n_grid=[4, 8, 16, 32]",
        "--set",
        "campaign.metrics=[{ type = \"coupling\" }]",
        "--set",
        "campaign.gates={ coupling = { slope = [2.0, 3.0] } }",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"), "{}", stdout(&o));
    for f in ["config.json", "summary.json", "timings.json", "rate_coupling.csv", "loglog_coupling.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn fbm_check_without_config_uses_defaults() {
    let o = mfchaos(&["fbm-check", "--set", "noise_check.replicas=2000", "--set", "noise_check.hursts=[0.5]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("replicas = 2000"));
}
