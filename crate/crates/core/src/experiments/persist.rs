use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CampaignResult, CellRecord, ExperimentConfig, GateOutcome, MetricFit};
use crate::error::{Error, Result};
use crate::metrics::{rows_to_csv, rows_to_loglog_csv, RateTable};

/// What produced a result: crate version, target, seed and config hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub name: String,
    pub version: String,
    pub target: String,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

impl Fingerprint {
    /// Build environment only.
    pub fn environment() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            target: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
            seed: None,
            config_hash: None,
        }
    }

    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        Self { seed: Some(cfg.seed), config_hash: Some(config_hash(cfg)), ..Self::environment() }
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} ({})", self.name, self.version, self.target)?;
        if let Some(s) = self.seed {
            write!(f, " seed {s}")?;
        }
        if let Some(h) = &self.config_hash {
            write!(f, " config {h}")?;
        }
        Ok(())
    }
}

/// Canonical JSON: keys sorted, shortest round-trip floats.
fn canonical_json(cfg: &ExperimentConfig) -> String {
    let value = serde_json::to_value(cfg).expect("config serializes");
    serde_json::to_string(&value).expect("value serializes")
}

/// SHA-256 of the canonical JSON of every semantic field (the output
/// directory is excluded).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let semantic = ExperimentConfig { output_dir: None, ..cfg.clone() };
    hex::encode(Sha256::digest(canonical_json(&semantic).as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct Summary {
    fingerprint: Fingerprint,
    passed: bool,
    cells: Vec<CellRecord>,
    fits: BTreeMap<String, MetricFit>,
    gates: Vec<GateOutcome>,
}

#[derive(Serialize, Deserialize)]
struct Timings {
    wall_seconds: Vec<f64>,
    total_seconds: f64,
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn read(path: PathBuf) -> Result<String> {
    fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}

/// Write `config.json`, `summary.json`, `timings.json` and, per metric,
/// `rate_<metric>.csv` and `loglog_<metric>.csv`. Everything except the
/// timings is a pure function of the config. Returns the written paths.
pub fn persist(result: &CampaignResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    written.push(write(dir.join("config.json"), &pretty(&result.config))?);
    let summary = Summary {
        fingerprint: result.fingerprint.clone(),
        passed: result.passed(),
        cells: result.cells.clone(),
        fits: result.fits.clone(),
        gates: result.gates.clone(),
    };
    written.push(write(dir.join("summary.json"), &pretty(&summary))?);
    let timings = Timings { wall_seconds: result.wall_seconds.clone(), total_seconds: result.wall_seconds.iter().sum() };
    written.push(write(dir.join("timings.json"), &pretty(&timings))?);
    for (key, fit) in &result.fits {
        written.push(write(dir.join(format!("rate_{key}.csv")), &rows_to_csv(&fit.rows))?);
        written.push(write(dir.join(format!("loglog_{key}.csv")), &rows_to_loglog_csv(&fit.rows))?);
    }
    Ok(written)
}

/// Read back what [`persist`] wrote. Rate rows come from the CSV files and
/// must agree with the fits in `summary.json`.
pub fn load_result(dir: &Path) -> Result<CampaignResult> {
    let path = dir.join("config.json");
    let mut config: ExperimentConfig = serde_json::from_str(&read(path.clone())?).map_err(|e| json_error(&path, e))?;
    // not serialized; always the top-level seed
    config.sim.seed = config.seed;
    let path = dir.join("summary.json");
    let summary: Summary = serde_json::from_str(&read(path.clone())?).map_err(|e| json_error(&path, e))?;
    let path = dir.join("timings.json");
    let timings: Timings = serde_json::from_str(&read(path.clone())?).map_err(|e| json_error(&path, e))?;
    for (key, fit) in &summary.fits {
        let rows = RateTable::rows_from_csv(&read(dir.join(format!("rate_{key}.csv")))?)?;
        if rows != fit.rows {
            return Err(Error::Input(format!("rate_{key}.csv disagrees with summary.json")));
        }
    }
    Ok(CampaignResult {
        config,
        fingerprint: summary.fingerprint,
        cells: summary.cells,
        fits: summary.fits,
        gates: summary.gates,
        wall_seconds: timings.wall_seconds,
    })
}
