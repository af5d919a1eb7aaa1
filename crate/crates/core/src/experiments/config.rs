use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CampaignSpec, ExperimentConfig, MetricsJobConfig, NoiseCheckConfig};
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::fbm::HurstParam;
use crate::kernels::KernelSpec;

/// Inputs of `kernel-info`; unset fields come from `[sim]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelInfoConfig {
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub hurst: Option<HurstParam>,
    #[serde(default)]
    pub q: Option<f64>,
}

/// One TOML file holding the sections every command reads.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub campaign: Option<CampaignSpec>,
    #[serde(default)]
    pub noise_check: Option<NoiseCheckConfig>,
    #[serde(default)]
    pub kernel_info: Option<KernelInfoConfig>,
    #[serde(default)]
    pub metrics_job: Option<MetricsJobConfig>,
}

fn missing(section: &str) -> Error {
    Error::Config { key: section.into(), line: None, message: format!("section [{section}] is required") }
}

/// 1-based line of byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// First line assigning `key` (the last path segment) or opening a table
/// of that name.
fn find_key_line(text: &str, path: &str) -> Option<usize> {
    let last = path.rsplit('.').next()?;
    if last.is_empty() || last == "?" {
        return None;
    }
    text.lines().position(|l| {
        let l = l.trim_start();
        let header = l.trim_start_matches('[').trim_end().trim_end_matches(']');
        (l.starts_with('[') && (header == path || header.ends_with(&format!(".{last}"))))
            || l.strip_prefix(last).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn deser_error(err: serde_path_to_error::Error<toml::de::Error>, text: &str) -> Error {
    let mut key = err.path().to_string();
    let inner = err.into_inner();
    let message = inner.message().trim().to_string();
    if let Some(name) = message.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
        if !(key == name || key.ends_with(&format!(".{name}"))) {
            key = if key == "." || key.is_empty() { name.into() } else { format!("{key}.{name}") };
        }
    }
    let line = inner
        .span()
        .filter(|s| s.start > 0 || !text.is_empty())
        .map(|s| line_of(text, s.start))
        .or_else(|| find_key_line(text, &key));
    Error::Config { key, line, message }
}

/// Set a dotted `key=value` on a parsed document. The value is read as a
/// TOML value when possible and as a bare string otherwise; intermediate
/// tables are created as needed.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let bad = |message: String| Error::Config { key: assignment.into(), line: None, message };
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| bad("override must look like key=value".into()))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(bad("empty key segment".into()));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.into()));
    let segments: Vec<&str> = key.split('.').collect();
    let mut table = doc;
    for seg in &segments[..segments.len() - 1] {
        let entry = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config { key: key.into(), line: None, message: format!("`{seg}` is not a table") })?;
    }
    table.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

impl ConfigFile {
    /// Parse TOML text, then apply `overrides` left to right. Unknown keys
    /// and ill-typed values are config errors naming the key (and the line,
    /// when it can be located in `text`).
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            let de = toml::Deserializer::new(text);
            return serde_path_to_error::deserialize(de).map_err(|e| deser_error(e, text));
        }
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config {
            key: "<syntax>".into(),
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().trim().into(),
        })?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| deser_error(e, text))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides)
    }

    /// `[sim]` with the top-level seed; `mkv_size` defaults to `4 N`.
    pub fn sim(&self) -> Result<SimConfig> {
        let mut sim = self.sim.clone().ok_or_else(|| missing("sim"))?;
        sim.seed = self.seed;
        if sim.mkv_size == 0 {
            sim.mkv_size = 4 * sim.particles;
        }
        Ok(sim)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut sim = self.sim.clone().ok_or_else(|| missing("sim"))?;
        sim.seed = self.seed;
        Ok(ExperimentConfig {
            seed: self.seed,
            sim,
            campaign: self.campaign.clone().ok_or_else(|| missing("campaign"))?,
            output_dir: self.output_dir.clone(),
        })
    }

    /// Kernel, Hurst index and `q` for the admissibility report.
    pub fn kernel_info(&self) -> Result<(KernelSpec, HurstParam, f64)> {
        let info = self.kernel_info.clone().unwrap_or_default();
        let kernel = match (info.kernel, &self.sim) {
            (Some(k), _) => k,
            (None, Some(sim)) => sim.kernel_spec(),
            (None, None) => return Err(missing("kernel_info")),
        };
        let hurst = match (info.hurst, &self.sim) {
            (Some(h), _) => h,
            (None, Some(sim)) => sim.hurst,
            (None, None) => {
                return Err(Error::Config {
                    key: "kernel_info.hurst".into(),
                    line: None,
                    message: "no Hurst index given".into(),
                })
            }
        };
        if kernel.dim == 0 {
            return Err(Error::Config {
                key: "kernel_info.kernel.dim".into(),
                line: None,
                message: "kernel dimension is required without [sim]".into(),
            });
        }
        Ok((kernel, hurst, info.q.unwrap_or(2.0)))
    }
}
