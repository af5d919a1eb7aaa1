//! Configured campaigns: chaos and moderate-interaction rates over N,
//! noise self-checks, pathwise diagnostics, and their persisted artifacts.

mod config;
mod noise;
mod pathwise;
mod persist;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{build_mkv_reference, CouplingRun, InitialData, MeasureFlow, SimConfig};
use crate::error::{Error, Result};
use crate::fbm::PathEnsemble;
use crate::kernels::kernel_report;
use crate::metrics::{
    coupling_samples, fit_rate, observable_samples, sobolev_sup_error, FrequencySet, RateRow, RateTable,
    ReplicaSample, TestFunction,
};
use crate::rng::derive_seed;

pub use config::{apply_override, ConfigFile, KernelInfoConfig};
pub use noise::{run_noise_selfcheck, HurstCheck, NoiseCheckConfig, NoiseReport};
pub use pathwise::{
    remainder_diagnostic, run_path_metrics, MetricsJobConfig, PathMetricsReport, RefinementRow, RemainderConfig,
    RemainderReport, RemainderRow, Trend,
};
pub use persist::{config_hash, load_result, persist, Fingerprint};

/// Mollification width as a function of N.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaSchedule {
    /// The width in `sim.kernel.delta` for every N
    #[default]
    Fixed,
    /// `c * N^exponent`
    Power {
        c: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
}

fn default_exponent() -> f64 {
    -0.5
}

impl DeltaSchedule {
    pub fn delta(&self, base: f64, n: usize) -> f64 {
        match *self {
            DeltaSchedule::Fixed => base,
            // c / sqrt(N) keeps perfect squares exact
            DeltaSchedule::Power { c, exponent } if exponent == -0.5 => c / (n as f64).sqrt(),
            DeltaSchedule::Power { c, exponent } => c * (n as f64).powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Coupling,
    Observable {
        phi: TestFunction,
    },
    /// Sup over grid times of the negative Sobolev distance; `lambda`
    /// defaults to `d/2 + 1.1`
    Sobolev {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default = "default_freqs")]
        freq_samples: usize,
        #[serde(default = "default_stride")]
        time_stride: usize,
    },
}

fn default_freqs() -> usize {
    4096
}

fn default_stride() -> usize {
    1
}

impl MetricSpec {
    /// File and table key.
    pub fn key(&self) -> String {
        match self {
            MetricSpec::Coupling => "coupling".into(),
            MetricSpec::Observable { phi } => format!("observable_{}", phi.name()),
            MetricSpec::Sobolev { .. } => "sobolev".into(),
        }
    }
}

/// Pass/fail thresholds on one metric's fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    /// `[lo, hi]` for the fitted slope
    #[serde(default)]
    pub slope: Option<[f64; 2]>,
    #[serde(default)]
    pub max_slope: Option<f64>,
    #[serde(default)]
    pub min_r_squared: Option<f64>,
    /// Errors nonincreasing in N up to one standard error
    #[serde(default)]
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub n_grid: Vec<usize>,
    /// Floor on the reference size: `M = max(4 N, mkv_min)`
    #[serde(default = "default_mkv_min")]
    pub mkv_min: usize,
    #[serde(default)]
    pub delta_schedule: DeltaSchedule,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub gates: BTreeMap<String, Gate>,
    /// Run kernels outside the admissible regime, with a warning
    #[serde(default)]
    pub allow_inadmissible: bool,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

fn default_mkv_min() -> usize {
    1024
}

fn default_metrics() -> Vec<MetricSpec> {
    vec![MetricSpec::Coupling]
}

fn default_resamples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stream of the campaign derives from it
    pub seed: u64,
    /// Base simulation; `particles`, `mkv_size` and the width are set per cell
    pub sim: SimConfig,
    pub campaign: CampaignSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), line: None, message: message.into() }
}

impl ExperimentConfig {
    pub fn mkv_size(&self, n: usize) -> usize {
        (4 * n).max(self.campaign.mkv_min)
    }

    /// Simulation of the cell with `n` particles.
    pub fn cell(&self, n: usize) -> SimConfig {
        let mut sim = self.sim.clone();
        sim.particles = n;
        sim.mkv_size = self.mkv_size(n);
        sim.seed = self.seed;
        sim.kernel.delta = self.campaign.delta_schedule.delta(self.sim.kernel.delta, n);
        sim
    }

    pub fn validate(&self) -> Result<()> {
        let grid = &self.campaign.n_grid;
        if grid.len() < 4 {
            return Err(config_error("campaign.n_grid", format!("need at least 4 values, got {}", grid.len())));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("campaign.n_grid", "values must be strictly increasing"));
        }
        if self.sim.replicas < 2 {
            return Err(config_error("sim.replicas", "a campaign needs at least 2 replicas"));
        }
        if self.campaign.metrics.is_empty() {
            return Err(config_error("campaign.metrics", "no metrics requested"));
        }
        if let DeltaSchedule::Power { c, exponent } = self.campaign.delta_schedule {
            if !(c > 0.0 && exponent.is_finite()) {
                return Err(config_error("campaign.delta_schedule", format!("need c > 0, got {c}")));
            }
        }
        let keys: Vec<String> = self.campaign.metrics.iter().map(MetricSpec::key).collect();
        for (i, k) in keys.iter().enumerate() {
            if keys[..i].contains(k) {
                return Err(config_error("campaign.metrics", format!("metric `{k}` requested twice")));
            }
        }
        for name in self.campaign.gates.keys() {
            if !keys.contains(name) {
                return Err(config_error(
                    &format!("campaign.gates.{name}"),
                    format!("no such metric; requested: {}", keys.join(", ")),
                ));
            }
        }
        for m in &self.campaign.metrics {
            if let MetricSpec::Sobolev { lambda, freq_samples, time_stride } = m {
                let d = self.sim.dim as f64;
                if lambda.is_some_and(|l| !(2.0 * l > d)) {
                    return Err(config_error("campaign.metrics.lambda", "need 2 lambda > d"));
                }
                if *freq_samples == 0 || *time_stride == 0 {
                    return Err(config_error("campaign.metrics", "freq_samples and time_stride must be positive"));
                }
            }
        }
        for &n in grid {
            self.cell(n).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetric {
    pub error: f64,
    pub stderr: f64,
    pub bootstrap_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Diverged { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub particles: usize,
    pub mkv_size: usize,
    pub delta: f64,
    #[serde(flatten)]
    pub status: CellStatus,
    pub metrics: BTreeMap<String, CellMetric>,
}

/// Surviving rows of one metric and their fit, if one was possible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFit {
    pub rows: Vec<RateRow>,
    /// `fitted`, `degenerate: zero error`, or `refused: <reason>`
    pub status: String,
    pub table: Option<RateTable>,
}

impl MetricFit {
    fn from_rows(rows: Vec<RateRow>) -> Self {
        if rows.len() >= 3 && rows.iter().all(|r| r.error == 0.0) {
            return Self { rows, status: "degenerate: zero error".into(), table: None };
        }
        match fit_rate(&rows) {
            Ok(t) => Self { rows, status: "fitted".into(), table: Some(t) },
            Err(e) => Self { rows, status: format!("refused: {e}"), table: None },
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.table.as_ref().map(|t| t.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub metric: String,
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: ExperimentConfig,
    pub fingerprint: Fingerprint,
    pub cells: Vec<CellRecord>,
    pub fits: BTreeMap<String, MetricFit>,
    pub gates: Vec<GateOutcome>,
    /// Per cell, in `cells` order; not part of the deterministic outputs
    pub wall_seconds: Vec<f64>,
}

impl CampaignResult {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    /// Aligned human-readable table of cells, fits and gates.
    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{:<20} {:>6} {:>6} {:>10} {:>13} {:>11}  {}\n",
            "metric", "N", "M", "delta", "error", "stderr", "status"
        );
        for key in self.fits.keys() {
            for c in &self.cells {
                let status = match &c.status {
                    CellStatus::Ok => "ok".to_string(),
                    CellStatus::Diverged { message } => format!("diverged: {message}"),
                };
                let (e, se) = c.metrics.get(key).map_or((f64::NAN, f64::NAN), |m| (m.error, m.stderr));
                s += &format!(
                    "{:<20} {:>6} {:>6} {:>10.4e} {:>13.6e} {:>11.3e}  {}\n",
                    key, c.particles, c.mkv_size, c.delta, e, se, status
                );
            }
        }
        s.push('\n');
        for (key, fit) in &self.fits {
            match &fit.table {
                Some(t) => {
                    s += &format!(
                        "fit {key}: slope {:.4} +/- {:.4}, R^2 {:.4}\n",
                        t.slope, t.slope_stderr, t.r_squared
                    )
                }
                None => s += &format!("fit {key}: {}\n", fit.status),
            }
        }
        for g in &self.gates {
            s += &format!(
                "gate {} {}: {} ({})\n",
                g.metric,
                g.check,
                if g.pass { "pass" } else { "FAIL" },
                g.detail
            );
        }
        s
    }
}

/// Per-N rate campaign at a fixed mollification width: each cell builds
/// its own reference of size `M = max(4 N, mkv_min)`.
pub fn run_chaos_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    if cfg.campaign.delta_schedule != DeltaSchedule::Fixed {
        return Err(config_error(
            "campaign.delta_schedule",
            "the chaos campaign uses a fixed width; run the moderate campaign for a schedule",
        ));
    }
    run_campaign(cfg)
}

/// Rate campaign with `delta(N)` from the schedule. The reference is built
/// once at the finest width with `M = max(4 N_max, mkv_min)`. A fixed
/// schedule runs exactly the chaos campaign.
pub fn run_moderate_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    if cfg.sim.kernel_spec().nominal_alpha() >= 1.0 {
        return Err(config_error(
            "sim.kernel",
            format!("`{}` is not a singular kernel family", cfg.sim.kernel.family.name()),
        ));
    }
    run_campaign(cfg)
}

struct SharedData {
    noise: PathEnsemble,
    initials: InitialData,
    aux_seed: u64,
    shared_flow: Option<MeasureFlow>,
    frequencies: BTreeMap<String, FrequencySet>,
}

fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let n_max = *cfg.campaign.n_grid.last().unwrap();
    let top = cfg.cell(n_max);
    let report = kernel_report(&top.kernel_spec(), 2.0, top.hurst);
    if !report.admissible {
        if cfg.campaign.allow_inadmissible {
            log::warn!("kernel outside the admissible regime ({}); running anyway", report.verdict);
        } else {
            return Err(config_error(
                "sim.kernel",
                format!("{} (set campaign.allow_inadmissible to run anyway)", report.verdict),
            ));
        }
    }

    // every cell takes a prefix of these arrays
    let noise = top.sample_noise(n_max)?;
    let initials = top.sample_initials(n_max)?;
    let aux_seed = derive_seed(cfg.seed, "mkv-reference");
    let shared_flow = match cfg.campaign.delta_schedule {
        DeltaSchedule::Fixed => None,
        DeltaSchedule::Power { .. } => {
            let finest = cfg.cell(n_max);
            let mut sim = finest.clone();
            sim.mkv_size = cfg.mkv_size(n_max);
            Some(build_mkv_reference(&sim, aux_seed)?)
        }
    };
    let mut frequencies = BTreeMap::new();
    for m in &cfg.campaign.metrics {
        if let MetricSpec::Sobolev { lambda, freq_samples, .. } = m {
            let lambda = lambda.unwrap_or(cfg.sim.dim as f64 / 2.0 + 1.1);
            let f = FrequencySet::sample(cfg.sim.dim, lambda, *freq_samples, derive_seed(cfg.seed, "frequencies"))?;
            frequencies.insert(m.key(), f);
        }
    }
    let shared = SharedData { noise, initials, aux_seed, shared_flow, frequencies };

    let mut cells = Vec::new();
    let mut wall_seconds = Vec::new();
    for &n in &cfg.campaign.n_grid {
        let started = Instant::now();
        let sim = cfg.cell(n);
        let status = match run_cell(cfg, &sim, &shared) {
            Ok(metrics) => (CellStatus::Ok, metrics),
            Err(e @ Error::Divergence { .. }) => {
                log::warn!("cell N = {n} diverged: {e}");
                (CellStatus::Diverged { message: e.to_string() }, BTreeMap::new())
            }
            Err(e) => return Err(e),
        };
        let elapsed = started.elapsed().as_secs_f64();
        log::info!("cell N = {n} done in {elapsed:.1} s");
        cells.push(CellRecord {
            particles: n,
            mkv_size: shared.shared_flow.as_ref().map_or(sim.mkv_size, MeasureFlow::size),
            delta: sim.kernel.delta,
            status: status.0,
            metrics: status.1,
        });
        wall_seconds.push(elapsed);
    }

    let mut fits = BTreeMap::new();
    for m in &cfg.campaign.metrics {
        let key = m.key();
        let rows: Vec<RateRow> = cells
            .iter()
            .filter_map(|c| {
                c.metrics.get(&key).map(|v| RateRow { scale: c.particles as f64, error: v.error, stderr: v.stderr })
            })
            .collect();
        fits.insert(key, MetricFit::from_rows(rows));
    }
    let gates = evaluate_gates(&cfg.campaign.gates, &fits);
    let fingerprint = Fingerprint::for_config(cfg);
    Ok(CampaignResult { config: cfg.clone(), fingerprint, cells, fits, gates, wall_seconds })
}

fn run_cell(cfg: &ExperimentConfig, sim: &SimConfig, shared: &SharedData) -> Result<BTreeMap<String, CellMetric>> {
    let n = sim.particles;
    let noise = shared.noise.truncate_particles(n)?;
    let initials = shared.initials.truncate_particles(n)?;
    let own_flow;
    let flow = match &shared.shared_flow {
        Some(f) => f,
        None => {
            own_flow = build_mkv_reference(sim, shared.aux_seed)?;
            &own_flow
        }
    };
    let run = CouplingRun::run(sim, flow, &noise, &initials)?;
    let mut out = BTreeMap::new();
    let boot_seed = derive_seed(cfg.seed, "bootstrap");
    for m in &cfg.campaign.metrics {
        let sample: ReplicaSample = match m {
            MetricSpec::Coupling => coupling_samples(&run, sim.moment)?,
            MetricSpec::Observable { phi } => observable_samples(&run.ips, flow, phi, sim.moment)?,
            MetricSpec::Sobolev { time_stride, .. } => {
                sobolev_sup_error(&run.ips, flow, &shared.frequencies[&m.key()], *time_stride, sim.moment)?
            }
        };
        let est = sample.estimate();
        let bootstrap_stderr = sample.bootstrap_stderr(cfg.campaign.bootstrap_resamples, boot_seed);
        out.insert(m.key(), CellMetric { error: est.value, stderr: est.stderr, bootstrap_stderr });
    }
    Ok(out)
}

fn evaluate_gates(gates: &BTreeMap<String, Gate>, fits: &BTreeMap<String, MetricFit>) -> Vec<GateOutcome> {
    let mut out = Vec::new();
    for (metric, gate) in gates {
        let fit = &fits[metric];
        let mut push = |check: String, pass: bool, detail: String| {
            out.push(GateOutcome { metric: metric.clone(), check, pass, detail });
        };
        let slope = fit.slope();
        let missing = || format!("no fit: {}", fit.status);
        if let Some([lo, hi]) = gate.slope {
            let check = format!("slope in [{lo}, {hi}]");
            match slope {
                Some(s) => push(check, (lo..=hi).contains(&s), format!("slope {s:.4}")),
                None => push(check, false, missing()),
            }
        }
        if let Some(max) = gate.max_slope {
            let check = format!("slope <= {max}");
            match slope {
                Some(s) => push(check, s <= max, format!("slope {s:.4}")),
                None => push(check, false, missing()),
            }
        }
        if let Some(min) = gate.min_r_squared {
            let check = format!("R^2 >= {min}");
            match &fit.table {
                Some(t) => push(check, t.r_squared >= min, format!("R^2 {:.4}", t.r_squared)),
                None => push(check, false, missing()),
            }
        }
        if gate.monotone {
            let worst = fit
                .rows
                .windows(2)
                .map(|w| (w[1].error - w[0].error) - w[0].stderr.max(w[1].stderr))
                .fold(f64::NEG_INFINITY, f64::max);
            let pass = fit.rows.len() >= 2 && worst <= 0.0;
            push("monotone within 1 stderr".into(), pass, format!("largest excess {worst:.3e}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InitialLaw;
    use crate::fbm::{HurstParam, SamplingMethod, TimeGrid};
    use crate::kernels::{KernelFamily, KernelSpec};

    pub(crate) fn small_config(family: KernelFamily, delta: f64) -> ExperimentConfig {
        ExperimentConfig {
            seed: 3,
            sim: SimConfig {
                particles: 0,
                dim: 1,
                hurst: HurstParam::new(0.5).unwrap(),
                grid: TimeGrid::new(1.0, 16).unwrap(),
                kernel: KernelSpec::new(family, delta, 1),
                init: InitialLaw::Gaussian { mean: vec![0.0], covariance: vec![vec![1.0]] },
                replicas: 8,
                moment: 2.0,
                mkv_size: 0,
                seed: 3,
                allow_stiff: false,
                noise_method: SamplingMethod::Cholesky,
            },
            campaign: CampaignSpec {
                n_grid: vec![4, 8, 16, 32],
                mkv_min: 0,
                delta_schedule: DeltaSchedule::Fixed,
                metrics: vec![MetricSpec::Coupling, MetricSpec::Observable { phi: TestFunction::Tanh }],
                gates: BTreeMap::new(),
                allow_inadmissible: false,
                bootstrap_resamples: 50,
            },
            output_dir: None,
        }
    }

    #[test]
    fn power_schedule_arithmetic() {
        let s = DeltaSchedule::Power { c: 0.5, exponent: -0.5 };
        assert_eq!(s.delta(9.0, 100), 0.05);
        assert_eq!(s.delta(9.0, 100), 0.5 / 10.0);
        assert_eq!(DeltaSchedule::Fixed.delta(0.2, 100), 0.2);
        let s = DeltaSchedule::Power { c: 1.0, exponent: -1.0 };
        assert!((s.delta(0.0, 8) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let base = small_config(KernelFamily::TanhDifference, 0.0);
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.campaign.n_grid = vec![4, 8, 8, 16];
        assert!(matches!(c.validate(), Err(Error::Config { .. })));
        let mut c = base.clone();
        c.campaign.n_grid = vec![4, 8, 16];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.campaign.gates.insert("sobolev".into(), Gate::default());
        assert!(c.validate().is_err());
        let mut c = base;
        c.campaign.metrics.push(MetricSpec::Coupling);
        assert!(c.validate().is_err());
    }

    #[test]
    fn cells_get_their_own_sizes() {
        let mut c = small_config(KernelFamily::TanhDifference, 0.0);
        c.campaign.mkv_min = 40;
        assert_eq!(c.cell(4).mkv_size, 40);
        assert_eq!(c.cell(16).mkv_size, 64);
        assert_eq!(c.cell(16).seed, 3);
    }

    #[test]
    fn constant_kernel_is_degenerate() {
        let mut c = small_config(KernelFamily::Constant { value: vec![0.7] }, 0.0);
        c.campaign.metrics = vec![MetricSpec::Coupling];
        let r = run_chaos_campaign(&c).unwrap();
        let fit = &r.fits["coupling"];
        assert!(fit.rows.iter().all(|row| row.error == 0.0));
        assert_eq!(fit.status, "degenerate: zero error");
        assert!(fit.table.is_none());
    }

    #[test]
    fn fixed_schedule_runs_the_chaos_campaign() {
        let mut c = small_config(KernelFamily::DiracApprox { v: vec![1.0] }, 0.3);
        c.sim.hurst = HurstParam::new(0.2).unwrap();
        let a = run_chaos_campaign(&c).unwrap();
        let b = run_moderate_campaign(&c).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.fits, b.fits);
    }

    #[test]
    fn campaign_kinds_check_their_inputs() {
        let mut c = small_config(KernelFamily::DiracApprox { v: vec![1.0] }, 0.3);
        c.sim.hurst = HurstParam::new(0.2).unwrap();
        c.campaign.delta_schedule = DeltaSchedule::Power { c: 1.5, exponent: -0.5 };
        assert!(run_chaos_campaign(&c).is_err());
        let r = run_moderate_campaign(&c).unwrap();
        assert_eq!(r.cells[1].delta, 1.5 / 8f64.sqrt());
        // one reference for every cell, sized for the largest
        assert!(r.cells.iter().all(|cell| cell.mkv_size == 128));
        let smooth = small_config(KernelFamily::TanhDifference, 0.0);
        assert!(run_moderate_campaign(&smooth).is_err());
    }

    #[test]
    fn inadmissible_kernels_need_an_override() {
        // Dirac on the line is admissible only for H < 1/4
        let mut c = small_config(KernelFamily::DiracApprox { v: vec![1.0] }, 0.3);
        c.sim.hurst = HurstParam::new(0.3).unwrap();
        assert!(matches!(run_chaos_campaign(&c), Err(Error::Config { .. })));
        c.campaign.allow_inadmissible = true;
        assert!(run_chaos_campaign(&c).is_ok());
    }

    #[test]
    fn diverging_cells_are_recorded() {
        // explosive self-drift with the stiffness guard switched off
        let family = KernelFamily::Additive {
            f: crate::kernels::Component::Linear { coef: 1e4 },
            g: crate::kernels::Component::Zero,
            h: crate::kernels::Component::Zero,
        };
        let mut c = small_config(family, 0.0);
        c.sim.allow_stiff = true;
        let r = run_chaos_campaign(&c).unwrap();
        assert!(r.cells.iter().all(|cell| matches!(cell.status, CellStatus::Diverged { .. })));
        assert!(r.fits["coupling"].status.starts_with("refused"));
    }

    #[test]
    fn gates() {
        let rows: Vec<RateRow> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&n: &f64| RateRow { scale: n, error: n.powf(-0.5), stderr: 0.01 })
            .collect();
        let mut fits = BTreeMap::new();
        fits.insert("coupling".to_string(), MetricFit::from_rows(rows));
        let mut gates = BTreeMap::new();
        gates.insert(
            "coupling".to_string(),
            Gate { slope: Some([-0.6, -0.4]), max_slope: Some(-0.25), min_r_squared: Some(0.9), monotone: true },
        );
        let out = evaluate_gates(&gates, &fits);
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|g| g.pass));
        gates.get_mut("coupling").unwrap().slope = Some([-0.4, -0.3]);
        assert!(!evaluate_gates(&gates, &fits)[0].pass);
    }
}
