use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_ips, SimConfig};
use crate::error::{Error, Result};
use crate::fbm::{FbmSampler, HurstParam, TimeGrid};
use crate::kernels::admissible;
use crate::metrics::{gagliardo_seminorm, kappa_variation};
use crate::rng::{Domain, StreamKey};

/// Largest ratio between consecutive refinements that still counts as stable.
const STABLE_RATIO: f64 = 1.5;
/// Largest max/min spread of the remainder ratios across the width family.
const REMAINDER_SPREAD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderConfig {
    /// Mollification widths, each run on the same data
    pub deltas: Vec<f64>,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Dyadic levels of `(s, t)` pairs: widths `T, T/2, ..., T/2^levels`
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_q() -> f64 {
    2.0
}

fn default_levels() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsJobConfig {
    #[serde(default = "default_hurst")]
    pub hurst: f64,
    /// Grid sizes of the refinement study; each must divide the last
    #[serde(default = "default_steps")]
    pub steps: Vec<usize>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Needs a `[sim]` section
    #[serde(default)]
    pub remainder: Option<RemainderConfig>,
}

fn default_hurst() -> f64 {
    0.5
}

fn default_steps() -> Vec<usize> {
    vec![128, 256, 512, 1024]
}

fn default_paths() -> usize {
    3
}

fn default_kappas() -> Vec<f64> {
    vec![1.5, 2.5]
}

fn default_betas() -> Vec<f64> {
    vec![0.2, 0.8]
}

impl Default for MetricsJobConfig {
    fn default() -> Self {
        Self {
            hurst: default_hurst(),
            steps: default_steps(),
            paths: default_paths(),
            kappas: default_kappas(),
            betas: default_betas(),
            q: default_q(),
            remainder: None,
        }
    }
}

/// Expected behaviour of a path norm under grid refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Stable,
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub steps: usize,
    /// Mean over paths, one entry per kappa
    pub kappa_variation: Vec<f64>,
    /// Mean over paths, one entry per beta
    pub gagliardo: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub norm: String,
    pub parameter: f64,
    pub expected: Trend,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetricsReport {
    pub hurst: f64,
    pub kappas: Vec<f64>,
    pub betas: Vec<f64>,
    pub rows: Vec<RefinementRow>,
    pub trends: Vec<TrendCheck>,
    pub remainder: Option<RemainderReport>,
}

impl PathMetricsReport {
    pub fn passed(&self) -> bool {
        self.trends.iter().all(|t| t.pass) && self.remainder.as_ref().map_or(true, |r| r.pass)
    }
}

impl fmt::Display for PathMetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "path norms of fBm, H = {}", self.hurst)?;
        write!(f, "{:>6}", "n")?;
        for k in &self.kappas {
            write!(f, " {:>12}", format!("var k={k}"))?;
        }
        for b in &self.betas {
            write!(f, " {:>12}", format!("W b={b}"))?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:>6}", r.steps)?;
            for v in r.kappa_variation.iter().chain(&r.gagliardo) {
                write!(f, " {v:>12.5}")?;
            }
            writeln!(f)?;
        }
        for t in &self.trends {
            writeln!(
                f,
                "{} at {}: expected {:?}, {}",
                t.norm,
                t.parameter,
                t.expected,
                if t.pass { "pass" } else { "FAIL" }
            )?;
        }
        if let Some(r) = &self.remainder {
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

fn trend_holds(series: &[f64], expected: Trend) -> bool {
    series.windows(2).all(|w| match expected {
        Trend::Stable => w[1] / w[0] <= STABLE_RATIO && w[0] / w[1] <= STABLE_RATIO,
        Trend::Growing => w[1] > w[0],
    })
}

/// Refinement study of kappa-variation and Gagliardo seminorms on fBm paths
/// subsampled from one fine path each, plus the remainder diagnostic when
/// configured.
pub fn run_path_metrics(job: &MetricsJobConfig, sim: Option<&SimConfig>, seed: u64) -> Result<PathMetricsReport> {
    let hurst = HurstParam::new(job.hurst)?;
    let h = job.hurst;
    if h >= 1.0 {
        return Err(Error::UnsupportedParameter(format!("refinement study needs H < 1, got {h}")));
    }
    let finest = *job.steps.iter().max().ok_or_else(|| Error::Input("no grid sizes".into()))?;
    if job.steps.windows(2).any(|w| w[1] <= w[0]) || job.steps.iter().any(|&n| n < 2 || finest % n != 0) {
        return Err(Error::Input("grid sizes must increase and divide the finest one".into()));
    }
    if job.paths == 0 {
        return Err(Error::Input("need at least one path".into()));
    }
    let sampler = FbmSampler::new(&TimeGrid::new(1.0, finest)?, hurst)?;
    let fine: Vec<Vec<f64>> = (0..job.paths)
        .map(|r| sampler.sample_path(StreamKey::new(seed, Domain::Noise).replica(r)))
        .collect();

    // values[path][steps index][parameter]
    let per_path: Vec<Vec<(Vec<f64>, Vec<f64>)>> = fine
        .par_iter()
        .map(|path| {
            job.steps
                .iter()
                .map(|&n| {
                    let sub: Vec<f64> = path.iter().step_by(finest / n).copied().collect();
                    let kv = job.kappas.iter().map(|&k| kappa_variation(&sub, 1, k)).collect::<Result<_>>()?;
                    let gs = job
                        .betas
                        .iter()
                        .map(|&b| gagliardo_seminorm(&sub, 1, 1.0 / n as f64, b, job.q))
                        .collect::<Result<_>>()?;
                    Ok((kv, gs))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let paths = job.paths as f64;
    let rows = job
        .steps
        .iter()
        .enumerate()
        .map(|(i, &n)| RefinementRow {
            steps: n,
            kappa_variation: (0..job.kappas.len())
                .map(|j| per_path.iter().map(|p| p[i].0[j]).sum::<f64>() / paths)
                .collect(),
            gagliardo: (0..job.betas.len())
                .map(|j| per_path.iter().map(|p| p[i].1[j]).sum::<f64>() / paths)
                .collect(),
        })
        .collect();

    let mut trends = Vec::new();
    for (j, &k) in job.kappas.iter().enumerate() {
        let expected = if k * h > 1.0 { Trend::Stable } else { Trend::Growing };
        let pass = per_path
            .iter()
            .all(|p| trend_holds(&p.iter().map(|c| c.0[j]).collect::<Vec<_>>(), expected));
        trends.push(TrendCheck { norm: "kappa-variation".into(), parameter: k, expected, pass });
    }
    for (j, &b) in job.betas.iter().enumerate() {
        let expected = if b < h { Trend::Stable } else { Trend::Growing };
        let pass = per_path
            .iter()
            .all(|p| trend_holds(&p.iter().map(|c| c.1[j]).collect::<Vec<_>>(), expected));
        trends.push(TrendCheck { norm: "gagliardo".into(), parameter: b, expected, pass });
    }

    let remainder = match (&job.remainder, sim) {
        (Some(rc), Some(sim)) => Some(remainder_diagnostic(sim, rc)?),
        (Some(_), None) => {
            return Err(Error::Config {
                key: "metrics_job.remainder".into(),
                line: None,
                message: "the remainder diagnostic needs a [sim] section".into(),
            })
        }
        (None, _) => None,
    };
    Ok(PathMetricsReport { hurst: h, kappas: job.kappas.clone(), betas: job.betas.clone(), rows, trends, remainder })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub delta: f64,
    /// `max over dyadic (s, t)` of `||theta_t - theta_s||_2 / |t - s|^exponent`
    pub ratio: f64,
    /// Grid indices where the maximum is attained
    pub argmax: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub alpha: f64,
    pub q: f64,
    pub hurst: f64,
    pub admissible: bool,
    /// `alpha H + 1/q'`
    pub exponent: f64,
    pub rows: Vec<RemainderRow>,
    /// max / min of the ratios
    pub spread: f64,
    pub pass: bool,
}

impl fmt::Display for RemainderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "remainder: alpha = {}, q = {}, H = {}, exponent {:.4}, admissible {}",
            self.alpha, self.q, self.hurst, self.exponent, self.admissible
        )?;
        for r in &self.rows {
            writeln!(f, "  delta {:<8} ratio {:.5}  at {:?}", r.delta, r.ratio, r.argmax)?;
        }
        writeln!(
            f,
            "  spread {:.3} (limit {REMAINDER_SPREAD}): {}",
            self.spread,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Drift part `theta = X - X_0 - W` of the particle system for each width,
/// on shared noise and initial data. Its mean-square increments over dyadic
/// pairs are scaled by `|t - s|^{alpha H + 1 - 1/q}`; a budget that holds
/// uniformly in the width keeps the largest scaled increment bounded across
/// the family.
pub fn remainder_diagnostic(sim: &SimConfig, rc: &RemainderConfig) -> Result<RemainderReport> {
    if rc.deltas.len() < 2 {
        return Err(Error::Input("need at least two widths".into()));
    }
    if !(rc.q > 1.0) {
        return Err(Error::Domain(format!("need q > 1, got {}", rc.q)));
    }
    let n = sim.grid.steps();
    if n % (1 << rc.levels) != 0 {
        return Err(Error::Input(format!("{n} steps cannot be split into 2^{} dyadic blocks", rc.levels)));
    }
    let alpha = sim.kernel_spec().nominal_alpha();
    let h = sim.hurst.value();
    let (ok, _) = admissible(alpha, rc.q, sim.hurst);
    let exponent = alpha * h + 1.0 - 1.0 / rc.q;

    let mut sim = sim.clone();
    if sim.mkv_size < 4 * sim.particles {
        sim.mkv_size = 4 * sim.particles;
    }
    let noise = sim.sample_noise(sim.particles)?;
    let initials = sim.sample_initials(sim.particles)?;
    let d = sim.dim;
    let mut pairs = Vec::new();
    for l in 0..=rc.levels {
        let width = n >> l;
        pairs.extend((0..1usize << l).map(|j| (j * width, (j + 1) * width)));
    }

    let mut rows = Vec::new();
    for &delta in &rc.deltas {
        let mut cfg = sim.clone();
        cfg.kernel.delta = delta;
        let ips = simulate_ips(&cfg, &noise, &initials)?;
        let count = (ips.replicas() * ips.particles()) as f64;
        let theta = |r: usize, p: usize, k: usize, c: usize| {
            ips.at(r, p, k)[c] - initials.at(r, p)[c] - noise.at(r, p, k)[c]
        };
        let mut best = (0.0_f64, (0, 0));
        for &(s, t) in &pairs {
            let mut sq = 0.0;
            for r in 0..ips.replicas() {
                for p in 0..ips.particles() {
                    for c in 0..d {
                        sq += (theta(r, p, t, c) - theta(r, p, s, c)).powi(2);
                    }
                }
            }
            let norm = (sq / count).sqrt();
            let ratio = norm / (sim.grid.time(t) - sim.grid.time(s)).powf(exponent);
            if ratio > best.0 {
                best = (ratio, (s, t));
            }
        }
        rows.push(RemainderRow { delta, ratio: best.0, argmax: best.1 });
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    let spread = max / min;
    Ok(RemainderReport {
        alpha,
        q: rc.q,
        hurst: h,
        admissible: ok,
        exponent,
        rows,
        spread,
        pass: ok && spread <= REMAINDER_SPREAD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_rules() {
        assert!(trend_holds(&[1.0, 1.2, 1.3], Trend::Stable));
        assert!(!trend_holds(&[1.0, 1.6], Trend::Stable));
        assert!(trend_holds(&[1.0, 1.6, 2.0], Trend::Growing));
        assert!(!trend_holds(&[1.0, 1.0], Trend::Growing));
    }

    #[test]
    fn brownian_refinement_study() {
        let job = MetricsJobConfig { steps: vec![64, 128, 256], paths: 2, ..Default::default() };
        let r = run_path_metrics(&job, None, 5).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.passed(), "{r}");
        assert_eq!(r.trends[0].expected, Trend::Growing);
        assert_eq!(r.trends[1].expected, Trend::Stable);
    }

    #[test]
    fn remainder_needs_a_simulation() {
        let job = MetricsJobConfig {
            steps: vec![16, 32, 64],
            remainder: Some(RemainderConfig { deltas: vec![0.1, 0.05], q: 2.0, levels: 2 }),
            ..Default::default()
        };
        assert!(matches!(run_path_metrics(&job, None, 1), Err(Error::Config { .. })));
    }
}
