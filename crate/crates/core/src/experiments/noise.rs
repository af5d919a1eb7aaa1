use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{trapezoid_in_place, FbmSampler, HurstParam, SamplingMethod, TimeGrid};
use crate::metrics::{fit_rate, RateRow};
use crate::rng::{Domain, StreamKey};

/// z-score bound for the moment checks.
const Z_LIMIT: f64 = 5.0;
/// Allowed distance of the variance slope from `2H`.
const SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCheckConfig {
    #[serde(default = "default_hursts")]
    pub hursts: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub method: SamplingMethod,
}

fn default_hursts() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.5]
}

fn default_horizon() -> f64 {
    1.0
}

fn default_steps() -> usize {
    64
}

fn default_replicas() -> usize {
    20_000
}

impl Default for NoiseCheckConfig {
    fn default() -> Self {
        Self {
            hursts: default_hursts(),
            horizon: default_horizon(),
            steps: default_steps(),
            replicas: default_replicas(),
            method: SamplingMethod::default(),
        }
    }
}

impl NoiseCheckConfig {
    pub fn run(&self, seed: u64) -> Result<NoiseReport> {
        let grid = TimeGrid::new(self.horizon, self.steps)?;
        run_with_method(&self.hursts, &grid, self.replicas, seed, self.method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstCheck {
    pub hurst: f64,
    /// Largest `|mean - |t-s|^{2H}| / SE` over dyadic pairs; `None` for H > 1
    pub covariance_max_z: Option<f64>,
    pub dyadic_pairs: usize,
    /// Fitted slope of `ln E[W_t^2]` against `ln t`
    pub variance_slope: f64,
    pub slope_pass: bool,
    /// Largest z-score of adjacent-increment products (H = 1/2 only)
    pub independence_max_z: Option<f64>,
    /// Integrated-path identity, bit for bit (H > 1 only)
    pub integral_identity: Option<bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub steps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub checks: Vec<HurstCheck>,
}

impl NoiseReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for NoiseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        writeln!(f, "n = {}, replicas = {}, seed = {}", self.steps, self.replicas, self.seed)?;
        writeln!(
            f,
            "{:>6} {:>10} {:>8} {:>10} {:>10} {:>9}  {}",
            "H", "cov max z", "pairs", "slope", "indep z", "identity", "result"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:>6} {:>10} {:>8} {:>10.4} {:>10} {:>9}  {}",
                c.hurst,
                opt(c.covariance_max_z),
                c.dyadic_pairs,
                c.variance_slope,
                opt(c.independence_max_z),
                c.integral_identity.map_or("-", |b| if b { "exact" } else { "BROKEN" }),
                if c.pass { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Monte Carlo checks of the sampler for each `H`: increment second moments
/// at all dyadic pairs, the self-similarity slope `2H`, independence of
/// Brownian increments, and the integral identity for `H > 1`.
pub fn run_noise_selfcheck(hursts: &[f64], grid: &TimeGrid, replicas: usize, seed: u64) -> Result<NoiseReport> {
    run_with_method(hursts, grid, replicas, seed, SamplingMethod::Cholesky)
}

fn run_with_method(
    hursts: &[f64],
    grid: &TimeGrid,
    replicas: usize,
    seed: u64,
    method: SamplingMethod,
) -> Result<NoiseReport> {
    let n = grid.steps();
    if !n.is_power_of_two() || n < 32 {
        return Err(Error::Input(format!("need a dyadic grid with at least 32 steps, got {n}")));
    }
    if replicas < 2 {
        return Err(Error::Input("need at least 2 replicas".into()));
    }
    let checks = hursts
        .iter()
        .map(|&h| check_one(HurstParam::new(h)?, grid, replicas, seed, method))
        .collect::<Result<_>>()?;
    Ok(NoiseReport { steps: n, replicas, seed, checks })
}

/// Pairs `(i, j)` of grid indices `j 2^-l n, (j + 1) 2^-l n`.
fn dyadic_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut width = n;
    while width >= 1 {
        out.extend((0..n / width).map(|j| (j * width, (j + 1) * width)));
        width /= 2;
    }
    out
}

/// Mean and standard error of `values`.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

fn check_one(
    hurst: HurstParam,
    grid: &TimeGrid,
    replicas: usize,
    seed: u64,
    method: SamplingMethod,
) -> Result<HurstCheck> {
    let h = hurst.value();
    let n = grid.steps();
    let sampler = FbmSampler::with_method(grid, hurst, method)?;
    let paths = sampler.sample_ensemble(seed, Domain::Noise, 1, replicas, 1);
    let column = |i: usize, j: usize| -> Vec<f64> {
        (0..replicas).map(|r| paths.path(r, 0)[j] - paths.path(r, 0)[i]).collect()
    };

    let pairs = dyadic_pairs(n);
    let covariance_max_z = (h < 1.0).then(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let sq: Vec<f64> = column(i, j).iter().map(|v| v * v).collect();
                let (mean, se) = mean_se(&sq);
                let want = (grid.time(j) - grid.time(i)).powf(2.0 * h);
                (mean - want).abs() / se
            })
            .reduce(|| 0.0, f64::max)
    });

    // variance at t = T 2^-l for t >= 8 dt
    let mut rows = Vec::new();
    let mut k = n;
    while k >= 8 {
        let sq: Vec<f64> = column(0, k).iter().map(|v| v * v).collect();
        let (mean, se) = mean_se(&sq);
        rows.push(RateRow { scale: grid.time(k), error: mean, stderr: se });
        k /= 2;
    }
    rows.reverse();
    let variance_slope = fit_rate(&rows)?.slope;
    let slope_pass = (variance_slope - 2.0 * h).abs() <= SLOPE_TOL;

    let independence_max_z = (h == 0.5).then(|| {
        (0..n - 1)
            .map(|k| {
                let a = column(k, k + 1);
                let b = column(k + 1, k + 2);
                let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
                let (mean, se) = mean_se(&prod);
                mean.abs() / se
            })
            .fold(0.0, f64::max)
    });

    let integral_identity = (h > 1.0).then(|| {
        let base = FbmSampler::with_method(grid, HurstParam::new(h - 1.0).expect("H - 1 in (0,1)"), method)
            .expect("base sampler");
        (0..replicas.min(64)).all(|r| {
            let key = StreamKey::new(seed, Domain::Noise).replica(r).particle(0).coord(0);
            let mut p = base.sample_path(key);
            trapezoid_in_place(&mut p, grid.dt());
            p == paths.path(r, 0)
        })
    });

    let pass = covariance_max_z.map_or(true, |z| z < Z_LIMIT)
        && slope_pass
        && independence_max_z.map_or(true, |z| z < Z_LIMIT)
        && integral_identity.unwrap_or(true);
    Ok(HurstCheck {
        hurst: h,
        covariance_max_z,
        dyadic_pairs: pairs.len(),
        variance_slope,
        slope_pass,
        independence_max_z,
        integral_identity,
        pass,
    })
}
