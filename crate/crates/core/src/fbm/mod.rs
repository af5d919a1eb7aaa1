//! Exact sampling of fractional Brownian motion on uniform time grids.
//!
//! For `H` in (0,1) the increment vector of each coordinate is drawn exactly
//! from its Gaussian law: the increment covariance is factorized once per
//! sampler and reused for every path. For `H` in (1,2) the path is the
//! trapezoidal running integral of an `(H-1)`-path drawn from the same stream.

mod circulant;
mod conditional;

use std::io::Write;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky_jittered;
use crate::rng::{Domain, StreamKey};

pub use circulant::CirculantEmbedding;
pub use conditional::conditional_law;

/// Uniform discretization `t_k = k T / n` of `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    horizon: f64,
    steps: usize,
}

impl TryFrom<GridRepr> for TimeGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        TimeGrid::new(r.horizon, r.steps)
    }
}

impl From<TimeGrid> for GridRepr {
    fn from(g: TimeGrid) -> Self {
        GridRepr {
            horizon: g.horizon,
            steps: g.steps,
        }
    }
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Input(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Input("grid needs at least one step".into()));
        }
        let mut times: Vec<f64> = (0..=steps)
            .map(|k| k as f64 * horizon / steps as f64)
            .collect();
        times[steps] = horizon;
        Ok(Self {
            horizon,
            steps,
            times,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `n`; the grid has `n + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }
}

/// Hurst parameter, any positive non-integer value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Domain(format!("Hurst parameter must be positive, got {h}")));
        }
        if (h - h.round()).abs() <= 1e-9 {
            return Err(Error::Domain(format!("Hurst parameter must not be an integer, got {h}")));
        }
        Ok(Self(h))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        HurstParam::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

/// Covariance of one fBm coordinate, valid for `H` in (0,1).
pub fn fbm_cov(s: f64, t: f64, hurst: HurstParam) -> Result<f64> {
    let h = hurst.value();
    if h >= 1.0 {
        return Err(Error::UnsupportedParameter(format!(
            "covariance formula needs H < 1, got {h}"
        )));
    }
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::Domain(format!("times must be nonnegative, got ({s}, {t})")));
    }
    Ok(cov_unchecked(s, t, h))
}

#[inline]
pub(crate) fn cov_unchecked(s: f64, t: f64, h: f64) -> f64 {
    let p = 2.0 * h;
    0.5 * (t.powf(p) + s.powf(p) - (t - s).abs().powf(p))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
pub(crate) fn fgn_autocov(k: usize, h: f64) -> f64 {
    let p = 2.0 * h;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).abs().powf(p))
}

/// Replicated particle or noise trajectories, shaped
/// `[replicas][particles][n + 1][dim]` in one contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dim: usize,
    replicas: usize,
    particles: usize,
    values: Vec<f64>,
}

impl PathEnsemble {
    pub fn zeros(grid: TimeGrid, dim: usize, replicas: usize, particles: usize) -> Self {
        let len = replicas * particles * grid.len() * dim;
        Self {
            grid,
            dim,
            replicas,
            particles,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(
        grid: TimeGrid,
        dim: usize,
        replicas: usize,
        particles: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != replicas * particles * grid.len() * dim {
            return Err(Error::Input(format!(
                "ensemble buffer has {} values, expected {}",
                values.len(),
                replicas * particles * grid.len() * dim
            )));
        }
        Ok(Self {
            grid,
            dim,
            replicas,
            particles,
            values,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn path_len(&self) -> usize {
        self.grid.len() * self.dim
    }

    pub fn replica_len(&self) -> usize {
        self.particles * self.path_len()
    }

    /// Flattened `[n + 1][dim]` trajectory of one particle.
    pub fn path(&self, replica: usize, particle: usize) -> &[f64] {
        let start = (replica * self.particles + particle) * self.path_len();
        &self.values[start..start + self.path_len()]
    }

    pub fn path_mut(&mut self, replica: usize, particle: usize) -> &mut [f64] {
        let len = self.path_len();
        let start = (replica * self.particles + particle) * len;
        &mut self.values[start..start + len]
    }

    /// Position of one particle at grid index `k`.
    pub fn at(&self, replica: usize, particle: usize, k: usize) -> &[f64] {
        let p = self.path(replica, particle);
        &p[k * self.dim..(k + 1) * self.dim]
    }

    /// Keep the first `particles` particles of every replica.
    pub fn truncate_particles(&self, particles: usize) -> Result<Self> {
        if particles > self.particles {
            return Err(Error::Input(format!(
                "cannot take {particles} of {} particles",
                self.particles
            )));
        }
        let mut values = Vec::with_capacity(self.replicas * particles * self.path_len());
        for r in 0..self.replicas {
            let start = r * self.replica_len();
            values.extend_from_slice(&self.values[start..start + particles * self.path_len()]);
        }
        PathEnsemble::from_values(self.grid.clone(), self.dim, self.replicas, particles, values)
    }

    /// CSV dump with columns `replica,particle,k,t,x_1..x_d`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "replica,particle,k,t")?;
        for c in 1..=self.dim {
            write!(w, ",x_{c}")?;
        }
        writeln!(w)?;
        for r in 0..self.replicas {
            for p in 0..self.particles {
                for k in 0..self.grid.len() {
                    write!(w, "{r},{p},{k},{}", self.grid.time(k))?;
                    for x in self.at(r, p, k) {
                        write!(w, ",{x}")?;
                    }
                    writeln!(w)?;
                }
            }
        }
        Ok(())
    }
}

/// How increments are generated for `H` in (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Cholesky factor of the increment covariance, O(n^2) per path.
    #[default]
    Cholesky,
    /// Davies-Harte circulant embedding, O(n log n) per path; falls back to
    /// Cholesky when the embedding has a negative eigenvalue.
    Circulant,
}

#[derive(Debug)]
enum Engine {
    /// Packed lower-triangular factor, row `i` holds `i + 1` entries.
    Cholesky(Vec<f64>),
    Circulant(CirculantEmbedding),
}

/// Reusable exact sampler for one `(grid, H)` pair.
#[derive(Debug)]
pub struct FbmSampler {
    grid: TimeGrid,
    hurst: HurstParam,
    /// Hurst index of the increments actually drawn (H or H - 1).
    base_hurst: f64,
    integrate: bool,
    engine: Engine,
}

impl FbmSampler {
    pub fn new(grid: &TimeGrid, hurst: HurstParam) -> Result<Self> {
        Self::with_method(grid, hurst, SamplingMethod::Cholesky)
    }

    pub fn with_method(grid: &TimeGrid, hurst: HurstParam, method: SamplingMethod) -> Result<Self> {
        let h = hurst.value();
        let (base_hurst, integrate) = if h < 1.0 {
            (h, false)
        } else if h < 2.0 {
            (h - 1.0, true)
        } else {
            return Err(Error::UnsupportedParameter(format!(
                "sampling supports H in (0,1) or (1,2), got {h}"
            )));
        };
        let n = grid.steps();
        let engine = match method {
            SamplingMethod::Circulant => match CirculantEmbedding::new(n, base_hurst) {
                Some(c) => Engine::Circulant(c),
                None => {
                    log::debug!("circulant embedding negative for n={n}, H={base_hurst}; using Cholesky");
                    Engine::Cholesky(increment_factor(n, base_hurst)?)
                }
            },
            SamplingMethod::Cholesky => Engine::Cholesky(increment_factor(n, base_hurst)?),
        };
        Ok(Self {
            grid: grid.clone(),
            hurst,
            base_hurst,
            integrate,
            engine,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn method(&self) -> SamplingMethod {
        match self.engine {
            Engine::Cholesky(_) => SamplingMethod::Cholesky,
            Engine::Circulant(_) => SamplingMethod::Circulant,
        }
    }

    /// Write one scalar path (`n + 1` values, starting at exactly 0) drawn
    /// from the stream `key`.
    pub fn sample_into(&self, key: StreamKey, out: &mut [f64]) {
        let n = self.grid.steps();
        debug_assert_eq!(out.len(), n + 1);
        let mut rng = key.rng();
        let scale = self.grid.dt().powf(self.base_hurst);
        out[0] = 0.0;
        match &self.engine {
            Engine::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let mut acc = 0.0;
                let mut offset = 0;
                for i in 0..n {
                    let row = &l[offset..offset + i + 1];
                    let inc: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                    offset += i + 1;
                    acc += scale * inc;
                    out[i + 1] = acc;
                }
            }
            Engine::Circulant(c) => {
                let inc = c.sample(&mut rng);
                let mut acc = 0.0;
                for i in 0..n {
                    acc += scale * inc[i];
                    out[i + 1] = acc;
                }
            }
        }
        if self.integrate {
            trapezoid_in_place(out, self.grid.dt());
        }
    }

    pub fn sample_path(&self, key: StreamKey) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.sample_into(key, &mut out);
        out
    }

    /// Ensemble of independent paths; coordinate `c` of particle `p` in
    /// replica `r` is drawn from stream `(seed, domain, r, p, c)`.
    pub fn sample_ensemble(
        &self,
        seed: u64,
        domain: Domain,
        dim: usize,
        replicas: usize,
        particles: usize,
    ) -> PathEnsemble {
        let mut ens = PathEnsemble::zeros(self.grid.clone(), dim, replicas, particles);
        let len = ens.path_len();
        let npts = self.grid.len();
        ens.values_mut()
            .par_chunks_mut(len)
            .enumerate()
            .for_each(|(idx, path)| {
                let (r, p) = (idx / particles, idx % particles);
                let mut buf = vec![0.0; npts];
                for c in 0..dim {
                    let key = StreamKey::new(seed, domain).replica(r).particle(p).coord(c);
                    self.sample_into(key, &mut buf);
                    for (k, v) in buf.iter().enumerate() {
                        path[k * dim + c] = *v;
                    }
                }
            });
        ens
    }
}

/// Running trapezoidal integral, overwriting `path` (which must start at 0).
pub(crate) fn trapezoid_in_place(path: &mut [f64], dt: f64) {
    let mut prev = path[0];
    path[0] = 0.0;
    let mut acc = 0.0;
    for v in path.iter_mut().skip(1) {
        let cur = *v;
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
        *v = acc;
    }
}

fn increment_factor(n: usize, h: f64) -> Result<Vec<f64>> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocov(k, h)).collect();
    let cov = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
    let l = cholesky_jittered(&cov, "fGn increment covariance")?;
    let mut packed = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            packed.push(l[(i, j)]);
        }
    }
    Ok(packed)
}

/// `count` independent `dim`-dimensional fBm paths, drawn from the noise
/// streams of `seed`. The result has one particle per replica.
pub fn sample_fbm(
    grid: &TimeGrid,
    hurst: HurstParam,
    dim: usize,
    count: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if count == 0 || dim == 0 {
        return Err(Error::Input("count and dim must be positive".into()));
    }
    let sampler = FbmSampler::new(grid, hurst)?;
    Ok(sampler.sample_ensemble(seed, Domain::Noise, dim, count, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = TimeGrid::new(0.7, 13).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(13), 0.7);
        assert!(g.times().windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn hurst_rejects_integers() {
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(2.0 + 1e-12).is_err());
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(-0.3).is_err());
        assert!(HurstParam::new(1.5).is_ok());
    }

    #[test]
    fn covariance_values() {
        assert_eq!(fbm_cov(1.0, 1.0, h(0.5)).unwrap(), 1.0);
        for (s, t) in [(0.3, 0.9), (2.0, 0.5), (0.0, 1.0), (1.25, 1.25)] {
            let c = fbm_cov(s, t, h(0.5)).unwrap();
            assert!((c - f64::min(s, t)).abs() < 1e-15);
        }
        let direct = 0.5 * (1.0 + 2f64.powf(0.6) - 1.0);
        let c = fbm_cov(1.0, 2.0, h(0.3)).unwrap();
        assert!((c - direct).abs() < 1e-15);
        assert!((c - 0.757_858_3).abs() < 1e-7);
        assert_eq!(c, fbm_cov(2.0, 1.0, h(0.3)).unwrap());
        assert!(matches!(fbm_cov(1.0, 1.0, h(1.5)), Err(Error::UnsupportedParameter(_))));
    }

    #[test]
    fn unsupported_hurst() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        assert!(matches!(FbmSampler::new(&g, h(2.5)), Err(Error::UnsupportedParameter(_))));
    }

    #[test]
    fn paths_start_at_zero() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        for hv in [0.2, 0.5, 0.8, 1.3] {
            let e = sample_fbm(&g, h(hv), 2, 5, 9).unwrap();
            for r in 0..5 {
                assert_eq!(e.at(r, 0, 0), &[0.0, 0.0]);
            }
        }
    }

    #[test]
    fn integrated_path_is_trapezoid_of_base() {
        let g = TimeGrid::new(1.0, 32).unwrap();
        let key = StreamKey::new(5, Domain::Noise).replica(2);
        let base = FbmSampler::new(&g, h(0.5)).unwrap().sample_path(key);
        let high = FbmSampler::new(&g, h(1.5)).unwrap().sample_path(key);
        let mut acc = 0.0;
        assert_eq!(high[0], 0.0);
        for k in 0..32 {
            acc += 0.5 * g.dt() * (base[k] + base[k + 1]);
            assert_eq!(high[k + 1], acc);
        }
    }

    #[test]
    fn truncation_keeps_prefix() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let s = FbmSampler::new(&g, h(0.4)).unwrap();
        let big = s.sample_ensemble(1, Domain::Noise, 2, 3, 6);
        let small = s.sample_ensemble(1, Domain::Noise, 2, 3, 4);
        assert_eq!(big.truncate_particles(4).unwrap(), small);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let e = sample_fbm(&g, h(0.5), 2, 1, 0).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "replica,particle,k,t,x_1,x_2");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0,0,0,0,0"));
    }
}
