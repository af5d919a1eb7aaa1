//! Euler stepping of the interacting particle system, the auxiliary
//! McKean-Vlasov reference and the coupled i.i.d. copies.

mod drift;
mod euler;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{FbmSampler, HurstParam, PathEnsemble, SamplingMethod, TimeGrid};
use crate::kernels::{Kernel, KernelSpec};
use crate::linalg::cholesky_jittered;
use crate::rng::{Domain, StreamKey};

pub use drift::{drift_field, drift_field_sorted};
pub use euler::{
    build_mkv_reference, simulate_coupled_copies, simulate_ips, CouplingRun, MeasureFlow,
    DIVERGENCE_BOUND,
};

/// Law of the i.i.d. initial positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    PointMass { at: Vec<f64> },
    Gaussian { mean: Vec<f64>, covariance: Vec<Vec<f64>> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::PointMass { at: Vec::new() }
    }
}

impl InitialLaw {
    fn validate(&self, dim: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::Input(format!("initial law: {what}")));
        match self {
            InitialLaw::PointMass { at } => {
                if !(at.is_empty() || at.len() == dim) {
                    return bad("point mass has the wrong dimension");
                }
            }
            InitialLaw::Gaussian { mean, covariance } => {
                if mean.len() != dim || covariance.len() != dim || covariance.iter().any(|r| r.len() != dim) {
                    return bad("gaussian mean/covariance have the wrong shape");
                }
                for i in 0..dim {
                    for j in 0..dim {
                        if (covariance[i][j] - covariance[j][i]).abs() > 1e-12 {
                            return bad("covariance is not symmetric");
                        }
                    }
                }
            }
            InitialLaw::UniformBox { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return bad("box corners have the wrong dimension");
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                    return bad("box needs lo <= hi");
                }
            }
        }
        Ok(())
    }
}

/// Initial positions shaped `[replicas][particles][dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    replicas: usize,
    particles: usize,
    dim: usize,
    values: Vec<f64>,
}

impl InitialData {
    pub fn from_values(replicas: usize, particles: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != replicas * particles * dim {
            return Err(Error::Input(format!(
                "initial data has {} values, expected {}",
                values.len(),
                replicas * particles * dim
            )));
        }
        Ok(Self { replicas, particles, dim, values })
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All particles of one replica, `[particles][dim]`.
    pub fn replica(&self, r: usize) -> &[f64] {
        let len = self.particles * self.dim;
        &self.values[r * len..(r + 1) * len]
    }

    pub fn at(&self, r: usize, p: usize) -> &[f64] {
        let start = (r * self.particles + p) * self.dim;
        &self.values[start..start + self.dim]
    }

    /// Keep the first `particles` particles of every replica.
    pub fn truncate_particles(&self, particles: usize) -> Result<Self> {
        if particles > self.particles {
            return Err(Error::Input(format!("cannot take {particles} of {} particles", self.particles)));
        }
        let values = (0..self.replicas)
            .flat_map(|r| self.replica(r)[..particles * self.dim].iter().copied())
            .collect();
        Self::from_values(self.replicas, particles, self.dim, values)
    }
}

/// Draw i.i.d. initial positions; particle `p` of replica `r` reads stream
/// `(seed, domain, r, p)`, so smaller systems are prefixes of larger ones.
pub fn sample_initials(
    law: &InitialLaw,
    dim: usize,
    seed: u64,
    domain: Domain,
    replicas: usize,
    particles: usize,
) -> Result<InitialData> {
    law.validate(dim)?;
    let chol = match law {
        InitialLaw::Gaussian { covariance, .. } => {
            let m = DMatrix::from_fn(dim, dim, |i, j| covariance[i][j]);
            Some(cholesky_jittered(&m, "initial covariance")?)
        }
        _ => None,
    };
    let mut values = Vec::with_capacity(replicas * particles * dim);
    for r in 0..replicas {
        for p in 0..particles {
            let mut rng = StreamKey::new(seed, domain).replica(r).particle(p).rng();
            match law {
                InitialLaw::PointMass { at } => {
                    values.extend((0..dim).map(|c| at.get(c).copied().unwrap_or(0.0)))
                }
                InitialLaw::Gaussian { mean, .. } => {
                    let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let x = chol.as_ref().expect("factor") * z;
                    values.extend(mean.iter().zip(x.iter()).map(|(m, v)| m + v));
                }
                InitialLaw::UniformBox { lo, hi } => {
                    values.extend(lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.gen::<f64>()))
                }
            }
        }
    }
    InitialData::from_values(replicas, particles, dim, values)
}

fn default_moment() -> f64 {
    2.0
}

/// Everything needed to run one coupled particle experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// N; campaigns set it per cell
    #[serde(default)]
    pub particles: usize,
    pub dim: usize,
    pub hurst: HurstParam,
    pub grid: TimeGrid,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub init: InitialLaw,
    pub replicas: usize,
    /// Moment `m` of the coupling error
    #[serde(default = "default_moment")]
    pub moment: f64,
    /// Size `M` of the auxiliary McKean-Vlasov system; campaigns set it
    /// per cell
    #[serde(default)]
    pub mkv_size: usize,
    /// Taken from the top-level seed of a config file
    #[serde(skip)]
    pub seed: u64,
    /// Proceed (with a warning) when `dt * Lip > 1`
    #[serde(default)]
    pub allow_stiff: bool,
    #[serde(default)]
    pub noise_method: SamplingMethod,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |key: &str, message: String| Error::Config { key: key.into(), line: None, message };
        if self.particles < 2 {
            return Err(cfg("sim.particles", format!("need N >= 2, got {}", self.particles)));
        }
        if self.dim == 0 {
            return Err(cfg("sim.dim", "dimension must be positive".into()));
        }
        if self.replicas == 0 {
            return Err(cfg("sim.replicas", "need at least one replica".into()));
        }
        if !(self.moment >= 1.0) {
            return Err(cfg("sim.moment", format!("need m >= 1, got {}", self.moment)));
        }
        if self.mkv_size < 4 * self.particles {
            return Err(cfg(
                "sim.mkv_size",
                format!("need M >= 4 N = {}, got {}", 4 * self.particles, self.mkv_size),
            ));
        }
        if self.kernel.dim != 0 && self.kernel.dim != self.dim {
            return Err(cfg(
                "sim.kernel.dim",
                format!("kernel dimension {} differs from sim.dim = {}", self.kernel.dim, self.dim),
            ));
        }
        self.init
            .validate(self.dim)
            .map_err(|e| cfg("sim.init", e.to_string()))?;
        self.kernel_spec().validate()
    }

    /// Kernel spec with the dimension filled in from the simulation.
    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec { dim: self.dim, ..self.kernel.clone() }
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        self.kernel_spec().build()
    }

    pub fn sampler(&self) -> Result<FbmSampler> {
        FbmSampler::with_method(&self.grid, self.hurst, self.noise_method)
    }

    /// Driving noise for `particles` particles in each replica, from the
    /// coupling streams of `self.seed`.
    pub fn sample_noise(&self, particles: usize) -> Result<PathEnsemble> {
        Ok(self
            .sampler()?
            .sample_ensemble(self.seed, Domain::Noise, self.dim, self.replicas, particles))
    }

    pub fn sample_initials(&self, particles: usize) -> Result<InitialData> {
        sample_initials(&self.init, self.dim, self.seed, Domain::Initial, self.replicas, particles)
    }
}
