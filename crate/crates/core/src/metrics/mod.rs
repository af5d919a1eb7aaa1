//! Distances between particle systems and reference laws, path norms, and
//! log-log rate fits.

mod fit;
mod sobolev;
mod variation;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CouplingRun, MeasureFlow};
use crate::error::{Error, Result};
use crate::fbm::PathEnsemble;
use crate::rng::{Domain, StreamKey};

pub use fit::{fit_rate, rows_to_csv, rows_to_loglog_csv, RateRow, RateTable};
pub use sobolev::{sobolev_distance, sobolev_sup_error, FrequencySet};
pub use variation::{
    control_check, gagliardo_seminorm, kappa_variation, ControlReport, ControlSample,
};

/// Bounded Lipschitz test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `(1/d) sum_c tanh(x_c)`
    Tanh,
    /// `exp(-|x|^2 / 2)`
    GaussianBump,
    /// `sin(x_1)`
    SinFirst,
    Constant { value: f64 },
}

impl TestFunction {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Tanh => "tanh",
            TestFunction::GaussianBump => "gaussian_bump",
            TestFunction::SinFirst => "sin_first",
            TestFunction::Constant { .. } => "constant",
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Tanh => x.iter().map(|v| v.tanh()).sum::<f64>() / x.len() as f64,
            TestFunction::GaussianBump => (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(),
            TestFunction::SinFirst => x[0].sin(),
            TestFunction::Constant { value } => *value,
        }
    }

    /// Lipschitz bound in dimension `d` (Euclidean norm).
    pub fn lipschitz(&self, d: usize) -> f64 {
        match self {
            TestFunction::Tanh => 1.0 / (d as f64).sqrt(),
            TestFunction::GaussianBump => (-0.5f64).exp(),
            TestFunction::SinFirst => 1.0,
            TestFunction::Constant { .. } => 0.0,
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            TestFunction::Constant { value } => value.abs(),
            _ => 1.0,
        }
    }

    /// Largest observed `|phi(x) - phi(y)| / |x - y|` over `pairs` random
    /// pairs in `[-4, 4]^d`.
    pub fn empirical_lipschitz(&self, d: usize, pairs: usize, seed: u64) -> f64 {
        let mut rng = StreamKey::new(seed, Domain::Test).rng();
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dist > 0.0 {
                worst = worst.max((self.eval(&x) - self.eval(&y)).abs() / dist);
            }
        }
        worst
    }
}

/// Mean of `m`-th powers over replicas, reported as an `L^m` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Delta-method standard error; NaN with a single replica
    pub stderr: f64,
}

/// One nonnegative statistic `Z_r` per replica, summarized as
/// `(mean Z)^{1/m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSample {
    pub moment: f64,
    pub per_replica: Vec<f64>,
}

impl ReplicaSample {
    pub fn estimate(&self) -> Estimate {
        estimate_of(&self.per_replica, self.moment)
    }

    /// Standard deviation of the estimate over `resamples` bootstrap draws
    /// of the replicas.
    pub fn bootstrap_stderr(&self, resamples: usize, seed: u64) -> f64 {
        let r = self.per_replica.len();
        let mut rng: ChaCha8Rng = StreamKey::new(seed, Domain::Test).rng();
        let draws: Vec<f64> = (0..resamples)
            .map(|_| {
                let mean = (0..r).map(|_| self.per_replica[rng.gen_range(0..r)]).sum::<f64>() / r as f64;
                mean.powf(1.0 / self.moment)
            })
            .collect();
        let mu = draws.iter().sum::<f64>() / resamples as f64;
        (draws.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt()
    }
}

fn estimate_of(z: &[f64], m: f64) -> Estimate {
    let r = z.len() as f64;
    let mean = z.iter().sum::<f64>() / r;
    let value = mean.powf(1.0 / m);
    let stderr = if z.len() < 2 {
        f64::NAN
    } else if mean == 0.0 {
        0.0
    } else {
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        mean.powf(1.0 / m - 1.0) / m * (var / r).sqrt()
    };
    Estimate { value, stderr }
}

/// Order-independent sum: the terms are sorted first, so any permutation of
/// the inputs gives the same bits.
pub(crate) fn sorted_sum(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn check_moment(m: f64) -> Result<()> {
    if m >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("moment must be >= 1, got {m}")))
    }
}

/// Per-replica `Z_r = (1/N) sum_i sup_k |X^i_k - Xbar^i_k|^m`.
pub fn coupling_samples(run: &CouplingRun, m: f64) -> Result<ReplicaSample> {
    check_moment(m)?;
    let (a, b) = (&run.ips, &run.copies);
    if a.replicas() == 0 || a.particles() == 0 {
        return Err(Error::Input("empty coupling run".into()));
    }
    if a.values().len() != b.values().len() || a.dim() != b.dim() || a.grid() != b.grid() {
        return Err(Error::Input("particle system and copies have different shapes".into()));
    }
    let d = a.dim();
    let per_replica = (0..a.replicas())
        .into_par_iter()
        .map(|r| {
            let mut sups: Vec<f64> = (0..a.particles())
                .map(|p| {
                    let (x, y) = (a.path(r, p), b.path(r, p));
                    x.chunks(d)
                        .zip(y.chunks(d))
                        .map(|(u, v)| u.iter().zip(v).map(|(s, t)| (s - t).powi(2)).sum::<f64>())
                        .fold(0.0, f64::max)
                        .sqrt()
                        .powf(m)
                })
                .collect();
            sorted_sum(&mut sups) / a.particles() as f64
        })
        .collect();
    Ok(ReplicaSample { moment: m, per_replica })
}

/// `E[sup_t |X^{i;N}_t - Xbar^i_t|^m]^{1/m}` averaged over particles.
pub fn coupling_error(run: &CouplingRun, m: f64) -> Result<Estimate> {
    Ok(coupling_samples(run, m)?.estimate())
}

fn pairing(points: &[f64], d: usize, phi: &TestFunction) -> f64 {
    if let TestFunction::Constant { value } = phi {
        return *value;
    }
    let mut v: Vec<f64> = points.chunks(d).map(|x| phi.eval(x)).collect();
    let n = v.len() as f64;
    sorted_sum(&mut v) / n
}

/// Per-replica `sup_k |<phi, mu^N_k> - <phi, mubar_k>|^m`.
pub fn observable_samples(ips: &PathEnsemble, flow: &MeasureFlow, phi: &TestFunction, m: f64) -> Result<ReplicaSample> {
    check_moment(m)?;
    if ips.replicas() == 0 || ips.particles() == 0 {
        return Err(Error::Input("empty particle ensemble".into()));
    }
    if ips.grid() != flow.grid() || ips.dim() != flow.dim() {
        return Err(Error::Input("ensemble and flow differ in grid or dimension".into()));
    }
    let d = ips.dim();
    let n1 = ips.grid().len();
    let reference: Vec<f64> = (0..n1).map(|k| pairing(flow.at(k), d, phi)).collect();
    let per_replica = (0..ips.replicas())
        .into_par_iter()
        .map(|r| {
            let mut cloud = vec![0.0; ips.particles() * d];
            let mut worst: f64 = 0.0;
            for (k, refk) in reference.iter().enumerate() {
                for p in 0..ips.particles() {
                    cloud[p * d..(p + 1) * d].copy_from_slice(ips.at(r, p, k));
                }
                worst = worst.max((pairing(&cloud, d, phi) - refk).abs());
            }
            worst.powf(m)
        })
        .collect();
    Ok(ReplicaSample { moment: m, per_replica })
}

/// `E[sup_t |<phi, mu^N_t> - <phi, mubar_t>|^m]^{1/m}`.
pub fn observable_error(ips: &PathEnsemble, flow: &MeasureFlow, phi: &TestFunction, m: f64) -> Result<Estimate> {
    Ok(observable_samples(ips, flow, phi, m)?.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_mkv_reference, InitialLaw, SimConfig};
    use crate::fbm::{HurstParam, SamplingMethod, TimeGrid};
    use crate::kernels::{KernelFamily, KernelSpec};

    fn cfg(family: KernelFamily) -> SimConfig {
        SimConfig {
            particles: 6,
            dim: 1,
            hurst: HurstParam::new(0.5).unwrap(),
            grid: TimeGrid::new(1.0, 8).unwrap(),
            kernel: KernelSpec::new(family, 0.0, 1),
            init: InitialLaw::Gaussian { mean: vec![0.0], covariance: vec![vec![1.0]] },
            replicas: 4,
            moment: 2.0,
            mkv_size: 24,
            seed: 3,
            allow_stiff: false,
            noise_method: SamplingMethod::Cholesky,
        }
    }

    fn run(c: &SimConfig) -> (CouplingRun, MeasureFlow) {
        let flow = build_mkv_reference(c, 77).unwrap();
        let w = c.sample_noise(c.particles).unwrap();
        let x0 = c.sample_initials(c.particles).unwrap();
        (CouplingRun::run(c, &flow, &w, &x0).unwrap(), flow)
    }

    #[test]
    fn builtin_lipschitz_bounds_hold() {
        for phi in [TestFunction::Tanh, TestFunction::GaussianBump, TestFunction::SinFirst, TestFunction::Constant { value: 2.0 }] {
            for d in [1, 3] {
                assert!(phi.empirical_lipschitz(d, 20_000, 1) <= phi.lipschitz(d) * (1.0 + 1e-9), "{}", phi.name());
            }
        }
    }

    #[test]
    fn trivial_kernels_have_zero_coupling_error() {
        for family in [KernelFamily::Zero, KernelFamily::Constant { value: vec![0.4] }] {
            let (r, _) = run(&cfg(family));
            let e = coupling_error(&r, 2.0).unwrap();
            assert_eq!(e.value, 0.0);
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn constant_observable_has_zero_error() {
        let (r, flow) = run(&cfg(KernelFamily::TanhDifference));
        let e = observable_error(&r.ips, &flow, &TestFunction::Constant { value: 1.3 }, 2.0).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn identical_ensemble_has_zero_observable_error() {
        let (r, _) = run(&cfg(KernelFamily::TanhDifference));
        let flow = MeasureFlow::from_ensemble(&r.ips, 0, cfg(KernelFamily::TanhDifference).kernel).unwrap();
        let one = PathEnsemble::from_values(r.ips.grid().clone(), 1, 1, 6, r.ips.values()[..r.ips.replica_len()].to_vec()).unwrap();
        let e = observable_error(&one, &flow, &TestFunction::Tanh, 2.0).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn errors_are_permutation_invariant() {
        let (r, flow) = run(&cfg(KernelFamily::TanhDifference));
        let permute = |e: &PathEnsemble| {
            let mut v = Vec::new();
            for rep in 0..e.replicas() {
                for p in [3, 0, 5, 1, 4, 2] {
                    v.extend_from_slice(e.path(rep, p));
                }
            }
            PathEnsemble::from_values(e.grid().clone(), 1, e.replicas(), 6, v).unwrap()
        };
        let shuffled = CouplingRun { ips: permute(&r.ips), copies: permute(&r.copies), data_seed: 0 };
        assert_eq!(coupling_error(&r, 2.0).unwrap(), coupling_error(&shuffled, 2.0).unwrap());
        assert_eq!(
            observable_error(&r.ips, &flow, &TestFunction::Tanh, 2.0).unwrap(),
            observable_error(&shuffled.ips, &flow, &TestFunction::Tanh, 2.0).unwrap()
        );
    }

    #[test]
    fn delta_method_matches_bootstrap() {
        let mut rng = StreamKey::new(5, Domain::Test).rng();
        let z: Vec<f64> = (0..400).map(|_| rng.gen::<f64>().powi(2)).collect();
        let s = ReplicaSample { moment: 2.0, per_replica: z };
        let e = s.estimate();
        let b = s.bootstrap_stderr(2000, 9);
        assert!(b / e.stderr < 1.2 && e.stderr / b < 1.2, "{b} vs {}", e.stderr);
    }

    #[test]
    fn bad_moment() {
        let (r, _) = run(&cfg(KernelFamily::Zero));
        assert!(matches!(coupling_error(&r, 0.5), Err(Error::Domain(_))));
    }
}
