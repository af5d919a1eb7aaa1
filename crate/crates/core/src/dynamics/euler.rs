use rayon::prelude::*;

use super::drift::{autonomous_drift, lex_sorted, SortScratch};
use super::{InitialData, SimConfig};
use crate::error::{Error, Result};
use crate::fbm::{PathEnsemble, TimeGrid};
use crate::kernels::{Kernel, KernelSpec, PreparedCloud};
use crate::rng::Domain;

/// Any coordinate beyond this magnitude counts as a blow-up.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Empirical law of the auxiliary McKean-Vlasov system at every grid time,
/// `[n + 1][M][d]`, uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFlow {
    grid: TimeGrid,
    dim: usize,
    size: usize,
    kernel: KernelSpec,
    points: Vec<f64>,
}

impl MeasureFlow {
    /// Freeze replica `r` of an ensemble as a flow for `kernel`.
    pub fn from_ensemble(ens: &PathEnsemble, r: usize, kernel: KernelSpec) -> Result<Self> {
        if r >= ens.replicas() {
            return Err(Error::Input(format!("replica {r} out of range")));
        }
        let (m, d, n1) = (ens.particles(), ens.dim(), ens.grid().len());
        let mut points = vec![0.0; n1 * m * d];
        for p in 0..m {
            let path = ens.path(r, p);
            for k in 0..n1 {
                points[(k * m + p) * d..(k * m + p + 1) * d].copy_from_slice(&path[k * d..(k + 1) * d]);
            }
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("flow support must be finite".into()));
        }
        Ok(Self { grid: ens.grid().clone(), dim: d, size: m, kernel, points })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// M
    pub fn size(&self) -> usize {
        self.size
    }

    /// The kernel the auxiliary system was run with.
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Support points at grid index `k`, `[M][d]`.
    pub fn at(&self, k: usize) -> &[f64] {
        let len = self.size * self.dim;
        &self.points[k * len..(k + 1) * len]
    }
}

/// IPS and coupled copies run on the same initial data and noise.
#[derive(Debug, Clone)]
pub struct CouplingRun {
    pub ips: PathEnsemble,
    pub copies: PathEnsemble,
    /// Seed of the noise and initial-data streams both runs consumed
    pub data_seed: u64,
}

impl CouplingRun {
    /// Run both systems on `noise` and `initials`.
    pub fn run(config: &SimConfig, flow: &MeasureFlow, noise: &PathEnsemble, initials: &InitialData) -> Result<Self> {
        let ips = simulate_ips(config, noise, initials)?;
        let copies = simulate_coupled_copies(config, flow, noise, initials)?;
        Ok(Self { ips, copies, data_seed: config.seed })
    }
}

/// `m̄_k dt` for every step, with `m̄_k` the modulation averaged over the
/// step.
fn step_factors(kernel: &Kernel, grid: &TimeGrid) -> Vec<f64> {
    let dt = grid.dt();
    (0..grid.steps())
        .map(|k| kernel.spec().modulation.step_average(grid.time(k), grid.time(k + 1)) * dt)
        .collect()
}

fn check_step(kernel: &Kernel, factors: &[f64], allow_stiff: bool) -> Result<()> {
    let worst = factors.iter().cloned().fold(0.0, f64::max);
    let product = worst * kernel.lipschitz_estimate();
    if product > 1.0 {
        if !allow_stiff {
            return Err(Error::StepSize { product });
        }
        log::warn!("dt * Lip = {product:.3} > 1; proceeding because allow_stiff is set");
    }
    Ok(())
}

fn check_shapes(config: &SimConfig, noise: &PathEnsemble, initials: &InitialData) -> Result<()> {
    let mismatch = |key: &str, message: String| Err(Error::Config { key: key.into(), line: None, message });
    if noise.grid() != &config.grid {
        return mismatch("sim.grid", "noise was sampled on a different grid".into());
    }
    if noise.dim() != config.dim || initials.dim() != config.dim {
        return mismatch("sim.dim", "noise or initial data has the wrong dimension".into());
    }
    if noise.replicas() != initials.replicas() || noise.particles() != initials.particles() {
        return mismatch(
            "sim.particles",
            format!(
                "noise is {}x{} but initial data is {}x{}",
                noise.replicas(),
                noise.particles(),
                initials.replicas(),
                initials.particles()
            ),
        );
    }
    if noise.particles() != config.particles {
        return mismatch(
            "sim.particles",
            format!("config has N = {}, data has {}", config.particles, noise.particles()),
        );
    }
    Ok(())
}

/// First error by replica index, so the report does not depend on
/// scheduling.
fn first_error(results: Vec<Result<()>>) -> Result<()> {
    results.into_iter().collect()
}

#[inline]
fn guard(x: f64, replica: usize, step: usize) -> Result<()> {
    if x.is_finite() && x.abs() <= DIVERGENCE_BOUND {
        Ok(())
    } else {
        Err(Error::Divergence { replica, step, magnitude: x.abs() })
    }
}

/// Euler scheme for one replica of the particle system. Positions are kept
/// as `X_k = (X_0 + W_k) + D_k` with `D` the accumulated drift, which is
/// the left-point Euler recursion reassociated so that zero drift returns
/// `X_0 + W` exactly.
fn ips_replica(
    kernel: &Kernel,
    factors: &[f64],
    noise: &[f64],
    x0: &[f64],
    out: &mut [f64],
    replica: usize,
) -> Result<()> {
    let d = kernel.dim();
    let n = x0.len() / d;
    let n1 = factors.len() + 1;
    let pl = n1 * d;
    let mut pos = x0.to_vec();
    let mut acc = vec![0.0; n * d];
    let mut drift = vec![0.0; n * d];
    let mut scratch = SortScratch::default();
    for i in 0..n {
        for c in 0..d {
            out[i * pl + c] = x0[i * d + c] + noise[i * pl + c];
        }
    }
    for (k, &f) in factors.iter().enumerate() {
        autonomous_drift(kernel, &pos, &mut scratch, &mut drift);
        for i in 0..n {
            for c in 0..d {
                let j = i * d + c;
                acc[j] += drift[j] * f;
                let at = i * pl + (k + 1) * d + c;
                let x = (x0[j] + noise[at]) + acc[j];
                guard(x, replica, k + 1)?;
                out[at] = x;
                pos[j] = x;
            }
        }
    }
    Ok(())
}

fn run_ips(kernel: &Kernel, grid: &TimeGrid, allow_stiff: bool, noise: &PathEnsemble, initials: &InitialData) -> Result<PathEnsemble> {
    let factors = step_factors(kernel, grid);
    check_step(kernel, &factors, allow_stiff)?;
    let mut out = PathEnsemble::zeros(grid.clone(), noise.dim(), noise.replicas(), noise.particles());
    let rl = noise.replica_len();
    let results = out
        .values_mut()
        .par_chunks_mut(rl)
        .enumerate()
        .map(|(r, chunk)| {
            let w = &noise.values()[r * rl..(r + 1) * rl];
            ips_replica(kernel, &factors, w, initials.replica(r), chunk, r)
        })
        .collect();
    first_error(results)?;
    Ok(out)
}

/// Simulate the N-particle system on the given noise and initial data, one
/// independent system per replica.
pub fn simulate_ips(config: &SimConfig, noise: &PathEnsemble, initials: &InitialData) -> Result<PathEnsemble> {
    config.validate()?;
    check_shapes(config, noise, initials)?;
    let kernel = config.build_kernel()?;
    run_ips(&kernel, &config.grid, config.allow_stiff, noise, initials)
}

/// Run one auxiliary system of `config.mkv_size` particles on streams of
/// `seed_aux` (disjoint from the coupling streams) and freeze its empirical
/// law at every grid time.
pub fn build_mkv_reference(config: &SimConfig, seed_aux: u64) -> Result<MeasureFlow> {
    config.validate()?;
    let m = config.mkv_size;
    let kernel = config.build_kernel()?;
    let noise = config
        .sampler()?
        .sample_ensemble(seed_aux, Domain::AuxNoise, config.dim, 1, m);
    let initials = super::sample_initials(&config.init, config.dim, seed_aux, Domain::AuxInitial, 1, m)?;
    let ens = run_ips(&kernel, &config.grid, config.allow_stiff, &noise, &initials)?;
    MeasureFlow::from_ensemble(&ens, 0, kernel.spec().clone())
}

/// i.i.d. copies driven by the frozen flow: particle `i` of replica `r`
/// uses exactly `initials[r][i]` and `noise[r][i]`, the arrays the particle
/// system consumed. The drift is `(1/M) sum_m b(x, Y^m_k)` with the flow's
/// own kernel.
pub fn simulate_coupled_copies(
    config: &SimConfig,
    flow: &MeasureFlow,
    noise: &PathEnsemble,
    initials: &InitialData,
) -> Result<PathEnsemble> {
    config.validate()?;
    check_shapes(config, noise, initials)?;
    if flow.grid() != &config.grid {
        return Err(Error::Config {
            key: "sim.grid".into(),
            line: None,
            message: "measure flow was built on a different grid".into(),
        });
    }
    if flow.dim() != config.dim {
        return Err(Error::Config {
            key: "sim.dim".into(),
            line: None,
            message: "measure flow has a different dimension".into(),
        });
    }
    let kernel = flow.kernel().build()?;
    let grid = &config.grid;
    let factors = step_factors(&kernel, grid);
    check_step(&kernel, &factors, config.allow_stiff)?;
    let d = config.dim;
    let clouds: Vec<PreparedCloud> = if kernel.has_interaction() {
        (0..grid.len() - 1)
            .map(|k| kernel.prepare(&lex_sorted(flow.at(k), d)))
            .collect()
    } else {
        Vec::new()
    };
    let inv_m = 1.0 / flow.size() as f64;
    let pl = grid.len() * d;

    let mut out = PathEnsemble::zeros(grid.clone(), d, noise.replicas(), noise.particles());
    let results = out
        .values_mut()
        .par_chunks_mut(pl)
        .enumerate()
        .map(|(idx, path)| {
            let (r, p) = (idx / noise.particles(), idx % noise.particles());
            let w = noise.path(r, p);
            let x0 = initials.at(r, p);
            let mut x = x0.to_vec();
            let mut acc = vec![0.0; d];
            let mut drift = vec![0.0; d];
            for c in 0..d {
                path[c] = x0[c] + w[c];
            }
            for (k, &f) in factors.iter().enumerate() {
                drift.iter_mut().for_each(|v| *v = 0.0);
                if let Some(cloud) = clouds.get(k) {
                    kernel.accumulate(&x, cloud, None, &mut drift);
                    drift.iter_mut().for_each(|v| *v *= inv_m);
                }
                kernel.add_local(&x, &mut drift);
                for c in 0..d {
                    acc[c] += drift[c] * f;
                    let at = (k + 1) * d + c;
                    let v = (x0[c] + w[at]) + acc[c];
                    guard(v, r, k + 1)?;
                    path[at] = v;
                    x[c] = v;
                }
            }
            Ok(())
        })
        .collect::<Vec<_>>();
    first_error(results)?;
    Ok(out)
}
