use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use super::ReplicaSample;
use crate::dynamics::MeasureFlow;
use crate::error::{Error, Result};
use crate::fbm::PathEnsemble;
use crate::rng::{Domain, StreamKey};

/// Frequencies drawn from the normalized weight `(1 + |xi|)^{-2 lambda}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    dim: usize,
    lambda: f64,
    /// `int (1 + |xi|)^{-2 lambda} d xi`
    norm: f64,
    xi: Vec<f64>,
}

impl FrequencySet {
    /// The radius has density `(1 + r)^{-2 lambda} r^{d-1}`; with
    /// `u = r / (1 + r)` this is exactly `Beta(d, 2 lambda - d)`.
    pub fn sample(dim: usize, lambda: f64, count: usize, seed: u64) -> Result<Self> {
        let d = dim as f64;
        if dim == 0 || count == 0 {
            return Err(Error::Input("need d >= 1 and at least one frequency".into()));
        }
        if !(2.0 * lambda > d) {
            return Err(Error::Domain(format!(
                "weight is not integrable: need 2 lambda > d, got lambda = {lambda}, d = {dim}"
            )));
        }
        let radial = Beta::new(d, 2.0 * lambda - d).map_err(|e| Error::Numerical(e.to_string()))?;
        let sphere = 2.0 * PI.powf(0.5 * d) / gamma(0.5 * d);
        let norm = sphere * beta(d, 2.0 * lambda - d);
        let mut rng = StreamKey::new(seed, Domain::Frequencies).rng();
        let mut xi = Vec::with_capacity(count * dim);
        for _ in 0..count {
            let u: f64 = radial.sample(&mut rng);
            let r = u / (1.0 - u);
            let dir: Vec<f64> = if dim == 1 {
                vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }]
            } else {
                loop {
                    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                    if n > 0.0 {
                        break g.into_iter().map(|v| v / n).collect();
                    }
                }
            };
            xi.extend(dir.into_iter().map(|v| v * r));
        }
        Ok(Self { dim, lambda, norm, xi })
    }

    pub fn len(&self) -> usize {
        self.xi.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Empirical characteristic function `(1/n) sum_j e^{i xi . x_j}` at
    /// every frequency, as `(re, im)` pairs.
    pub fn transform(&self, points: &[f64]) -> Vec<(f64, f64)> {
        let d = self.dim;
        let n = (points.len() / d) as f64;
        self.xi
            .chunks(d)
            .map(|xi| {
                let (mut re, mut im) = (0.0, 0.0);
                for x in points.chunks(d) {
                    let phase: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                    let (s, c) = phase.sin_cos();
                    re += c;
                    im += s;
                }
                (re / n, im / n)
            })
            .collect()
    }

    /// Distance between two clouds given their transforms.
    pub fn distance(&self, a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        let mean = a
            .iter()
            .zip(b)
            .map(|(p, q)| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2))
            .sum::<f64>()
            / a.len() as f64;
        (self.norm * mean).sqrt()
    }
}

/// Monte Carlo estimate of
/// `[int (1 + |xi|)^{-2 lambda} |nuhat(xi)|^2 d xi]^{1/2}` for the signed
/// measure `nu = mu_A - mu_B` of two empirical clouds (`[N][d]`, `[M][d]`).
pub fn sobolev_distance(a: &[f64], b: &[f64], dim: usize, lambda: f64, freq_samples: usize, seed: u64) -> Result<f64> {
    if dim == 0 || a.is_empty() || b.is_empty() || a.len() % dim != 0 || b.len() % dim != 0 {
        return Err(Error::Input("clouds must be nonempty [n][d] arrays".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Input("cloud points must be finite".into()));
    }
    let freqs = FrequencySet::sample(dim, lambda, freq_samples, seed)?;
    Ok(freqs.distance(&freqs.transform(a), &freqs.transform(b)))
}

/// Per-replica `(max_k dist(mu^N_k, mubar_k))^m` over the grid indices
/// `0, stride, 2 stride, ...` and the final time.
pub fn sobolev_sup_error(
    ips: &PathEnsemble,
    flow: &MeasureFlow,
    freqs: &FrequencySet,
    stride: usize,
    m: f64,
) -> Result<ReplicaSample> {
    if ips.grid() != flow.grid() || ips.dim() != flow.dim() || ips.dim() != freqs.dim {
        return Err(Error::Input("ensemble, flow and frequencies disagree in grid or dimension".into()));
    }
    if stride == 0 {
        return Err(Error::Input("time stride must be positive".into()));
    }
    let last = ips.grid().steps();
    let mut times: Vec<usize> = (0..=last).step_by(stride).collect();
    if times.last() != Some(&last) {
        times.push(last);
    }
    let reference: Vec<Vec<(f64, f64)>> = times.iter().map(|&k| freqs.transform(flow.at(k))).collect();
    let d = ips.dim();
    let per_replica = (0..ips.replicas())
        .into_par_iter()
        .map(|r| {
            let mut cloud = vec![0.0; ips.particles() * d];
            let mut worst: f64 = 0.0;
            for (&k, refk) in times.iter().zip(&reference) {
                for p in 0..ips.particles() {
                    cloud[p * d..(p + 1) * d].copy_from_slice(ips.at(r, p, k));
                }
                worst = worst.max(freqs.distance(&freqs.transform(&cloud), refk));
            }
            worst.powf(m)
        })
        .collect();
    Ok(ReplicaSample { moment: m, per_replica })
}
