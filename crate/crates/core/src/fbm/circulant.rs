use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::fgn_autocov;

/// Davies-Harte embedding of unit-spacing fGn of length `n` into a circulant
/// of size `2n`. Only constructed when every eigenvalue is nonnegative, in
/// which case the real part of the synthesized vector has exactly the fGn law.
pub struct CirculantEmbedding {
    n: usize,
    /// sqrt(lambda_k / 2n)
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding").field("n", &self.n).finish()
    }
}

impl CirculantEmbedding {
    pub fn new(n: usize, hurst: f64) -> Option<Self> {
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = if j <= n { j } else { m - j };
                Complex::new(fgn_autocov(lag, hurst), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().fold(0.0_f64, |a, c| a.max(c.re.abs()));
        if row.iter().any(|c| c.re < -1e-10 * max) {
            return None;
        }
        let weights = row
            .iter()
            .map(|c| (c.re.max(0.0) / m as f64).sqrt())
            .collect();
        Some(Self { n, weights, fft })
    }

    pub fn eigen_weights(&self) -> &[f64] {
        &self.weights
    }

    /// One unit-spacing fGn vector of length `n`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .weights
            .iter()
            .map(|w| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex::new(w * re, w * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.iter().take(self.n).map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, StreamKey};

    #[test]
    fn embedding_is_nonnegative_for_fgn() {
        for h in [0.1, 0.25, 0.5, 0.75, 0.9] {
            assert!(CirculantEmbedding::new(64, h).is_some(), "H={h}");
        }
    }

    #[test]
    fn empirical_lag_covariance_matches() {
        let h = 0.75;
        let n = 16;
        let emb = CirculantEmbedding::new(n, h).unwrap();
        let mut rng = StreamKey::new(3, Domain::Test).rng();
        let reps = 40_000;
        let mut c0 = 0.0;
        let mut c1 = 0.0;
        for _ in 0..reps {
            let x = emb.sample(&mut rng);
            c0 += x[3] * x[3];
            c1 += x[3] * x[4];
        }
        c0 /= reps as f64;
        c1 /= reps as f64;
        // SE of a product moment of unit Gaussians is at most ~sqrt(2/reps)
        let tol = 5.0 * (2.0 / reps as f64).sqrt();
        assert!((c0 - fgn_autocov(0, h)).abs() < tol, "{c0}");
        assert!((c1 - fgn_autocov(1, h)).abs() < tol, "{c1}");
    }
}
