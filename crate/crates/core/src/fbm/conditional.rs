use nalgebra::{DMatrix, DVector};

use super::{cov_unchecked, HurstParam};
use crate::error::{Error, Result};
use crate::linalg::cholesky_jittered;

/// Gaussian conditional mean and variance of `W_t` given observations
/// `(time, value)` of the same coordinate, by regression on the exact grid
/// covariance. Observations at time 0 carry no information (W_0 = 0) and are
/// dropped.
pub fn conditional_law(observed: &[(f64, f64)], hurst: HurstParam, t: f64) -> Result<(f64, f64)> {
    let h = hurst.value();
    if h >= 1.0 {
        return Err(Error::UnsupportedParameter(format!(
            "conditioning needs H < 1, got {h}"
        )));
    }
    if observed.is_empty() {
        return Err(Error::Input("conditioning set must be nonempty".into()));
    }
    if observed.iter().any(|(s, v)| !(s.is_finite() && v.is_finite()) || *s < 0.0) {
        return Err(Error::Input("observations must be finite with nonnegative times".into()));
    }
    let latest = observed.iter().fold(0.0_f64, |a, (s, _)| a.max(*s));
    if !(t.is_finite() && t >= latest) {
        return Err(Error::Domain(format!(
            "query time {t} precedes the latest observation {latest}"
        )));
    }

    let obs: Vec<(f64, f64)> = observed.iter().copied().filter(|(s, _)| *s > 0.0).collect();
    let prior = t.powf(2.0 * h);
    if obs.is_empty() {
        return Ok((0.0, prior));
    }

    let k = obs.len();
    let sigma = DMatrix::from_fn(k, k, |i, j| cov_unchecked(obs[i].0, obs[j].0, h));
    let cross = DVector::from_fn(k, |i, _| cov_unchecked(obs[i].0, t, h));
    let values = DVector::from_fn(k, |i, _| obs[i].1);

    let l = cholesky_jittered(&sigma, "observation covariance")?;
    // Sigma^{-1} c via two triangular solves
    let y = l
        .solve_lower_triangular(&cross)
        .ok_or_else(|| Error::Numerical("singular observation covariance".into()))?;
    let beta = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numerical("singular observation covariance".into()))?;

    let mean = beta.dot(&values);
    let var = (prior - y.norm_squared()).max(0.0);
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn conditioning_on_query_point_leaves_no_variance() {
        let (m, v) = conditional_law(&[(0.6, 1.3)], h(0.3), 0.6).unwrap();
        assert!(v < 1e-10, "{v}");
        assert!((m - 1.3).abs() < 1e-8);
    }

    #[test]
    fn brownian_markov_property() {
        let (s, t) = (0.4, 0.9);
        let (m, v) = conditional_law(&[(s, -0.7)], h(0.5), t).unwrap();
        assert!((v - (t - s)).abs() < 1e-14);
        assert!((m + 0.7).abs() < 1e-14);
        // extra past points do not matter for Brownian motion
        let (m2, v2) = conditional_law(&[(0.1, 0.2), (0.25, 0.0), (s, -0.7)], h(0.5), t).unwrap();
        assert!((v2 - (t - s)).abs() < 1e-12);
        assert!((m2 + 0.7).abs() < 1e-12);
    }

    #[test]
    fn origin_carries_no_information() {
        let (m, v) = conditional_law(&[(0.0, 0.0)], h(0.3), 0.8).unwrap();
        assert_eq!(m, 0.0);
        assert!((v - 0.8f64.powf(0.6)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(matches!(conditional_law(&[], h(0.3), 1.0), Err(Error::Input(_))));
        assert!(matches!(conditional_law(&[(0.5, 0.0)], h(0.3), 0.2), Err(Error::Domain(_))));
        assert!(conditional_law(&[(0.5, 0.0)], h(1.3), 0.7).is_err());
    }

    #[test]
    fn sandwich_and_monotone_refinement() {
        for hv in [0.2, 0.5, 0.8] {
            let (s, t) = (0.5, 0.5 + 1.0 / 16.0);
            let mut prev = f64::INFINITY;
            for n in [2usize, 4, 8, 16, 32] {
                let obs: Vec<(f64, f64)> = (0..=n).map(|k| (s * k as f64 / n as f64, 0.0)).collect();
                let (_, v) = conditional_law(&obs, h(hv), t).unwrap();
                assert!(v > 0.0);
                assert!(v <= (t - s).powf(2.0 * hv) * (1.0 + 1e-9), "H={hv} n={n}");
                assert!(v <= prev * (1.0 + 1e-9), "refinement increased variance");
                prev = v;
            }
        }
    }
}
