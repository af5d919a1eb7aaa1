//! Radial profiles of Gaussian-smoothed homogeneous gradients.
//!
//! For a potential `h(z) = |z|^{-s}` (or `log|z|`, the `s = 0` case) the
//! gradient of `h * N(0, delta^2 I)` has the form
//! `z * delta^{-s-2} * g(|z| / delta)` for a scalar profile `g` that depends
//! only on `(s, d)`. Writing `|z|^{-s}` as a superposition of Gaussians turns
//! `g` into a one-dimensional integral over `w` in `(0, 1)`:
//!
//! ```text
//! riesz: g(rho) = -2^{-s/2} / Gamma(s/2) * J(rho^2 / 2)
//! log:   g(rho) = J(rho^2 / 2) / 2
//! J(x)  = int_0^1 w^{s/2} (1-w)^{(d-s)/2 - 1} e^{-x w} dw
//! ```
//!
//! `J` converges for `s < d`; for `s > d` the Hadamard extension corresponds
//! to the analytic continuation in `s`, which is evaluated through Kummer's
//! function instead.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::integrate_pieces;

const LN_RHO_MIN: f64 = -6.907_755_278_982_137; // ln 1e-3
const LN_RHO_MAX: f64 = 6.907_755_278_982_137; // ln 1e3
const NODES_PER_UNIT: f64 = 128.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Potential {
    Riesz(f64),
    Log,
}

/// Tabulated profile `g` on a log-spaced grid in `rho`, with cubic Hermite
/// interpolation in `ln rho`. Outside the table the small-`rho` limit and the
/// closed-form far field are used.
#[derive(Debug)]
pub(crate) struct RadialProfile {
    potential: Potential,
    step: f64,
    /// g at the nodes
    values: Vec<f64>,
    /// d g / d ln(rho) at the nodes
    slopes: Vec<f64>,
}

impl RadialProfile {
    /// Shared table for `(potential, d)`; profiles do not depend on delta.
    pub(crate) fn shared(potential: Potential, dim: usize) -> Result<Arc<RadialProfile>> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<RadialProfile>>>> = OnceLock::new();
        let key = match potential {
            Potential::Riesz(s) => (s.to_bits(), dim),
            Potential::Log => (u64::MAX, dim),
        };
        let cache = CACHE.get_or_init(Default::default);
        if let Some(p) = cache.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let built = Arc::new(Self::build(potential, dim)?);
        cache.lock().unwrap().insert(key, built.clone());
        Ok(built)
    }

    pub(crate) fn build(potential: Potential, dim: usize) -> Result<Self> {
        let d = dim as f64;
        let nodes = ((LN_RHO_MAX - LN_RHO_MIN) * NODES_PER_UNIT).round() as usize;
        let step = (LN_RHO_MAX - LN_RHO_MIN) / nodes as f64;
        let mut values = Vec::with_capacity(nodes + 1);
        let mut slopes = Vec::with_capacity(nodes + 1);
        for k in 0..=nodes {
            let rho = (LN_RHO_MIN + k as f64 * step).exp();
            let (g, rg) = match potential {
                Potential::Riesz(s) if s < d => riesz_by_quadrature(s, d, rho),
                Potential::Riesz(s) => riesz_by_kummer(s, d, rho)?,
                Potential::Log => log_by_quadrature(d, rho),
            };
            if !(g.is_finite() && rg.is_finite()) {
                return Err(Error::Numerical(format!(
                    "radial profile not finite at rho = {rho} for {potential:?}, d = {dim}"
                )));
            }
            values.push(g);
            slopes.push(rg);
        }
        Ok(Self {
            potential,
            step,
            values,
            slopes,
        })
    }

    #[inline]
    pub(crate) fn far_field(&self, rho: f64) -> f64 {
        match self.potential {
            Potential::Riesz(s) => -s * rho.powf(-s - 2.0),
            Potential::Log => 1.0 / (rho * rho),
        }
    }

    /// Profile value at `rho >= 0`.
    #[inline]
    pub(crate) fn eval(&self, rho: f64) -> f64 {
        let u = rho.ln();
        if u <= LN_RHO_MIN {
            return self.values[0];
        }
        if u >= LN_RHO_MAX {
            return self.far_field(rho);
        }
        let pos = (u - LN_RHO_MIN) / self.step;
        let k = (pos as usize).min(self.values.len() - 2);
        let t = pos - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.step, self.slopes[k + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// `sup_rho max(|g|, |g + rho g'|)`: the spectral-norm bound of the
    /// Jacobian of `z -> z g(|z|)`, at unit width.
    pub(crate) fn jacobian_bound(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.slopes)
            .fold(0.0_f64, |a, (g, rg)| a.max(g.abs()).max((g + rg).abs()))
    }
}

/// `int_0^1 w^a (1-w)^{beta-1} e^{-x w} dw` together with its `x` derivative.
fn beta_laplace(a: f64, beta: f64, x: f64) -> (f64, f64) {
    let tol = 1e-14;
    // for large x the mass sits in w < O(1/x); split there so the first
    // Kronrod pass cannot miss it
    let w_cut = (40.0 / x.max(1e-300)).min(1.0);
    if beta >= 1.0 {
        let brk = [0.0, w_cut, 1.0];
        let f = |w: f64| w.powf(a) * (1.0 - w).powf(beta - 1.0) * (-x * w).exp();
        let j = integrate_pieces(f, &brk, tol);
        let df = |w: f64| -w.powf(a + 1.0) * (1.0 - w).powf(beta - 1.0) * (-x * w).exp();
        let dj = integrate_pieces(df, &brk, tol);
        (j, dj)
    } else {
        // (1-w) = t^{1/beta} removes the endpoint singularity at w = 1
        let inv = 1.0 / beta;
        let brk = [0.0, (1.0 - w_cut).powf(beta), 1.0];
        let wt = move |t: f64| 1.0 - t.powf(inv);
        let f = |t: f64| {
            let w = wt(t);
            inv * w.powf(a) * (-x * w).exp()
        };
        let df = |t: f64| {
            let w = wt(t);
            -inv * w.powf(a + 1.0) * (-x * w).exp()
        };
        (integrate_pieces(f, &brk, tol), integrate_pieces(df, &brk, tol))
    }
}

/// `(g(rho), rho g'(rho))` for `|z|^{-s}`, `0 < s < d`.
fn riesz_by_quadrature(s: f64, d: f64, rho: f64) -> (f64, f64) {
    let c = -(2f64.powf(-0.5 * s)) / gamma(0.5 * s);
    let x = 0.5 * rho * rho;
    let (j, dj) = beta_laplace(0.5 * s, 0.5 * (d - s), x);
    (c * j, c * dj * 2.0 * x)
}

fn log_by_quadrature(d: f64, rho: f64) -> (f64, f64) {
    let x = 0.5 * rho * rho;
    let (j, dj) = beta_laplace(0.0, 0.5 * d, x);
    (0.5 * j, 0.5 * dj * 2.0 * x)
}

/// `(g(rho), rho g'(rho))` for `|z|^{-s}` via
/// `g = -s 2^{-s/2-1} Gamma((d-s)/2) / Gamma(d/2+1) * M(s/2+1, d/2+1, -rho^2/2)`.
/// Valid for every `s > 0` with `(d - s)/2` not a nonpositive integer.
pub(crate) fn riesz_by_kummer(s: f64, d: f64, rho: f64) -> Result<(f64, f64)> {
    let a = 0.5 * s + 1.0;
    let b = 0.5 * d + 1.0;
    let pref = -s * 2f64.powf(-0.5 * s - 1.0) * gamma(0.5 * (d - s)) / gamma(b);
    let x = 0.5 * rho * rho;
    let m = kummer_neg(a, b, x)?;
    // d/dx M(a, b, -x) = -(a/b) M(a+1, b+1, -x)
    let dm = -(a / b) * kummer_neg(a + 1.0, b + 1.0, x)?;
    Ok((pref * m, pref * dm * 2.0 * x))
}

const KUMMER_SWITCH: f64 = 60.0;

/// Confluent hypergeometric `M(a, b, -x)` for `x >= 0`, `b > 0`, with
/// `b - a` not a nonpositive integer.
pub(crate) fn kummer_neg(a: f64, b: f64, x: f64) -> Result<f64> {
    if x <= KUMMER_SWITCH {
        // Kummer transformation: M(a, b, -x) = e^{-x} M(b - a, b, x)
        let c = b - a;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..2000 {
            let kf = k as f64;
            term *= (c + kf) / (b + kf) * x / (kf + 1.0);
            sum += term;
            if kf > x && term.abs() < 1e-17 * sum.abs() {
                return Ok((-x).exp() * sum);
            }
        }
        Err(Error::Numerical(format!("Kummer series did not converge at x = {x}")))
    } else {
        // algebraic asymptotic branch; the exponentially small companion is
        // O(e^{-x} x^{2a-b}) relative and negligible past the switch
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let c = a - b + 1.0;
        for k in 0..200 {
            let kf = k as f64;
            let next = term * (a + kf) * (c + kf) / ((kf + 1.0) * x);
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        Ok(gamma(b) / gamma(b - a) * x.powf(-a) * sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_profile_matches_closed_form_in_2d() {
        let p = RadialProfile::build(Potential::Log, 2).unwrap();
        for rho in [1e-4f64, 0.01, 0.3, 1.0, 2.5, 7.0, 40.0, 900.0, 5e3] {
            let exact = if rho < 1e-3 {
                0.5
            } else {
                -(-0.5 * rho * rho).exp_m1() / (rho * rho)
            };
            let got = p.eval(rho);
            let tol = if rho < 1e-3 { 1e-6 } else { 1e-9 };
            assert!(((got - exact) / exact).abs() < tol, "rho={rho} got={got} exact={exact}");
        }
    }

    #[test]
    fn coulomb_far_field_is_exact_in_3d() {
        // s = d - 2: the potential is harmonic, so smoothing only alters the
        // core and the field is Newtonian up to e^{-rho^2/2} terms
        let p = RadialProfile::build(Potential::Riesz(1.0), 3).unwrap();
        for rho in [8.0f64, 12.0, 50.0] {
            let far = -rho.powi(-3);
            assert!(((p.eval(rho) - far) / far).abs() < 1e-9);
        }
    }

    #[test]
    fn quadrature_and_kummer_agree() {
        for (s, d) in [(0.5, 1.0), (1.0, 2.0), (0.3, 2.0), (1.0, 3.0), (2.5, 3.0)] {
            for rho in [0.01, 0.5, 1.0, 3.0, 9.0, 20.0] {
                let (g1, r1) = riesz_by_quadrature(s, d, rho);
                let (g2, r2) = riesz_by_kummer(s, d, rho).unwrap();
                assert!(((g1 - g2) / g2).abs() < 1e-9, "s={s} d={d} rho={rho}: {g1} vs {g2}");
                let scale = g2.abs().max(r2.abs());
                assert!((r1 - r2).abs() < 1e-8 * scale, "slope s={s} d={d} rho={rho}");
            }
        }
    }

    #[test]
    fn kummer_branches_overlap() {
        // series against the asymptotic expansion just above the switch
        for (a, b) in [(1.25, 1.5), (1.6, 2.4), (2.75, 2.5), (3.5, 2.0)] {
            let x = KUMMER_SWITCH;
            let series = kummer_neg(a, b, x).unwrap();
            let asym = kummer_neg(a, b, x + 1e-9).unwrap();
            assert!(((series - asym) / series).abs() < 1e-9, "a={a} b={b}: {series} vs {asym}");
        }
    }

    #[test]
    fn nonintegrable_profile_has_riesz_far_field() {
        // s = 2.5 > d = 2
        let p = RadialProfile::build(Potential::Riesz(2.5), 2).unwrap();
        let s = 2.5;
        for rho in [30.0, 100.0] {
            let far = -s * f64::powf(rho, -s - 2.0);
            assert!(((p.eval(rho) - far) / far).abs() < 0.01);
        }
        assert!(p.eval(0.0).is_finite());
    }

    #[test]
    fn interpolation_tracks_direct_evaluation() {
        let p = RadialProfile::build(Potential::Riesz(0.7), 2).unwrap();
        for rho in [0.0123, 0.456, 1.789, 13.37, 222.2] {
            let (g, _) = riesz_by_quadrature(0.7, 2.0, rho);
            assert!(((p.eval(rho) - g) / g).abs() < 1e-9, "rho={rho}");
        }
    }
}
