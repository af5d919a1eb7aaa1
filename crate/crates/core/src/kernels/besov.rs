use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values on the uniform grid `{-L + i h : 0 <= i < n}^d`, stored row-major
/// (last coordinate fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    dim: usize,
    half_width: f64,
    nodes: usize,
    values: Vec<f64>,
}

impl SampledField {
    pub fn new(dim: usize, half_width: f64, nodes: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || nodes < 2 {
            return Err(Error::Input("field needs d >= 1 and at least 2 nodes per axis".into()));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Input(format!("box half-width must be positive, got {half_width}")));
        }
        let expected = nodes
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::Input("field is too large".into()))?;
        if values.len() != expected {
            return Err(Error::Input(format!(
                "field has {} values, expected {nodes}^{dim} = {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("field values must be finite".into()));
        }
        Ok(Self { dim, half_width, nodes, values })
    }

    /// Sample `f` at every grid node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(dim: usize, half_width: f64, nodes: usize, f: F) -> Result<Self> {
        let h = 2.0 * half_width / (nodes.max(2) - 1) as f64;
        let total = nodes.checked_pow(dim as u32).unwrap_or(usize::MAX);
        let mut x = vec![0.0; dim];
        let mut values = Vec::with_capacity(total.min(1 << 28));
        for flat in 0..total {
            let mut rest = flat;
            for c in (0..dim).rev() {
                x[c] = -half_width + (rest % nodes) as f64 * h;
                rest /= nodes;
            }
            values.push(f(&x));
        }
        Self::new(dim, half_width, nodes, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete heat semigroup at time `t`: separable Gaussian convolution
    /// with variance `t`, truncated at `8 sqrt(t)`, replicate boundary.
    pub fn heat(&self, t: f64) -> Vec<f64> {
        let h = self.spacing();
        let reach = ((8.0 * t.sqrt() / h).ceil() as usize).max(1);
        let mut w: Vec<f64> = (0..=reach)
            .map(|k| (-(k as f64 * h).powi(2) / (2.0 * t)).exp())
            .collect();
        let norm = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        w.iter_mut().for_each(|v| *v /= norm);

        let n = self.nodes;
        let mut cur = self.values.clone();
        let mut line = vec![0.0; n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for start in 0..cur.len() {
                // first node of each line along `axis`
                if (start % block) / stride != 0 {
                    continue;
                }
                for (i, l) in line.iter_mut().enumerate() {
                    *l = cur[start + i * stride];
                }
                for i in 0..n {
                    let mut acc = w[0] * line[i];
                    for (k, wk) in w.iter().enumerate().skip(1) {
                        let lo = line[i.saturating_sub(k)];
                        let hi = line[(i + k).min(n - 1)];
                        acc += wk * (lo + hi);
                    }
                    cur[start + i * stride] = acc;
                }
            }
        }
        cur
    }
}

/// Thermic Besov norm `sup_t t^{-alpha/2} sup |G_t f|` over the dyadic times
/// `t_max 2^{-k} >= t_min`. Nondecreasing in `alpha`, as `t <= 1`.
pub fn besov_thermic_norm(field: &SampledField, alpha: f64, t_min: f64, t_max: f64) -> Result<f64> {
    if !(alpha <= 0.0) {
        return Err(Error::Domain(format!("thermic norm needs alpha <= 0, got {alpha}")));
    }
    if !(t_min > 0.0 && t_min < t_max && t_max <= 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < t_min < t_max <= 1, got [{t_min}, {t_max}]"
        )));
    }
    let h = field.spacing();
    if h * h > t_min / 4.0 {
        return Err(Error::Resolution(format!(
            "grid spacing {h} does not resolve t_min = {t_min} (need h^2 <= t_min/4)"
        )));
    }
    let mut best: f64 = 0.0;
    let mut t = t_max;
    while t >= t_min {
        let sup = field.heat(t).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        best = best.max(t.powf(-alpha / 2.0) * sup);
        t *= 0.5;
    }
    Ok(best)
}
