use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::HurstParam;

/// `1/q' = 1 - 1/q`.
#[inline]
fn inv_conjugate(q: f64) -> f64 {
    1.0 - 1.0 / q
}

/// Subcritical admissibility of `(alpha, q, H)`.
///
/// `ok` holds iff `alpha < 1`, `1 < q <= 2` and `alpha > 1 - 1/(H q')`;
/// `margin` is `alpha - (1 - 1/(H q'))`, nonpositive whenever the strict
/// inequality fails.
pub fn admissible(alpha: f64, q: f64, hurst: HurstParam) -> (bool, f64) {
    let h = hurst.value();
    let margin = alpha - (1.0 - inv_conjugate(q) / h);
    let ok = alpha < 1.0 && q > 1.0 && q <= 2.0 && margin > 0.0;
    (ok, margin)
}

/// Supremal admissible Hurst index for an autonomous kernel of regularity
/// `alpha`, i.e. `1 / (2 (1 - alpha))`.
pub fn autonomous_hurst_bound(alpha: f64) -> Result<f64> {
    if !(alpha < 1.0) {
        return Err(Error::Domain(format!("need alpha < 1, got {alpha}")));
    }
    Ok(1.0 / (2.0 * (1.0 - alpha)))
}

/// Supremal admissible H at time integrability `q`: `(1 - 1/q) / (1 - alpha)`.
/// `None` when no Hurst index bound applies (alpha >= 1, Lipschitz regime).
pub fn hurst_threshold(alpha: f64, q: f64) -> Option<f64> {
    (alpha < 1.0).then(|| inv_conjugate(q) / (1.0 - alpha))
}

/// The triple `(alpha, q, H)` with its derived exponents
/// `kappa = 1/((alpha-1) H + 1)` and `epsilon = (alpha-1) H + 1/q'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityBudget {
    pub alpha: f64,
    pub q: f64,
    pub hurst: HurstParam,
}

impl RegularityBudget {
    pub fn new(alpha: f64, q: f64, hurst: HurstParam) -> Self {
        Self { alpha, q, hurst }
    }

    pub fn is_admissible(&self) -> bool {
        admissible(self.alpha, self.q, self.hurst).0
    }

    pub fn margin(&self) -> f64 {
        admissible(self.alpha, self.q, self.hurst).1
    }

    pub fn kappa(&self) -> f64 {
        1.0 / ((self.alpha - 1.0) * self.hurst.value() + 1.0)
    }

    pub fn epsilon(&self) -> f64 {
        (self.alpha - 1.0) * self.hurst.value() + inv_conjugate(self.q)
    }

    /// Hölder exponent `alpha H + 1/q'` of the remainder increments.
    pub fn remainder_exponent(&self) -> f64 {
        self.alpha * self.hurst.value() + inv_conjugate(self.q)
    }
}
