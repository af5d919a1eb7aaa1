use std::fmt;

use serde::Serialize;

use super::budget::{admissible, hurst_threshold, RegularityBudget};
use super::KernelSpec;
use crate::fbm::HurstParam;

/// Admissibility summary of a kernel at time integrability `q` and Hurst
/// index `H`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub family: String,
    pub dim: usize,
    pub delta: f64,
    pub nominal_alpha: f64,
    pub q: f64,
    pub hurst: f64,
    /// `None` in the Lipschitz regime (no restriction on H)
    pub hurst_threshold: Option<f64>,
    pub threshold: String,
    pub admissible: bool,
    pub margin: Option<f64>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub verdict: String,
}

/// Short decimal rendering: 0.25 stays "0.25", 1/6 becomes "0.166667".
fn short(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub fn kernel_report(spec: &KernelSpec, q: f64, hurst: HurstParam) -> KernelReport {
    let alpha = spec.nominal_alpha();
    let h = hurst.value();
    let lipschitz = alpha >= 1.0;
    let threshold_val = hurst_threshold(alpha, q);
    let q_ok = q > 1.0 && q <= 2.0;

    let (ok, margin, kappa, epsilon) = if lipschitz {
        (q_ok, None, None, None)
    } else {
        let (ok, m) = admissible(alpha, q, hurst);
        let b = RegularityBudget::new(alpha, q, hurst);
        (ok, Some(m), ok.then(|| b.kappa()), ok.then(|| b.epsilon()))
    };

    let threshold = match threshold_val {
        Some(t) => format!("H < {}", short(t)),
        None => "any H (Lipschitz regime)".to_string(),
    };
    let verdict = if !q_ok {
        format!("inadmissible: q = {} outside (1, 2]", short(q))
    } else if ok {
        format!("admissible at H = {}", short(h))
    } else {
        format!("inadmissible at H = {}: need {threshold}", short(h))
    };

    KernelReport {
        family: spec.family.name().to_string(),
        dim: spec.dim,
        delta: spec.delta,
        nominal_alpha: alpha,
        q,
        hurst: h,
        hurst_threshold: threshold_val,
        threshold,
        admissible: ok,
        margin,
        kappa,
        epsilon,
        verdict,
    }
}

impl fmt::Display for KernelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map(short).unwrap_or_else(|| "-".into());
        let rows = [
            ("family", self.family.clone()),
            ("dimension", self.dim.to_string()),
            ("delta", short(self.delta)),
            ("nominal alpha", short(self.nominal_alpha)),
            ("q", short(self.q)),
            ("H", short(self.hurst)),
            ("threshold", self.threshold.clone()),
            ("margin", opt(self.margin)),
            ("kappa", opt(self.kappa)),
            ("epsilon", opt(self.epsilon)),
            ("verdict", self.verdict.clone()),
        ];
        for (k, v) in rows {
            writeln!(f, "{k:<14} {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{KernelFamily, MatrixSpec};
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn coulomb_plane_threshold() {
        let spec = KernelSpec::new(KernelFamily::LogGradient { matrix: MatrixSpec::Identity }, 0.1, 2);
        let r = kernel_report(&spec, 2.0, h(0.2));
        assert_eq!(r.threshold, "H < 0.25");
        assert!(r.admissible);
        assert!(!kernel_report(&spec, 2.0, h(0.3)).admissible);
        assert!(r.to_string().contains("H < 0.25"));
    }

    #[test]
    fn dirac_line_threshold() {
        let spec = KernelSpec::new(KernelFamily::DiracApprox { v: vec![1.0] }, 0.1, 1);
        let r = kernel_report(&spec, 2.0, h(0.1));
        assert_eq!(r.hurst_threshold, Some(0.25));
        assert_eq!(r.threshold, "H < 0.25");
    }

    #[test]
    fn smooth_kernels_admit_any_hurst() {
        let spec = KernelSpec::new(KernelFamily::TanhDifference, 0.0, 1);
        for hv in [0.1, 0.7, 1.4] {
            let r = kernel_report(&spec, 2.0, h(hv));
            assert!(r.admissible);
            assert_eq!(r.hurst_threshold, None);
        }
        assert!(!kernel_report(&spec, 3.0, h(0.5)).admissible);
        let json = serde_json::to_value(kernel_report(&spec, 2.0, h(0.5))).unwrap();
        assert_eq!(json["admissible"], true);
    }

    #[test]
    fn short_numbers() {
        assert_eq!(short(0.25), "0.25");
        assert_eq!(short(2.0), "2");
        assert_eq!(short(1.0 / 6.0), "0.166667");
    }
}
