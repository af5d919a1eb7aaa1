//! Interaction kernels `b_t(x, y)`: smooth built-ins, additive
//! decompositions `f(x) + g(y) + h(x - y)`, and Gaussian-mollified singular
//! families (Riesz and logarithmic gradients, Dirac approximations).

pub mod besov;
pub mod budget;
mod radial;
mod report;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use radial::{Potential, RadialProfile};

pub use besov::{besov_thermic_norm, SampledField};
pub use budget::{admissible, autonomous_hurst_bound, hurst_threshold, RegularityBudget};
pub use report::{kernel_report, KernelReport};

/// One term of an additive kernel, acting coordinatewise on its argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    Zero,
    Constant { value: Vec<f64> },
    /// `coef * z`
    Linear { coef: f64 },
    /// `tanh(z)`
    Tanh,
    /// `sin(z)`
    Sin,
}

impl Component {
    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Component::Zero => {}
            Component::Constant { value } => out.iter_mut().zip(value).for_each(|(o, v)| *o += v),
            Component::Linear { coef } => out.iter_mut().zip(z).for_each(|(o, v)| *o += coef * v),
            Component::Tanh => out.iter_mut().zip(z).for_each(|(o, v)| *o += v.tanh()),
            Component::Sin => out.iter_mut().zip(z).for_each(|(o, v)| *o += v.sin()),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            Component::Zero | Component::Constant { .. } => 0.0,
            Component::Linear { coef } => coef.abs(),
            Component::Tanh | Component::Sin => 1.0,
        }
    }

    fn is_odd(&self) -> bool {
        !matches!(self, Component::Constant { .. })
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Component::Constant { value } if value.len() != dim => Err(Error::Input(format!(
                "constant component has {} entries, kernel dimension is {dim}",
                value.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Orthogonal matrix applied to the gradient of a radial potential.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSpec {
    #[default]
    Identity,
    NegIdentity,
    /// Rotation by +90 degrees in the plane (`d = 2` only).
    Symplectic,
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn materialize(&self, dim: usize) -> Result<Vec<f64>> {
        let mut m = vec![0.0; dim * dim];
        match self {
            MatrixSpec::Identity | MatrixSpec::NegIdentity => {
                let sign = if *self == MatrixSpec::Identity { 1.0 } else { -1.0 };
                for i in 0..dim {
                    m[i * dim + i] = sign;
                }
            }
            MatrixSpec::Symplectic => {
                if dim != 2 {
                    return Err(Error::Input("symplectic matrix needs d = 2".into()));
                }
                m = vec![0.0, -1.0, 1.0, 0.0];
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Input(format!("matrix must be {dim}x{dim}")));
                }
                for (i, r) in rows.iter().enumerate() {
                    m[i * dim..(i + 1) * dim].copy_from_slice(r);
                }
            }
        }
        // A A^T = I
        for i in 0..dim {
            for j in 0..dim {
                let dot: f64 = (0..dim).map(|k| m[i * dim + k] * m[j * dim + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-9 {
                    return Err(Error::Input("interaction matrix must be orthogonal".into()));
                }
            }
        }
        Ok(m)
    }
}

/// Interaction family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelFamily {
    /// `b = 0`
    Zero,
    /// `b = c`
    Constant { value: Vec<f64> },
    /// `b(x, y) = tanh(y - x)` coordinatewise
    TanhDifference,
    /// `b(x, y) = f(x) + g(y) + h(x - y)`
    Additive {
        f: Component,
        g: Component,
        h: Component,
    },
    /// `b(x, y) = A grad |.|^{-s} (x - y)`
    RieszGradient {
        s: f64,
        #[serde(default)]
        matrix: MatrixSpec,
    },
    /// `b(x, y) = A grad log|.| (x - y)`
    LogGradient {
        #[serde(default)]
        matrix: MatrixSpec,
    },
    /// `b(x, y) = v delta_0(x - y)`
    DiracApprox { v: Vec<f64> },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Zero => "zero",
            KernelFamily::Constant { .. } => "constant",
            KernelFamily::TanhDifference => "tanh_difference",
            KernelFamily::Additive { .. } => "additive",
            KernelFamily::RieszGradient { .. } => "riesz_gradient",
            KernelFamily::LogGradient { .. } => "log_gradient",
            KernelFamily::DiracApprox { .. } => "dirac_approx",
        }
    }

    /// Smooth built-ins (zero, constant, tanh difference).
    pub fn is_smooth_builtin(&self) -> bool {
        matches!(
            self,
            KernelFamily::Zero | KernelFamily::Constant { .. } | KernelFamily::TanhDifference
        )
    }
}

/// Time modulation `m(t) b(x, y)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulation {
    #[default]
    Autonomous,
    /// `m(t) = t^{-gamma}`, in `L^q` for every `q < 1/gamma`.
    Power { gamma: f64 },
}

impl Modulation {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Modulation::Autonomous => 1.0,
            Modulation::Power { gamma } => t.powf(-gamma),
        }
    }

    /// Average of `m` over `[t0, t1]`; finite even where `m` is singular.
    pub fn step_average(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Modulation::Autonomous => 1.0,
            Modulation::Power { gamma } => {
                let e = 1.0 - gamma;
                (t1.powf(e) - t0.powf(e)) / (e * (t1 - t0))
            }
        }
    }

    /// Supremal `q` with `m` in `L^q`; `None` for bounded modulations.
    pub fn integrability(&self) -> Option<f64> {
        match self {
            Modulation::Autonomous => None,
            Modulation::Power { gamma } if *gamma > 0.0 => Some(1.0 / gamma),
            Modulation::Power { .. } => None,
        }
    }
}

/// Serializable description of a kernel: family, mollification width,
/// dimension and time modulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default)]
    pub delta: f64,
    /// 0 in a config file means "inherit the simulation dimension"
    #[serde(default)]
    pub dim: usize,
    #[serde(default)]
    pub modulation: Modulation,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, delta: f64, dim: usize) -> Self {
        Self {
            family,
            delta,
            dim,
            modulation: Modulation::Autonomous,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            ..self.clone()
        }
    }

    /// Nominal Besov regularity of the unmollified kernel. Smooth kernels
    /// report 1 (Lipschitz regime).
    pub fn nominal_alpha(&self) -> f64 {
        match &self.family {
            KernelFamily::RieszGradient { s, .. } => -s - 1.0,
            KernelFamily::LogGradient { .. } => -1.0,
            KernelFamily::DiracApprox { .. } => -(self.dim as f64),
            _ => 1.0,
        }
    }

    /// `b(x, y) = h(x - y)` with `h` odd.
    pub fn is_odd_convolution(&self) -> bool {
        match &self.family {
            KernelFamily::Zero
            | KernelFamily::TanhDifference
            | KernelFamily::RieszGradient { .. }
            | KernelFamily::LogGradient { .. } => true,
            KernelFamily::Additive { f, g, h } => {
                *f == Component::Zero && *g == Component::Zero && h.is_odd()
            }
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Input("kernel dimension must be positive".into()));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Input(format!("delta must be nonnegative, got {}", self.delta)));
        }
        if self.nominal_alpha() <= 0.0 && self.delta <= 0.0 {
            return Err(Error::Input(format!(
                "{} kernel is singular and needs delta > 0",
                self.family.name()
            )));
        }
        match &self.family {
            KernelFamily::Constant { value } | KernelFamily::DiracApprox { v: value } => {
                if value.len() != d {
                    return Err(Error::Input(format!(
                        "vector has {} entries, kernel dimension is {d}",
                        value.len()
                    )));
                }
            }
            KernelFamily::Additive { f, g, h } => {
                f.check_dim(d)?;
                g.check_dim(d)?;
                h.check_dim(d)?;
            }
            KernelFamily::RieszGradient { s, .. } => {
                let df = d as f64;
                if !(s.is_finite() && *s > 0.0) {
                    return Err(Error::Domain(format!("Riesz exponent must be positive, got {s}")));
                }
                if *s >= df && (s - s.round()).abs() < 1e-9 {
                    return Err(Error::Domain(format!(
                        "non-integrable Riesz exponent must be non-integer, got {s}"
                    )));
                }
            }
            _ => {}
        }
        if let Modulation::Power { gamma } = self.modulation {
            if !(0.0..1.0).contains(&gamma) {
                return Err(Error::Domain(format!("modulation exponent must lie in [0,1), got {gamma}")));
            }
        }
        Ok(())
    }

    /// Validate and precompute whatever evaluation needs.
    pub fn build(&self) -> Result<Kernel> {
        self.validate()?;
        let (profile, matrix) = match &self.family {
            KernelFamily::RieszGradient { s, matrix } => (
                Some(RadialProfile::shared(Potential::Riesz(*s), self.dim)?),
                Some(matrix.materialize(self.dim)?),
            ),
            KernelFamily::LogGradient { matrix } => (
                Some(RadialProfile::shared(Potential::Log, self.dim)?),
                Some(matrix.materialize(self.dim)?),
            ),
            _ => (None, None),
        };
        let profile_scale = match &self.family {
            KernelFamily::RieszGradient { s, .. } => self.delta.powf(-s - 2.0),
            KernelFamily::LogGradient { .. } => self.delta.powi(-2),
            KernelFamily::DiracApprox { .. } => {
                (2.0 * PI * self.delta * self.delta).powf(-0.5 * self.dim as f64)
            }
            _ => 1.0,
        };
        Ok(Kernel {
            spec: self.clone(),
            profile,
            matrix,
            profile_scale,
            inv_delta: if self.delta > 0.0 { 1.0 / self.delta } else { 0.0 },
        })
    }
}

/// A validated kernel ready for evaluation. Cheap to clone; radial tables are
/// shared.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    profile: Option<Arc<RadialProfile>>,
    matrix: Option<Vec<f64>>,
    /// delta^{-s-2} for radial families, the Gaussian normalization for Dirac
    profile_scale: f64,
    inv_delta: f64,
}

/// Points of a cloud with kernel-specific per-point data, laid out
/// `[len][dim]`.
#[derive(Debug, Clone)]
pub struct PreparedCloud {
    dim: usize,
    points: Vec<f64>,
    /// `exp(2 y)` for the tanh kernel, NaN where it would overflow
    aux: Vec<f64>,
    /// First coordinates are nondecreasing
    sorted: bool,
}

impl PreparedCloud {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, m: usize) -> &[f64] {
        &self.points[m * self.dim..(m + 1) * self.dim]
    }

    /// First index whose first coordinate is not below `v` (`strict`:
    /// not at or below `v`). Needs a sorted cloud.
    fn lower_bound(&self, v: f64, strict: bool) -> usize {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            let y = self.points[mid * self.dim];
            if y < v || (strict && y == v) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Gaussian terms beyond this many widths (below 3e-18 of the peak) are
/// dropped when the cloud is sorted.
const DIRAC_REACH: f64 = 9.0;

const TANH_EXP_LIMIT: f64 = 300.0;

#[inline]
fn exp2x(v: f64) -> f64 {
    if v.abs() <= TANH_EXP_LIMIT {
        (2.0 * v).exp()
    } else {
        f64::NAN
    }
}

impl Kernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// The `y`-independent part of `b(x, y)` (constants and `f(x)`), added
    /// into `out`.
    #[inline]
    pub fn add_local(&self, x: &[f64], out: &mut [f64]) {
        match &self.spec.family {
            KernelFamily::Constant { value } => {
                out.iter_mut().zip(value).for_each(|(o, v)| *o += v)
            }
            KernelFamily::Additive { f, .. } => f.eval_into(x, out),
            _ => {}
        }
    }

    /// False when `b(x, y)` does not depend on `y`.
    pub fn has_interaction(&self) -> bool {
        match &self.spec.family {
            KernelFamily::Zero | KernelFamily::Constant { .. } => false,
            KernelFamily::Additive { g, h, .. } => {
                !(*g == Component::Zero && *h == Component::Zero)
            }
            _ => true,
        }
    }

    /// `b(x, y)` minus its local part, added into `out`.
    #[inline]
    pub fn add_interaction(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.spec.dim;
        match &self.spec.family {
            KernelFamily::Zero | KernelFamily::Constant { .. } => {}
            KernelFamily::TanhDifference => {
                for c in 0..d {
                    out[c] += (y[c] - x[c]).tanh();
                }
            }
            KernelFamily::Additive { g, h, .. } => {
                g.eval_into(y, out);
                if d <= 8 {
                    let mut z = [0.0; 8];
                    for c in 0..d {
                        z[c] = x[c] - y[c];
                    }
                    h.eval_into(&z[..d], out);
                } else {
                    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                    h.eval_into(&z, out);
                }
            }
            KernelFamily::RieszGradient { .. } | KernelFamily::LogGradient { .. } => {
                self.add_radial(x, y, out)
            }
            KernelFamily::DiracApprox { v } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                let g = self.profile_scale * (-0.5 * r2 * self.inv_delta * self.inv_delta).exp();
                out.iter_mut().zip(v).for_each(|(o, vc)| *o += vc * g);
            }
        }
    }

    #[inline]
    fn add_radial(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.spec.dim;
        let profile = self.profile.as_ref().expect("radial kernel without profile");
        let matrix = self.matrix.as_ref().expect("radial kernel without matrix");
        let mut z = [0.0; 8];
        let mut r2 = 0.0;
        for c in 0..d.min(8) {
            z[c] = x[c] - y[c];
            r2 += z[c] * z[c];
        }
        if d > 8 {
            unimplemented!("radial kernels support d <= 8");
        }
        let g = self.profile_scale * profile.eval(r2.sqrt() * self.inv_delta);
        for i in 0..d {
            let row = &matrix[i * d..(i + 1) * d];
            let az: f64 = row.iter().zip(&z[..d]).map(|(a, b)| a * b).sum();
            out[i] += g * az;
        }
    }

    /// Mollified kernel value `b^delta_t(x, y)`.
    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let d = self.spec.dim;
        if x.len() != d || y.len() != d {
            return Err(Error::Input(format!("points must have dimension {d}")));
        }
        if !(t.is_finite() && x.iter().chain(y).all(|v| v.is_finite())) {
            return Err(Error::Input("non-finite kernel argument".into()));
        }
        let mut out = vec![0.0; d];
        self.add_local(x, &mut out);
        self.add_interaction(x, y, &mut out);
        let m = self.spec.modulation.at(t);
        out.iter_mut().for_each(|o| *o *= m);
        Ok(out)
    }

    /// Estimated Lipschitz constant of the autonomous part in `(x, y)`.
    pub fn lipschitz_estimate(&self) -> f64 {
        match &self.spec.family {
            KernelFamily::Zero | KernelFamily::Constant { .. } => 0.0,
            KernelFamily::TanhDifference => 1.0,
            KernelFamily::Additive { f, g, h } => f.lipschitz() + g.lipschitz() + h.lipschitz(),
            KernelFamily::RieszGradient { .. } | KernelFamily::LogGradient { .. } => {
                let p = self.profile.as_ref().expect("radial kernel without profile");
                self.profile_scale * p.jacobian_bound()
            }
            KernelFamily::DiracApprox { v } => {
                // sup |grad exp(-r^2 / 2 delta^2)| = e^{-1/2} / delta
                let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                vn * self.profile_scale * self.inv_delta * (-0.5f64).exp()
            }
        }
    }

    /// Attach per-point data used by [`Kernel::accumulate`].
    pub fn prepare(&self, points: &[f64]) -> PreparedCloud {
        let aux = match self.spec.family {
            KernelFamily::TanhDifference => points.iter().map(|&v| exp2x(v)).collect(),
            _ => Vec::new(),
        };
        let d = self.spec.dim;
        let sorted = points.len() >= 2 * d && (d..points.len()).step_by(d).all(|i| points[i - d] <= points[i]);
        PreparedCloud {
            dim: d,
            points: points.to_vec(),
            aux,
            sorted,
        }
    }

    /// Add the interaction parts of `b(x, y_m)` over the cloud, in cloud
    /// order, skipping index `skip`. Together with [`Kernel::add_local`] this
    /// agrees with summing [`Kernel::eval`] to rounding.
    pub fn accumulate(&self, x: &[f64], cloud: &PreparedCloud, skip: Option<usize>, out: &mut [f64]) {
        let d = self.spec.dim;
        let skip = skip.unwrap_or(usize::MAX);
        match self.spec.family {
            KernelFamily::Zero | KernelFamily::Constant { .. } => {}
            KernelFamily::TanhDifference => {
                // tanh(y - x) = (e^{2y} - e^{2x}) / (e^{2y} + e^{2x})
                let mut ex = [0.0; 8];
                for c in 0..d.min(8) {
                    ex[c] = exp2x(x[c]);
                }
                for m in 0..cloud.len() {
                    if m == skip {
                        continue;
                    }
                    let base = m * d;
                    for c in 0..d {
                        let ey = cloud.aux[base + c];
                        let e = if d <= 8 { ex[c] } else { exp2x(x[c]) };
                        let v = (ey - e) / (ey + e);
                        out[c] += if v.is_nan() {
                            (cloud.points[base + c] - x[c]).tanh()
                        } else {
                            v
                        };
                    }
                }
            }
            KernelFamily::DiracApprox { .. } if cloud.sorted => {
                let reach = DIRAC_REACH * self.spec.delta;
                let lo = cloud.lower_bound(x[0] - reach, false);
                let hi = cloud.lower_bound(x[0] + reach, true);
                for m in (lo..hi).filter(|&m| m != skip) {
                    self.add_interaction(x, cloud.point(m), out);
                }
            }
            _ => {
                for m in 0..cloud.len() {
                    if m == skip {
                        continue;
                    }
                    self.add_interaction(x, cloud.point(m), out);
                }
            }
        }
    }
}
