use serde::Serialize;

use crate::error::{Error, Result};

fn increment(path: &[f64], d: usize, i: usize, j: usize) -> f64 {
    path[i * d..(i + 1) * d]
        .iter()
        .zip(&path[j * d..(j + 1) * d])
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Exact supremum over partitions drawn from the grid of
/// `sum |Y_{t_{k+1}} - Y_{t_k}|^kappa`, returned to the power `1/kappa`.
/// `path` is `[n + 1][d]`.
pub fn kappa_variation(path: &[f64], dim: usize, kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) {
        return Err(Error::Domain(format!("kappa must be >= 1, got {kappa}")));
    }
    if dim == 0 || path.len() % dim != 0 || path.len() / dim < 2 {
        return Err(Error::Input("path needs at least two points".into()));
    }
    let n1 = path.len() / dim;
    // best[j]: largest sum over partitions of [t_0, t_j]
    let mut best = vec![0.0_f64; n1];
    for j in 1..n1 {
        best[j] = (0..j)
            .map(|i| best[i] + increment(path, dim, i, j).powf(kappa))
            .fold(0.0, f64::max);
    }
    Ok(best[n1 - 1].powf(1.0 / kappa))
}

/// Trapezoidal `(int int |f_t - f_s|^q / |t - s|^{1 + beta q} ds dt)^{1/q}`
/// over the grid, skipping the diagonal cells.
pub fn gagliardo_seminorm(path: &[f64], dim: usize, dt: f64, beta: f64, q: f64) -> Result<f64> {
    if dim == 0 || path.len() % dim != 0 || path.len() / dim < 2 {
        return Err(Error::Input("path needs at least two points".into()));
    }
    if !(beta > 0.0 && beta < 1.0 && q >= 1.0 && dt > 0.0) {
        return Err(Error::Domain(format!("need beta in (0,1), q >= 1, dt > 0; got {beta}, {q}, {dt}")));
    }
    let n1 = path.len() / dim;
    let w = |i: usize| if i == 0 || i == n1 - 1 { 0.5 * dt } else { dt };
    let mut total = 0.0;
    for i in 0..n1 {
        for j in i + 1..n1 {
            let inc = increment(path, dim, i, j);
            if inc > 0.0 {
                let gap = (j - i) as f64 * dt;
                total += w(i) * w(j) * inc.powf(q) / gap.powf(1.0 + beta * q);
            }
        }
    }
    Ok((2.0 * total).powf(1.0 / q))
}

/// `w(t_i, t_j)` for all `i <= j` on a grid of `n + 1` points.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSample {
    times: Vec<f64>,
    points: usize,
    values: Vec<f64>,
}

impl ControlSample {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(times: &[f64], w: F) -> Self {
        let points = times.len();
        let mut values = vec![0.0; points * points];
        for i in 0..points {
            for j in i..points {
                values[i * points + j] = w(times[i], times[j]);
            }
        }
        Self { times: times.to_vec(), points, values }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.points + j]
    }

    pub fn powf(&self, p: f64) -> Self {
        Self { values: self.values.iter().map(|v| v.powf(p)).collect(), ..self.clone() }
    }

    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.times, other.times, "controls on different grids");
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            ..self.clone()
        }
    }

    fn superadditivity_violations(&self) -> (usize, Option<(usize, usize, usize)>) {
        let n = self.points;
        let mut count = 0;
        let mut first = None;
        for s in 0..n {
            for u in s..n {
                for t in u..n {
                    let lhs = self.get(s, u) + self.get(u, t);
                    let rhs = self.get(s, t);
                    if lhs > rhs * (1.0 + 1e-9) + 1e-300 {
                        count += 1;
                        first.get_or_insert((s, u, t));
                    }
                }
            }
        }
        (count, first)
    }

    fn is_control(&self) -> bool {
        (0..self.points).all(|i| self.get(i, i) == 0.0) && self.superadditivity_violations().0 == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlReport {
    pub diagonal_zero: bool,
    pub superadditive: bool,
    pub violations: usize,
    /// First violating grid triple `(s, u, t)`
    pub first_violation: Option<(usize, usize, usize)>,
    /// `w^p` for `p` in {1, 1.5, 2, 3} and `w * (t - s)` are controls;
    /// `None` when `w` itself is not one
    pub closure: Option<bool>,
}

impl ControlReport {
    pub fn pass(&self) -> bool {
        self.diagonal_zero && self.superadditive
    }
}

/// Check the control axioms on every grid pair and triple, and closure under
/// powers and products when they hold.
pub fn control_check(w: &ControlSample) -> ControlReport {
    let diagonal_zero = (0..w.points).all(|i| w.get(i, i) == 0.0);
    let (violations, first_violation) = w.superadditivity_violations();
    let superadditive = violations == 0;
    let closure = (diagonal_zero && superadditive).then(|| {
        let linear = ControlSample::from_fn(&w.times, |s, t| t - s);
        [1.0, 1.5, 2.0, 3.0].iter().all(|&p| w.powf(p).is_control()) && w.product(&linear).is_control()
    });
    ControlReport { diagonal_zero, superadditive, violations, first_violation, closure }
}
