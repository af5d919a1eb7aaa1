use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// Mean-field drift `(1/(N-1)) sum_{j != i} b_t(x_i, x_j)` for every
/// particle, by the plain double loop in index order. `positions` is
/// `[N][d]`. The `y`-independent part of `b` is added once per row rather
/// than averaged, so constant kernels give their constant exactly.
pub fn drift_field(kernel: &Kernel, t: f64, positions: &[f64]) -> Result<Vec<f64>> {
    let d = kernel.dim();
    let n = check_positions(d, positions)?;
    if !t.is_finite() {
        return Err(Error::Input("non-finite time".into()));
    }
    let scale = 1.0 / (n - 1) as f64;
    let m = kernel.spec().modulation.at(t);
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        let xi = &positions[i * d..(i + 1) * d];
        let row = &mut out[i * d..(i + 1) * d];
        for j in (0..n).filter(|&j| j != i) {
            kernel.add_interaction(xi, &positions[j * d..(j + 1) * d], row);
        }
        row.iter_mut().for_each(|o| *o *= scale);
        kernel.add_local(xi, row);
        row.iter_mut().for_each(|o| *o *= m);
    }
    Ok(out)
}

/// Same field through the prepared-cloud path used by the simulator: pair
/// terms are summed in lexicographic order of the partner positions, so
/// the result is bit-identical under any relabelling of the particles.
pub fn drift_field_sorted(kernel: &Kernel, t: f64, positions: &[f64]) -> Result<Vec<f64>> {
    let d = kernel.dim();
    let n = check_positions(d, positions)?;
    let mut out = vec![0.0; n * d];
    let mut scratch = SortScratch::default();
    autonomous_drift(kernel, positions, &mut scratch, &mut out);
    let m = kernel.spec().modulation.at(t);
    out.iter_mut().for_each(|o| *o *= m);
    Ok(out)
}

fn check_positions(d: usize, positions: &[f64]) -> Result<usize> {
    if positions.len() % d != 0 {
        return Err(Error::Input(format!("positions are not a multiple of d = {d}")));
    }
    let n = positions.len() / d;
    if n < 2 {
        return Err(Error::Input(format!("need at least two particles, got {n}")));
    }
    if positions.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite particle position".into()));
    }
    Ok(n)
}

#[derive(Default)]
pub(super) struct SortScratch {
    order: Vec<usize>,
    rank: Vec<usize>,
    sorted: Vec<f64>,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Copy of a `[len][d]` cloud in lexicographic order.
pub(super) fn lex_sorted(points: &[f64], d: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..points.len() / d).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a * d..(a + 1) * d], &points[b * d..(b + 1) * d]));
    order.iter().flat_map(|&i| points[i * d..(i + 1) * d].iter().copied()).collect()
}

/// Autonomous drift of an `N`-particle configuration into `out`.
pub(super) fn autonomous_drift(kernel: &Kernel, positions: &[f64], scratch: &mut SortScratch, out: &mut [f64]) {
    let d = kernel.dim();
    let n = positions.len() / d;
    out.iter_mut().for_each(|o| *o = 0.0);
    if kernel.has_interaction() {
        let SortScratch { order, rank, sorted } = scratch;
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| lex_cmp(&positions[a * d..(a + 1) * d], &positions[b * d..(b + 1) * d]));
        rank.resize(n, 0);
        sorted.clear();
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
            sorted.extend_from_slice(&positions[i * d..(i + 1) * d]);
        }
        let cloud = kernel.prepare(sorted);
        let scale = (n - 1) as f64;
        for i in 0..n {
            let row = &mut out[i * d..(i + 1) * d];
            kernel.accumulate(&positions[i * d..(i + 1) * d], &cloud, Some(rank[i]), row);
            row.iter_mut().for_each(|o| *o /= scale);
        }
    }
    for i in 0..n {
        kernel.add_local(&positions[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Component, KernelFamily, KernelSpec, MatrixSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    fn kernels() -> Vec<Kernel> {
        let specs = [
            KernelSpec::new(KernelFamily::TanhDifference, 0.0, 2),
            KernelSpec::new(KernelFamily::DiracApprox { v: vec![1.0, -0.5] }, 0.3, 2),
            KernelSpec::new(KernelFamily::LogGradient { matrix: MatrixSpec::Symplectic }, 0.2, 2),
            KernelSpec::new(KernelFamily::RieszGradient { s: 0.5, matrix: MatrixSpec::NegIdentity }, 0.2, 2),
            KernelSpec::new(
                KernelFamily::Additive { f: Component::Sin, g: Component::Linear { coef: 0.5 }, h: Component::Tanh },
                0.0,
                2,
            ),
        ];
        specs.iter().map(|s| s.build().unwrap()).collect()
    }

    #[test]
    fn constant_kernel_gives_constant_rows() {
        let c = vec![0.3, -1.7];
        let k = KernelSpec::new(KernelFamily::Constant { value: c.clone() }, 0.0, 2).build().unwrap();
        let pos = cloud(7, 2, 1);
        for f in [drift_field(&k, 0.0, &pos).unwrap(), drift_field_sorted(&k, 0.0, &pos).unwrap()] {
            for row in f.chunks(2) {
                assert_eq!(row, &c[..]);
            }
        }
    }

    #[test]
    fn two_particles() {
        for k in kernels() {
            let pos = cloud(2, 2, 3);
            for f in [drift_field(&k, 0.0, &pos).unwrap(), drift_field_sorted(&k, 0.0, &pos).unwrap()] {
                let a = k.eval(0.0, &pos[..2], &pos[2..]).unwrap();
                let b = k.eval(0.0, &pos[2..], &pos[..2]).unwrap();
                for c in 0..2 {
                    // b = local + interaction, so only the summation order may differ
                    assert!((f[c] - a[c]).abs() <= 1e-15 * a[c].abs().max(1.0));
                    assert!((f[2 + c] - b[c]).abs() <= 1e-15 * b[c].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn odd_kernels_cancel_in_total() {
        let k = KernelSpec::new(
            KernelFamily::Additive { f: Component::Zero, g: Component::Zero, h: Component::Sin },
            0.0,
            1,
        )
        .build()
        .unwrap();
        let pos = cloud(50, 1, 5);
        let f = drift_field(&k, 0.0, &pos).unwrap();
        // brute-force pair oracle
        let mut total = 0.0;
        for i in 0..50 {
            for j in 0..50 {
                if i != j {
                    total += (pos[i] - pos[j]).sin() / 49.0;
                }
            }
        }
        let sum: f64 = f.iter().sum();
        assert!(sum.abs() < 1e-12 && total.abs() < 1e-12, "{sum} {total}");
    }

    #[test]
    fn sorted_path_matches_reference() {
        for k in kernels() {
            let pos = cloud(40, 2, 9);
            let a = drift_field(&k, 0.0, &pos).unwrap();
            let b = drift_field_sorted(&k, 0.0, &pos).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{}: {x} vs {y}", k.spec().family.name());
            }
        }
    }

    #[test]
    fn sorted_path_is_permutation_equivariant() {
        for k in kernels() {
            let pos = cloud(30, 2, 11);
            let perm: Vec<usize> = (0..30).map(|i| (i * 7 + 3) % 30).collect();
            let shuffled: Vec<f64> = perm.iter().flat_map(|&p| pos[2 * p..2 * p + 2].to_vec()).collect();
            let a = drift_field_sorted(&k, 0.0, &pos).unwrap();
            let b = drift_field_sorted(&k, 0.0, &shuffled).unwrap();
            for (i, &p) in perm.iter().enumerate() {
                assert_eq!(&b[2 * i..2 * i + 2], &a[2 * p..2 * p + 2]);
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let k = KernelSpec::new(KernelFamily::TanhDifference, 0.0, 1).build().unwrap();
        assert!(drift_field(&k, 0.0, &[0.0, f64::INFINITY]).is_err());
        assert!(drift_field_sorted(&k, 0.0, &[0.0]).is_err());
    }
}
