use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative jitters tried in order; the last one is the hard ceiling.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-11, 1e-10];

/// Lower Cholesky factor of a symmetric PSD matrix. On failure a multiple of
/// the largest diagonal entry is added, escalating x10 from 1e-12 up to
/// 1e-10; past that the matrix is reported as numerically singular.
pub(crate) fn cholesky_jittered(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let scale = m
        .diagonal()
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    for eps in JITTER_LADDER {
        let mut a = m.clone();
        if eps > 0.0 {
            for i in 0..a.nrows() {
                a[(i, i)] += eps * scale;
            }
        }
        if let Some(ch) = a.cholesky() {
            return Ok(ch.unpack());
        }
    }
    Err(Error::Numerical(format!(
        "{what}: Cholesky failed with jitter up to 1e-10"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_spd() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky_jittered(&m, "t").unwrap();
        let back = &l * l.transpose();
        assert!((back - m).abs().max() < 1e-14);
    }

    #[test]
    fn rank_deficient_is_rescued_by_jitter() {
        // rank one; exact factorization fails, tiny jitter makes it PD
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_jittered(&m, "t").is_ok());
    }

    #[test]
    fn indefinite_fails() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cholesky_jittered(&m, "t"),
            Err(Error::Numerical(_))
        ));
    }
}
