//! Small dense matrix helpers for correlation matrices.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("diagonal entry {0} is not 1")]
    NonUnitDiagonal(usize),
    #[error("matrix is not positive semi-definite (pivot {pivot} = {value})")]
    NotPsd { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

const TOL: f64 = 1e-10;

/// Checks that `m` is a symmetric, unit-diagonal, positive semi-definite matrix.
pub fn validate_correlation(m: &[Vec<f64>]) -> Result<(), MatrixError> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(MatrixError::NotSquare {
                rows: n,
                row: i,
                len: row.len(),
            });
        }
        if (row[i] - 1.0).abs() > TOL {
            return Err(MatrixError::NonUnitDiagonal(i));
        }
    }
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > TOL || m[i][j].is_nan() {
                return Err(MatrixError::NotSymmetric(i, j));
            }
        }
    }
    cholesky_psd(m).map(|_| ())
}

/// Lower-triangular factor `L` with `L Lᵀ = m`, tolerating singular PSD input
/// (zero pivots produce zero columns).
pub fn cholesky_psd(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, MatrixError> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = m[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d < -TOL * 10.0 {
            return Err(MatrixError::NotPsd { pivot: j, value: d });
        }
        if d <= TOL {
            // zero pivot: the remaining column must vanish too
            for i in j + 1..n {
                let mut s = m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if s.abs() > 1e-7 {
                    return Err(MatrixError::NotPsd { pivot: j, value: d });
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..n {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

/// `xᵀ M x`.
pub fn quadratic_form(x: &[f64], m: &[Vec<f64>]) -> Result<f64, MatrixError> {
    if m.len() != x.len() {
        return Err(MatrixError::Dimension {
            expected: m.len(),
            got: x.len(),
        });
    }
    let mut acc = 0.0;
    for (i, row) in m.iter().enumerate() {
        if row.len() != x.len() {
            return Err(MatrixError::Dimension {
                expected: x.len(),
                got: row.len(),
            });
        }
        for (j, v) in row.iter().enumerate() {
            acc += x[i] * v * x[j];
        }
    }
    Ok(acc)
}

/// Matrix with unit diagonal and a constant off-diagonal entry.
pub fn equicorrelation(n: usize, rho: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_is_psd() {
        assert!(validate_correlation(&equicorrelation(3, 1.0)).is_ok());
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let m = vec![
            vec![1.0, 0.9, -0.9],
            vec![0.9, 1.0, 0.9],
            vec![-0.9, 0.9, 1.0],
        ];
        assert!(matches!(
            validate_correlation(&m),
            Err(MatrixError::NotPsd { .. })
        ));
    }

    #[test]
    fn factor_reproduces_matrix() {
        let m = equicorrelation(4, 0.3);
        let l = cholesky_psd(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - m[i][j]).abs() < 1e-12);
            }
        }
    }
}
