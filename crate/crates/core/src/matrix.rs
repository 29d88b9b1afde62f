//! Square symmetric matrix wrapper.

use ndarray::{Array2, ArrayView2};
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Entrywise symmetry tolerance: `|a_ij − a_ji| ≤ SYMMETRY_TOL · max(1, |a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    NotSymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },
}

/// A finite, square, symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Array2<f64>);

impl SymmetricMatrix {
    /// Validates shape, finiteness and symmetry.
    pub fn new(entries: Array2<f64>) -> Result<Self, MatrixError> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(MatrixError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(MatrixError::Empty);
        }
        for i in 0..rows {
            for j in 0..cols {
                let a = entries[[i, j]];
                if !a.is_finite() {
                    return Err(MatrixError::NonFinite { row: i, col: j });
                }
                if j > i {
                    let b = entries[[j, i]];
                    if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                        return Err(MatrixError::NotSymmetric {
                            row: i,
                            col: j,
                            upper: a,
                            lower: b,
                        });
                    }
                }
            }
        }
        Ok(Self(entries))
    }

    /// Builds `(B + Bᵀ)/2`, which is symmetric bit-exactly.
    pub fn symmetrized(b: &Array2<f64>) -> Result<Self, MatrixError> {
        let (rows, cols) = b.dim();
        if rows != cols {
            return Err(MatrixError::NotSquare { rows, cols });
        }
        let mut out = Array2::zeros((rows, rows));
        for i in 0..rows {
            out[[i, i]] = b[[i, i]];
            for j in (i + 1)..rows {
                let v = 0.5 * (b[[i, j]] + b[[j, i]]);
                out[[i, j]] = v;
                out[[j, i]] = v;
            }
        }
        Self::new(out)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Array2::eye(dim))
    }

    /// Wraps a matrix the caller has already built symmetric.
    pub(crate) fn from_trusted(entries: Array2<f64>) -> Self {
        debug_assert!(Self::new(entries.clone()).is_ok());
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }
}

impl Serialize for SymmetricMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.0.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.serialize(serializer)
    }
}
