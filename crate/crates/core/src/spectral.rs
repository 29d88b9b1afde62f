//! Symmetric eigendecomposition.
//!
//! Backed by nalgebra's Householder tridiagonalization with implicit
//! symmetric QR steps, followed by a fixed ordering and sign convention so
//! results are reproducible and comparable across calls.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::matrix::{MatrixError, SymmetricMatrix};

/// Iteration cap for the implicit QR phase.
pub const MAX_ITERATIONS: usize = 10_000;
/// Relative convergence threshold for off-diagonal entries.
pub const CONVERGENCE_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("input is not symmetric: {0}")]
    NotSymmetric(#[from] MatrixError),
    #[error("eigendecomposition did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    /// Pairs eigenvalues with eigenvector columns; sorts descending.
    pub fn new(eigenvalues: Array1<f64>, eigenvectors: Array2<f64>) -> Self {
        assert_eq!(eigenvalues.len(), eigenvectors.ncols());
        assert_eq!(eigenvectors.nrows(), eigenvectors.ncols());
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let values = order.iter().map(|&k| eigenvalues[k]).collect();
        let mut vectors = Array2::zeros(eigenvectors.dim());
        for (dst, &src) in order.iter().enumerate() {
            vectors.column_mut(dst).assign(&eigenvectors.column(src));
        }
        Self {
            eigenvalues: values,
            eigenvectors: vectors,
        }
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Same eigenvectors, new eigenvalues (re-sorted if needed).
    pub fn with_eigenvalues(&self, eigenvalues: Array1<f64>) -> Self {
        Self::new(eigenvalues, self.eigenvectors.clone())
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are sorted descending; each eigenvector is flipped so its
/// largest-magnitude component (first one on ties) is positive. Output is a
/// deterministic function of the input bits.
pub fn eigh(a: &SymmetricMatrix) -> Result<SpectralDecomposition, SpectralError> {
    let n = a.dim();
    let arr = a.as_array();
    let m = DMatrix::from_fn(n, n, |i, j| arr[[i, j]]);
    let eig = m
        .try_symmetric_eigen(CONVERGENCE_TOL, MAX_ITERATIONS)
        .ok_or(SpectralError::NoConvergence {
            iterations: MAX_ITERATIONS,
        })?;

    let values = Array1::from_iter(eig.eigenvalues.iter().copied());
    let mut vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
    for mut col in vectors.columns_mut() {
        let mut lead = 0;
        for i in 1..n {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
    Ok(SpectralDecomposition::new(values, vectors))
}

/// `V Λ Vᵀ`, symmetrized as `(B + Bᵀ)/2`.
pub fn reconstruct(d: &SpectralDecomposition) -> SymmetricMatrix {
    let v = &d.eigenvectors;
    let scaled = v * &d.eigenvalues.view().insert_axis(ndarray::Axis(0));
    let b = scaled.dot(&v.t());
    SymmetricMatrix::symmetrized(&b).expect("finite product of finite factors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sym(a: Array2<f64>) -> SymmetricMatrix {
        SymmetricMatrix::new(a).unwrap()
    }

    #[test]
    fn identity_and_diagonal() {
        let d = eigh(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(d.eigenvalues().to_vec(), vec![1.0, 1.0, 1.0]);

        let d = eigh(&sym(array![[2.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, -1.0]])).unwrap();
        assert_eq!(d.eigenvalues().to_vec(), vec![5.0, 2.0, -1.0]);
        let expected = array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(d.eigenvectors(), &expected);
    }

    #[test]
    fn two_by_two_hand_solved() {
        // λ² − 4λ + 3 = 0 → {3, 1}
        let d = eigh(&sym(array![[2.0, 1.0], [1.0, 2.0]])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.eigenvalues()[0] - 3.0).abs() < 1e-15);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-15);
        let v = d.eigenvectors();
        assert!((v[[0, 0]] - r).abs() < 1e-15 && (v[[1, 0]] - r).abs() < 1e-15);
        // sign convention: tie in magnitude, first component wins → (1, −1)/√2
        assert!((v[[0, 1]] - r).abs() < 1e-15 && (v[[1, 1]] + r).abs() < 1e-15);
    }

    #[test]
    fn reconstruct_examples() {
        let d = SpectralDecomposition::new(array![1.0, 1.0], Array2::eye(2));
        assert_eq!(reconstruct(&d).as_array(), &Array2::<f64>::eye(2));

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let d = SpectralDecomposition::new(array![3.0, 1.0], array![[r, r], [r, -r]]);
        let a = reconstruct(&d);
        let expected = array![[2.0, 1.0], [1.0, 2.0]];
        for (x, y) in a.as_array().iter().zip(expected.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_matrix() {
        let d = eigh(&sym(Array2::zeros((3, 3)))).unwrap();
        assert!(d.eigenvalues().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic() {
        let a = sym(array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]]);
        assert_eq!(eigh(&a).unwrap(), eigh(&a).unwrap());
    }
}
