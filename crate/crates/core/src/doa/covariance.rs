use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::SnapshotMatrix;
use crate::{Error, Result};

/// Relative tolerance for the Hermitian check on externally supplied matrices.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

/// Hermitian covariance matrix of array data.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: DMatrix<Complex64>,
}

impl Covariance {
    /// Wraps `matrix` after checking it is square and Hermitian to
    /// [`HERMITIAN_TOLERANCE`] relative to its largest entry.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::shape(format!(
                "covariance must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = hermitian_residual(&matrix);
        let scale = matrix.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        if !(asym <= HERMITIAN_TOLERANCE * scale) {
            return Err(Error::Validation(format!(
                "covariance is not Hermitian: max |R - R^H| = {asym:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// `c * R` for real `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(c, 0.0),
        }
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors (columns).
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }
}

/// Largest entry of `|R - R^H|`.
pub fn hermitian_residual(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `R = (1/Ns) * sum_k x[k] x[k]^H`, built from the lower triangle so the
/// result is exactly Hermitian.
pub fn sample_covariance(x: &SnapshotMatrix) -> Covariance {
    let data = x.data();
    let (n, ns) = (data.nrows(), data.ncols());
    let inv = 1.0 / ns as f64;
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        let row_i = data.row(i);
        for j in 0..=i {
            let row_j = data.row(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..ns {
                acc += row_i[k] * row_j[k].conj();
            }
            acc *= inv;
            if i == j {
                acc.im = 0.0;
            }
            r[(i, j)] = acc;
            r[(j, i)] = acc.conj();
        }
    }
    Covariance { matrix: r }
}
