//! Thin wrappers over faer for the dense kernels used across the crate.

use faer::{Mat, Side};

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column-major eigenvectors, `n x n`.
    pub vectors: Mat<f64>,
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.vectors.read(i, k)).collect()
    }
}

/// Diagonalizes a real symmetric matrix given in row-major order.
pub fn eigh_row_major(n: usize, data: &[f64]) -> SymEigen {
    assert_eq!(data.len(), n * n);
    let m = Mat::from_fn(n, n, |i, j| data[i * n + j]);
    eigh(&m)
}

pub fn eigh(m: &Mat<f64>) -> SymEigen {
    let n = m.nrows();
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
    let values = order.iter().map(|&k| s.read(k)).collect();
    let u = evd.u();
    let vectors = Mat::from_fn(n, n, |i, j| u.read(i, order[j]));
    SymEigen { values, vectors }
}

/// Eigenvalues of a Hermitian matrix `re + i im` (row-major parts), ascending.
pub fn hermitian_eigenvalues(n: usize, re: &[f64], im: &[f64]) -> Vec<f64> {
    // Real embedding [[re, -im], [im, re]] has every eigenvalue twice.
    let big = Mat::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        match (bi, bj) {
            (0, 0) | (1, 1) => re[ii * n + jj],
            (0, 1) => -im[ii * n + jj],
            _ => im[ii * n + jj],
        }
    });
    let all = big.selfadjoint_eigenvalues(Side::Lower);
    let mut all: Vec<f64> = all.into_iter().collect();
    all.sort_by(f64::total_cmp);
    all.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}
