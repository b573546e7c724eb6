//! Small dense complex linear-algebra helpers.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::C64;

/// Matrix exponential (Padé approximant with scaling and squaring).
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    a.exp()
}

/// `exp(−i H t)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    v * phases * v.adjoint()
}

/// Ascending eigenvalues and matching eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// Largest entry magnitude.
pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Kronecker product `a ⊗ b` (`b` indexes fastest).
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}
