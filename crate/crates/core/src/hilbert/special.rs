//! Generalized Laguerre polynomials and exact displacement-operator matrix
//! elements.

use nalgebra::DMatrix;

use crate::C64;

/// `L_n^{(α)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln(lo!/hi!)` for `lo ≤ hi`.
fn ln_factorial_ratio(lo: usize, hi: usize) -> f64 {
    -((lo + 1)..=hi).map(|k| (k as f64).ln()).sum::<f64>()
}

/// `⟨n_out| D(λ) |n_in⟩` with `D(λ) = exp(λa† − λ*a)` in the untruncated space.
pub fn displacement_matrix_element(n_out: usize, n_in: usize, lambda: C64) -> C64 {
    let (lo, hi, base) = if n_out >= n_in { (n_in, n_out, lambda) } else { (n_out, n_in, -lambda.conj()) };
    let delta = hi - lo;
    let x = lambda.norm_sqr();
    let poly = laguerre(lo, delta as f64, x);
    if delta == 0 {
        return C64::new((-x / 2.0).exp() * poly, 0.0);
    }
    if x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let ln_mag = -x / 2.0 + delta as f64 * base.norm().ln() + 0.5 * ln_factorial_ratio(lo, hi);
    C64::from_polar(ln_mag.exp(), delta as f64 * base.arg()) * poly
}

/// `(n_max+1)²` block of exact elements of `D(λ)`.
pub fn displacement_matrix(n_max: usize, lambda: C64) -> DMatrix<C64> {
    DMatrix::from_fn(n_max + 1, n_max + 1, |r, c| displacement_matrix_element(r, c, lambda))
}
