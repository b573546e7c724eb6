//! Numerical checks of the operator identities the analytic results rely on:
//! interaction-picture Pauli operators, the phase-rotated displacement, and
//! the displacement that diagonalises a driven oscillator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::expm;
use super::operator::{ModeOp, SpinOp};
use crate::C64;

/// Fock truncation used for the bosonic identities.
const TRUNCATION: usize = 60;
/// Largest Fock level compared.
const INTERIOR: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    /// Maximum residual of `e^{iκσz} σ± e^{−iκσz} = e^{±2iκ} σ±`.
    pub pauli_rotation: f64,
    /// Maximum interior residual of the phase-rotated displacement identity.
    pub displacement_rotation: f64,
    /// Maximum interior residual of the driven-oscillator diagonalisation.
    pub canonical_transformation: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.pauli_rotation.max(self.displacement_rotation).max(self.canonical_transformation)
    }
}

/// `e^{iκσz} σ± e^{−iκσz} − e^{±2iκ} σ±`, largest entry.
pub fn pauli_rotation_residual(kappa: f64) -> f64 {
    let rot = |sign: f64| DMatrix::from_fn(2, 2, |r, c| if r == c { C64::from_polar(1.0, sign * kappa * if r == 1 { 1.0 } else { -1.0 }) } else { C64::new(0.0, 0.0) });
    let (u, ud) = (rot(1.0), rot(-1.0));
    let mut worst: f64 = 0.0;
    for (op, sign) in [(SpinOp::Plus, 1.0), (SpinOp::Minus, -1.0)] {
        let s = op.matrix();
        let lhs = &u * &s * &ud;
        let rhs = s * C64::from_polar(1.0, 2.0 * sign * kappa);
        worst = worst.max(interior_residual(&lhs, &rhs, 1));
    }
    worst
}

/// `e^{iλn} e^{iξ(a+a†)} e^{−iλn}` vs `exp(iξ(a e^{−iλ} + a† e^{iλ}))` on the interior.
pub fn displacement_rotation_residual(lambda: f64, xi: f64) -> f64 {
    let a = ModeOp::A.matrix(TRUNCATION);
    let ad = ModeOp::Adag.matrix(TRUNCATION);
    let phase = |s: f64| DMatrix::from_fn(TRUNCATION + 1, TRUNCATION + 1, |r, c| if r == c { C64::from_polar(1.0, s * lambda * r as f64) } else { C64::new(0.0, 0.0) });
    let i = C64::new(0.0, 1.0);
    let lhs = phase(1.0) * expm(&((&a + &ad) * (i * xi))) * phase(-1.0);
    let rhs = expm(&((&a * C64::from_polar(1.0, -lambda) + &ad * C64::from_polar(1.0, lambda)) * (i * xi)));
    interior_residual(&lhs, &rhs, INTERIOR)
}

/// `U_c (ξa† + ξ*a − κa†a) U_c†` vs `ξξ*/κ − κa†a` with `U_c = exp(−(λa† − λ*a))`, `λ = ξ/κ`.
pub fn canonical_transformation_residual(xi: C64, kappa: f64) -> f64 {
    let a = ModeOp::A.matrix(TRUNCATION);
    let ad = ModeOp::Adag.matrix(TRUNCATION);
    let n = ModeOp::Number.matrix(TRUNCATION);
    let lambda = xi / kappa;
    let uc = expm(&((&ad * lambda - &a * lambda.conj()) * C64::from(-1.0)));
    let h = &ad * xi + &a * xi.conj() - &n * C64::from(kappa);
    let lhs = &uc * h * uc.adjoint();
    let rhs = DMatrix::<C64>::identity(TRUNCATION + 1, TRUNCATION + 1) * C64::from(xi.norm_sqr() / kappa) - n * C64::from(kappa);
    interior_residual(&lhs, &rhs, INTERIOR)
}

fn interior_residual(a: &DMatrix<C64>, b: &DMatrix<C64>, levels: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..=levels.min(a.nrows() - 1) {
        for c in 0..=levels.min(a.ncols() - 1) {
            worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
        }
    }
    worst
}

/// Evaluates all three identities for `samples` random parameter draws
/// (`|ξ| ≤ 1`, `|κ| ∈ [0.5, 2]`, angles uniform in `[−π, π]`).
pub fn verify_identities(samples: usize, seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let mut report = IdentityReport { samples, pauli_rotation: 0.0, displacement_rotation: 0.0, canonical_transformation: 0.0 };
    for _ in 0..samples {
        let kappa_angle = rng.random_range(-pi..pi);
        let lambda = rng.random_range(-pi..pi);
        let xi_real = rng.random_range(-1.0..1.0);
        let xi = C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-pi..pi));
        let kappa = rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        report.pauli_rotation = report.pauli_rotation.max(pauli_rotation_residual(kappa_angle));
        report.displacement_rotation = report.displacement_rotation.max(displacement_rotation_residual(lambda, xi_real));
        report.canonical_transformation = report.canonical_transformation.max(canonical_transformation_residual(xi, kappa));
    }
    report
}
