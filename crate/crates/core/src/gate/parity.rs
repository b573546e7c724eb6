//! Parity fringes and the Bell-state fidelity estimate.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::drive::rotation;
use crate::hilbert::linalg::kron;
use crate::hilbert::{reduced_spin_state, SimState};
use crate::{Error, Result, C64};

/// Two-spin density matrix of spins `a` and `b` (spin `a` is the fast index).
pub fn pair_density(rho: &DMatrix<C64>, n_spins: usize, a: usize, b: usize) -> Result<DMatrix<C64>> {
    if a >= n_spins || b >= n_spins || a == b {
        return Err(Error::InvalidArgument(format!("invalid spin pair ({a}, {b}) for {n_spins} spins")));
    }
    let dim = 1usize << n_spins;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch("density matrix does not match the spin count".into()));
    }
    let local = |s: usize| (s >> a & 1) | (s >> b & 1) << 1;
    let rest = |s: usize| s & !(1 << a) & !(1 << b);
    let mut out = DMatrix::<C64>::zeros(4, 4);
    for r in 0..dim {
        for c in 0..dim {
            if rest(r) == rest(c) {
                out[(local(r), local(c))] += rho[(r, c)];
            }
        }
    }
    Ok(out)
}

/// `⟨σz⊗σz⟩` after `R(π/2, φ)` on both spins, for each analysis phase.
pub fn parity_scan_density(rho: &DMatrix<C64>, phases: &[f64]) -> Result<Vec<f64>> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::DimensionMismatch("parity needs a two-spin density matrix".into()));
    }
    let zz = [1.0, -1.0, -1.0, 1.0];
    Ok(phases
        .iter()
        .map(|&phi| {
            let r = rotation(std::f64::consts::FRAC_PI_2, phi);
            let u = kron(&r, &r);
            let out = &u * rho * u.adjoint();
            (0..4).map(|k| zz[k] * out[(k, k)].re).sum()
        })
        .collect())
}

/// Parity fringe of spins 0 and 1 of `state`.
pub fn parity_scan(state: &SimState, phases: &[f64]) -> Result<Vec<f64>> {
    let rho = pair_density(&reduced_spin_state(state), state.space.n_spins, 0, 1)?;
    parity_scan_density(&rho, phases)
}

/// Least-squares fit `P(φ) = c cos 2φ + s sin 2φ + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub cos: f64,
    pub sin: f64,
    pub offset: f64,
}

impl FringeFit {
    pub fn contrast(&self) -> f64 {
        self.cos.hypot(self.sin)
    }

    /// Phase `φ₀` with `P(φ) = C cos(2φ − φ₀) + offset`.
    pub fn phase(&self) -> f64 {
        self.sin.atan2(self.cos)
    }
}

pub fn fit_fringe(phases: &[f64], values: &[f64]) -> Result<FringeFit> {
    if phases.len() != values.len() || phases.len() < 3 {
        return Err(Error::InvalidArgument("a fringe fit needs at least three matched points".into()));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&phi, &v) in phases.iter().zip(values) {
        let row = Vector3::new((2.0 * phi).cos(), (2.0 * phi).sin(), 1.0);
        ata += row * row.transpose();
        atb += row * v;
    }
    let x = ata.lu().solve(&atb).ok_or_else(|| Error::InvalidArgument("analysis phases do not determine the fringe".into()))?;
    Ok(FringeFit { cos: x[0], sin: x[1], offset: x[2] })
}

/// `(P↓↓ + P↑↑)/2 + C/2`, the Bell-state fidelity estimate from populations and parity contrast.
pub fn bell_fidelity_estimate(p_down_down: f64, p_up_up: f64, contrast: f64) -> f64 {
    (p_down_down + p_up_up) / 2.0 + contrast / 2.0
}
