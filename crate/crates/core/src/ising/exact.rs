//! Full spin ⊗ phonon evolution compared against the spin-only model.

use nalgebra::{DMatrix, DVector};

use super::effective::{effective_hamiltonian, ising_model, BiasMode};
use crate::drive::{DriveSpec, Form};
use crate::hilbert::linalg::{eigh, expm_hermitian};
use crate::hilbert::{propagate, reduced_spin_state, Coefficient, ModeSpec, ProductOp, PropagateOptions, SimState, SiteFactor, SpaceSpec, SpinOp, TermHamiltonian};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPoint {
    pub time: f64,
    /// `1 − ⟨ψ_eff|ρ_spin|ψ_eff⟩`.
    pub infidelity: f64,
    /// Von Neumann entropy of the full model's reduced spin state, nats.
    pub entanglement_entropy: f64,
    /// Largest difference of σz-basis populations.
    pub population_error: f64,
}

#[derive(Debug, Clone)]
pub struct ExactComparison {
    /// `max |Ωᵢ η_mi α₃ / δ_m|`.
    pub epsilon: f64,
    pub points: Vec<ComparisonPoint>,
    pub max_leakage: f64,
}

impl ExactComparison {
    pub fn final_infidelity(&self) -> f64 {
        self.points.last().map(|p| p.infidelity).unwrap_or(0.0)
    }
}

/// Largest `|Ωᵢ η_mi α₃ / δ_m|` of a drive.
pub fn dressing_parameter(drive: &DriveSpec) -> f64 {
    let mut eps: f64 = 0.0;
    for m in 0..drive.n_modes() {
        for i in 0..drive.n_ions() {
            eps = eps.max((drive.rabi[i] * drive.lamb_dicke.eta[(m, i)] * drive.alpha[3] / drive.detunings[m]).abs());
        }
    }
    eps
}

fn entropy(rho: &DMatrix<C64>) -> f64 {
    let (e, _) = eigh(rho);
    e.iter().filter(|&&p| p > 1e-15).map(|&p| -p * p.ln()).sum()
}

/// Evolves `|spins⟩|0…0⟩` under the Lamb-Dicke z-branch drive plus `Σᵢ bxᵢσxᵢ`
/// and the spin state under the matching Ising model (bias included), and
/// compares the spin states at each of `times`.
pub fn exact_vs_effective(drive: &DriveSpec, bx: &[f64], spins: &DVector<C64>, times: &[f64], n_max: usize, options: &PropagateOptions) -> Result<ExactComparison> {
    let n = drive.n_ions();
    if bx.len() != n {
        return Err(Error::DimensionMismatch(format!("{} field values for {n} ions", bx.len())));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("comparison times must be non-negative and increasing".into()));
    }
    let modes = (0..drive.n_modes()).map(|m| ModeSpec::new(format!("mode{m}"), drive.lamb_dicke.mode_frequencies[m], n_max)).collect();
    let space = SpaceSpec::new(n, modes)?;
    let mut h = drive.hamiltonian(&space, Form::LambDicke)?;
    let mut field = TermHamiltonian::new(space.clone());
    for (i, &b) in bx.iter().enumerate() {
        if b != 0.0 {
            field.push(Coefficient::Constant(C64::from(b)), ProductOp::identity().with(SiteFactor::from_dense(i, &SpinOp::X.matrix(), 0.0)));
        }
    }
    h.extend(field);

    let model = ising_model(drive, bx.to_vec())?;
    let h_eff = effective_hamiltonian(&model, BiasMode::Included);
    if spins.len() != 1 << n {
        return Err(Error::DimensionMismatch(format!("spin state of length {} for {n} ions", spins.len())));
    }
    let psi0 = spins.clone();
    let mut amplitudes = vec![C64::new(0.0, 0.0); space.dim()];
    amplitudes[..psi0.len()].copy_from_slice(psi0.as_slice());
    let mut state = SimState::new(space.clone(), amplitudes)?;
    let mut t = 0.0;
    let mut points = Vec::with_capacity(times.len());
    let mut max_leakage: f64 = 0.0;
    for &time in times {
        if time > t {
            let run = propagate(&h, &state, t, time, options)?;
            max_leakage = max_leakage.max(run.max_leakage);
            state = run.state;
            t = time;
        }
        let psi_eff = expm_hermitian(&h_eff, time) * &psi0;
        let rho = reduced_spin_state(&state);
        let fidelity = (psi_eff.adjoint() * &rho * &psi_eff)[(0, 0)].re;
        let population_error = (0..psi_eff.len()).map(|s| (rho[(s, s)].re - psi_eff[s].norm_sqr()).abs()).fold(0.0, f64::max);
        points.push(ComparisonPoint { time, infidelity: 1.0 - fidelity, entanglement_entropy: entropy(&rho), population_error });
    }
    Ok(ExactComparison { epsilon: dressing_parameter(drive), points, max_leakage })
}

/// Copy of `drive` with every detuning multiplied by `factor²` and every Rabi
/// frequency by `factor`: `J` is unchanged while `Ωη/δ` shrinks by `1/factor`.
pub fn weaker_dressing(drive: &DriveSpec, factor: f64) -> DriveSpec {
    let mut d = drive.scaled(factor);
    d.detunings.iter_mut().for_each(|x| *x *= factor * factor);
    d
}
