//! Two-mode gate with commensurate detunings: the stretch mode carries the gate,
//! the centre-of-mass mode closes an integer number of loops in the same time.

use super::analytic::{analytic_propagator, PhaseLedger};
use crate::drive::{Branch, DriveSpec};
use crate::{Error, Result};

/// Relative tolerance on the detuning ratio being an integer.
const COMMENSURATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SchmitzReport {
    /// `|2π/δ_STR|`.
    pub gate_time: f64,
    /// `δ_COM/δ_STR`.
    pub detuning_ratio: f64,
    pub commensurate: bool,
    /// Largest residual `|λ|` on each mode at the gate time.
    pub residual_displacement: Vec<f64>,
    /// Stretch-mode geometric phase of `↓↑`.
    pub phi_str: f64,
    /// Centre-of-mass geometric phase of `↓↓`.
    pub phi_com: f64,
    /// `phi_str − phi_com`.
    pub differential: f64,
    /// Centre-of-mass dynamic phase of `↓↓` and `↑↑`.
    pub dynamic_com: [f64; 2],
    /// `|dynamic_com| / |phi_com|`.
    pub dynamic_ratio: f64,
    /// Rabi frequency scale factor that sets the differential phase to `π/2`.
    pub rabi_scale_for_quarter_turn: f64,
    pub ledger: PhaseLedger,
    pub warnings: Vec<String>,
}

impl SchmitzReport {
    pub fn closed(&self, tolerance: f64) -> bool {
        self.commensurate && self.residual_displacement.iter().all(|&r| r < tolerance)
    }
}

/// Checks closure and phase bookkeeping of a two-ion, two-mode drive over one
/// stretch-mode loop.
pub fn schmitz_phase_check(drive: &DriveSpec, str_mode: usize, com_mode: usize) -> Result<SchmitzReport> {
    drive.validate()?;
    if drive.branch != Branch::Z {
        return Err(Error::Branch("the commensurate-gate check needs a z-branch drive".into()));
    }
    if drive.n_ions() != 2 {
        return Err(Error::InvalidArgument("the commensurate-gate check is defined for two ions".into()));
    }
    if str_mode >= drive.n_modes() || com_mode >= drive.n_modes() || str_mode == com_mode {
        return Err(Error::InvalidArgument("invalid stretch/centre-of-mass mode indices".into()));
    }
    let d_str = drive.detunings[str_mode];
    let d_com = drive.detunings[com_mode];
    if d_str == 0.0 {
        return Err(Error::ZeroDetuning(str_mode));
    }
    let gate_time = (2.0 * std::f64::consts::PI / d_str).abs();
    let detuning_ratio = d_com / d_str;
    let commensurate = (detuning_ratio - detuning_ratio.round()).abs() <= COMMENSURATE_TOLERANCE * detuning_ratio.abs().max(1.0);
    let ledger = analytic_propagator(drive, 0.0, gate_time)?;
    let residual_displacement: Vec<f64> = ledger.modes.iter().map(|m| m.displacement.iter().map(|l| l.norm()).fold(0.0, f64::max)).collect();
    let mut warnings = ledger.warnings.clone();
    if !commensurate {
        warnings.push(format!("detuning ratio {detuning_ratio} is not an integer: the centre-of-mass loop does not close"));
    }
    let phi_str = ledger.modes[str_mode].geometric[0b01];
    let phi_com = ledger.modes[com_mode].geometric[0b00];
    let differential = phi_str - phi_com;
    let dynamic_com = [ledger.modes[com_mode].dynamic[0b00], ledger.modes[com_mode].dynamic[0b11]];
    let dynamic_ratio = dynamic_com[0].abs().max(dynamic_com[1].abs()) / phi_com.abs();
    let rabi_scale_for_quarter_turn = (std::f64::consts::FRAC_PI_2 / differential).abs().sqrt();
    Ok(SchmitzReport {
        gate_time,
        detuning_ratio,
        commensurate,
        residual_displacement,
        phi_str,
        phi_com,
        differential,
        dynamic_com,
        dynamic_ratio,
        rabi_scale_for_quarter_turn,
        ledger,
        warnings,
    })
}
