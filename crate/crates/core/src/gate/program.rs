//! Pulse programs: carrier rotations, displacement drives and idle gaps.

use nalgebra::DMatrix;

use super::analytic::{analytic_propagator, PhaseLedger};
use crate::drive::{apply_rotation, apply_spin_unitary, Branch, DriveSpec, Form};
use crate::hilbert::{propagate, reduced_spin_state, PropagateOptions, SimState, SpaceSpec};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Instantaneous carrier rotation `R(θ, φ)` on the listed ions (all ions if empty).
    Rotation { theta: f64, phi: f64, targets: Vec<usize> },
    /// Displacement drive held for `duration` seconds.
    Displacement { drive: DriveSpec, duration: f64 },
    /// Free evolution, the identity in the interaction picture.
    Idle { duration: f64 },
    /// `exp(−i angle σz / 2)` on the listed ions (all ions if empty).
    ZPhase { angle: f64, targets: Vec<usize> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseProgram {
    pub segments: Vec<Segment>,
}

impl PulseProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rotation(mut self, theta: f64, phi: f64) -> Self {
        self.segments.push(Segment::Rotation { theta, phi, targets: Vec::new() });
        self
    }

    pub fn displacement(mut self, drive: DriveSpec, duration: f64) -> Self {
        self.segments.push(Segment::Displacement { drive, duration });
        self
    }

    pub fn idle(mut self, duration: f64) -> Self {
        self.segments.push(Segment::Idle { duration });
        self
    }

    pub fn z_phase(mut self, angle: f64) -> Self {
        self.segments.push(Segment::ZPhase { angle, targets: Vec::new() });
        self
    }

    /// Total time spent in displacement and idle segments; rotations are instantaneous.
    pub fn duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Displacement { duration, .. } | Segment::Idle { duration } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    /// Time spent driving the modes, excluding idle gaps.
    pub fn gate_time(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Displacement { duration, .. } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    pub fn validate(&self, space: &SpaceSpec) -> Result<()> {
        let n = space.n_spins;
        for (k, seg) in self.segments.iter().enumerate() {
            match seg {
                Segment::Rotation { targets, theta, phi } => {
                    check_targets(k, targets, n)?;
                    if !theta.is_finite() || !phi.is_finite() {
                        return Err(Error::InvalidArgument(format!("segment {k}: non-finite rotation angle")));
                    }
                }
                Segment::ZPhase { targets, angle } => {
                    check_targets(k, targets, n)?;
                    if !angle.is_finite() {
                        return Err(Error::InvalidArgument(format!("segment {k}: non-finite phase")));
                    }
                }
                Segment::Displacement { drive, duration } => {
                    check_duration(k, *duration)?;
                    drive.validate()?;
                    if drive.n_ions() != n || drive.n_modes() != space.n_modes() {
                        return Err(Error::DimensionMismatch(format!(
                            "segment {k}: drive has {} ions and {} modes, space has {} spins and {} modes",
                            drive.n_ions(),
                            drive.n_modes(),
                            n,
                            space.n_modes()
                        )));
                    }
                }
                Segment::Idle { duration } => check_duration(k, *duration)?,
            }
        }
        Ok(())
    }
}

fn check_targets(k: usize, targets: &[usize], n: usize) -> Result<()> {
    match targets.iter().find(|&&t| t >= n) {
        Some(t) => Err(Error::InvalidArgument(format!("segment {k}: ion {t} out of range"))),
        None => Ok(()),
    }
}

fn check_duration(k: usize, duration: f64) -> Result<()> {
    if duration.is_finite() && duration >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("segment {k}: duration must be finite and non-negative")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    Integrate,
    Both,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub propagate: PropagateOptions,
    /// Hamiltonian form used by the integrating engine.
    pub form: Form,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { propagate: PropagateOptions::default(), form: Form::LambDicke }
    }
}

#[derive(Debug, Clone)]
pub struct SegmentLedger {
    pub segment: usize,
    pub ledger: PhaseLedger,
}

#[derive(Debug, Clone)]
pub struct ProgramRun {
    /// Final state; from the analytic engine when it ran.
    pub state: SimState,
    /// Final state of the integrating engine when `Both` ran.
    pub integrated: Option<SimState>,
    pub ledgers: Vec<SegmentLedger>,
    /// `|⟨ψ_analytic|ψ_integrated⟩|²` when `Both` ran.
    pub engine_overlap: Option<f64>,
    /// Displacement time only; rotation durations are not included.
    pub gate_time: f64,
    pub warnings: Vec<String>,
}

fn all_targets(targets: &[usize], n: usize) -> Vec<usize> {
    if targets.is_empty() {
        (0..n).collect()
    } else {
        targets.to_vec()
    }
}

fn z_phase_matrix(angle: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[C64::from_polar(1.0, angle / 2.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, -angle / 2.0)])
}

fn run_single(program: &PulseProgram, initial: &SimState, analytic: bool, options: &RunOptions, ledgers: &mut Vec<SegmentLedger>, warnings: &mut Vec<String>) -> Result<SimState> {
    let n = initial.space.n_spins;
    let mut state = initial.clone();
    let mut t = 0.0;
    for (k, seg) in program.segments.iter().enumerate() {
        match seg {
            Segment::Rotation { theta, phi, targets } => apply_rotation(&mut state, &all_targets(targets, n), *theta, *phi)?,
            Segment::ZPhase { angle, targets } => apply_spin_unitary(&mut state, &all_targets(targets, n), &z_phase_matrix(*angle))?,
            Segment::Idle { duration } => t += duration,
            Segment::Displacement { drive, duration } => {
                if analytic {
                    let ledger = analytic_propagator(drive, t, t + duration)?;
                    ledger.apply(&mut state)?;
                    warnings.extend(ledger.warnings.iter().map(|w| format!("segment {k}: {w}")));
                    ledgers.push(SegmentLedger { segment: k, ledger });
                } else if *duration > 0.0 {
                    let h = drive.hamiltonian(&state.space, options.form)?;
                    state = propagate(&h, &state, t, t + duration, &options.propagate)?.state;
                }
                t += duration;
            }
        }
    }
    let leak = state.leakage().into_iter().fold(0.0, f64::max);
    if leak > options.propagate.leakage_threshold {
        return Err(Error::Leakage { mode: 0, leakage: leak, threshold: options.propagate.leakage_threshold });
    }
    Ok(state)
}

/// Runs `program` on `initial` with the chosen engine.
pub fn run_program(program: &PulseProgram, initial: &SimState, engine: Engine, options: &RunOptions) -> Result<ProgramRun> {
    program.validate(&initial.space)?;
    let has_xy = program.segments.iter().any(|s| matches!(s, Segment::Displacement { drive, .. } if drive.branch == Branch::Xy));
    if has_xy && engine != Engine::Integrate {
        return Err(Error::Branch("the analytic engine supports z-branch drives only".into()));
    }
    let mut ledgers = Vec::new();
    let mut warnings = vec!["gate time excludes carrier rotations".to_string()];
    for seg in &program.segments {
        if let Segment::Displacement { drive, .. } = seg {
            warnings.extend(drive.warnings());
        }
    }
    let (state, integrated, engine_overlap) = match engine {
        Engine::Analytic => (run_single(program, initial, true, options, &mut ledgers, &mut warnings)?, None, None),
        Engine::Integrate => (run_single(program, initial, false, options, &mut ledgers, &mut warnings)?, None, None),
        Engine::Both => {
            if options.form != Form::LambDicke {
                warnings.push("engine comparison uses a full-form integration; agreement is limited by Lamb-Dicke corrections".into());
            }
            let a = run_single(program, initial, true, options, &mut ledgers, &mut warnings)?;
            let b = run_single(program, initial, false, options, &mut Vec::new(), &mut Vec::new())?;
            let overlap = a.overlap(&b);
            (a, Some(b), Some(overlap))
        }
    };
    Ok(ProgramRun { state, integrated, ledgers, engine_overlap, gate_time: program.gate_time(), warnings })
}

/// Motional thermal average of a program run.
#[derive(Debug, Clone)]
pub struct ThermalRun {
    /// Reduced spin density matrix averaged over the initial Fock distribution.
    pub spin_state: DMatrix<C64>,
    /// Total Boltzmann weight of the Fock states that were simulated.
    pub weight: f64,
    pub runs: usize,
}

/// Runs `program` from spin configuration `spins` with each mode in a thermal state
/// of mean occupation `nbar[m]`, averaging over Fock product states whose weight
/// exceeds `cutoff`.
pub fn run_thermal(program: &PulseProgram, space: &SpaceSpec, spins: usize, nbar: &[f64], engine: Engine, options: &RunOptions, cutoff: f64) -> Result<ThermalRun> {
    if nbar.len() != space.n_modes() {
        return Err(Error::DimensionMismatch("one mean occupation per mode is required".into()));
    }
    if nbar.iter().any(|n| !n.is_finite() || *n < 0.0) {
        return Err(Error::InvalidArgument("mean occupations must be non-negative".into()));
    }
    let engine = if engine == Engine::Both { Engine::Analytic } else { engine };
    let sd = space.spin_dim();
    let mut rho = DMatrix::<C64>::zeros(sd, sd);
    let mut weight = 0.0;
    let mut runs = 0;
    for idx in 0..space.mode_dim() {
        let (_, fock) = space.decompose(idx * sd);
        let p: f64 = fock
            .iter()
            .zip(nbar)
            .map(|(&n, &nb)| if nb == 0.0 { if n == 0 { 1.0 } else { 0.0 } } else { (nb / (1.0 + nb)).powi(n as i32) / (1.0 + nb) })
            .product();
        if p <= cutoff {
            continue;
        }
        let initial = SimState::basis(space, spins, &fock)?;
        let run = run_program(program, &initial, engine, options)?;
        rho += reduced_spin_state(&run.state) * C64::from(p);
        weight += p;
        runs += 1;
    }
    Ok(ThermalRun { spin_state: rho / C64::from(weight), weight, runs })
}

/// Spin-configuration populations after running `build(d)` for each duration `d`.
pub fn scan_durations(build: impl Fn(f64) -> Result<PulseProgram>, initial: &SimState, durations: &[f64], engine: Engine, options: &RunOptions) -> Result<Vec<Vec<f64>>> {
    durations
        .iter()
        .map(|&d| run_program(&build(d)?, initial, engine, options).map(|r| crate::hilbert::measure_populations(&r.state)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::LambDickeTensor;
    use crate::hilbert::ModeSpec;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn leibfried(eta: f64) -> (DriveSpec, f64) {
        let delta = 2.0 * PI * 26e3;
        let omega = delta / (6.0 * eta);
        let ld = LambDickeTensor { eta: DMatrix::from_row_slice(1, 2, &[eta, -eta]), mode_frequencies: vec![2.0 * PI * 3.6e6] };
        (DriveSpec::z_branch(vec![omega; 2], vec![0.0; 2], -0.5, 1.5, ld, vec![delta]).unwrap(), 2.0 * PI / delta)
    }

    fn bell(space: &SpaceSpec) -> SimState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
        amps[0] = C64::new(r, 0.0);
        amps[3] = C64::new(0.0, r);
        SimState::new(space.clone(), amps).unwrap()
    }

    #[test]
    fn empty_program_is_identity() {
        let space = SpaceSpec::new(2, vec![ModeSpec::new("m", 1.0, 3)]).unwrap();
        let psi = SimState::ground(&space);
        let run = run_program(&PulseProgram::new(), &psi, Engine::Both, &RunOptions::default()).unwrap();
        assert_eq!(run.state, psi);
        assert_eq!(run.engine_overlap, Some(1.0));
    }

    #[test]
    fn leibfried_sequence_gives_bell_state() {
        let space = SpaceSpec::new(2, vec![ModeSpec::new("str", 2.0 * PI * 3.6e6, 20)]).unwrap();
        let (drive, tg) = leibfried(0.2);
        let program = PulseProgram::new().rotation(FRAC_PI_2, FRAC_PI_2).displacement(drive, tg).rotation(FRAC_PI_2, PI).rotation(FRAC_PI_2, FRAC_PI_2);
        let run = run_program(&program, &SimState::ground(&space), Engine::Both, &RunOptions::default()).unwrap();
        assert!(1.0 - run.state.overlap(&bell(&space)) < 1e-12);
        assert!(1.0 - run.engine_overlap.unwrap() < 1e-7);
        assert_eq!(run.gate_time, tg);
    }

    #[test]
    fn thermal_average_of_closed_gate_is_motion_independent() {
        let space = SpaceSpec::new(2, vec![ModeSpec::new("str", 2.0 * PI * 3.6e6, 20)]).unwrap();
        let (drive, tg) = leibfried(0.2);
        let program = PulseProgram::new().rotation(FRAC_PI_2, FRAC_PI_2).displacement(drive, tg).rotation(FRAC_PI_2, PI).rotation(FRAC_PI_2, FRAC_PI_2);
        let th = run_thermal(&program, &space, 0, &[0.3], Engine::Analytic, &RunOptions::default(), 1e-6).unwrap();
        assert!(th.runs > 3 && th.weight > 0.999);
        assert!((th.spin_state[(0, 0)].re - 0.5).abs() < 1e-9);
        assert!((th.spin_state[(3, 0)] - C64::new(0.0, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn rejects_malformed_programs() {
        let space = SpaceSpec::new(2, vec![ModeSpec::new("m", 1.0, 3)]).unwrap();
        let psi = SimState::ground(&space);
        let bad = PulseProgram::new().idle(-1.0);
        assert!(run_program(&bad, &psi, Engine::Analytic, &RunOptions::default()).is_err());
        let bad = PulseProgram { segments: vec![Segment::Rotation { theta: 1.0, phi: 0.0, targets: vec![2] }] };
        assert!(run_program(&bad, &psi, Engine::Analytic, &RunOptions::default()).is_err());
    }
}
