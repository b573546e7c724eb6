//! Dispatch of a validated scenario to the simulation modules.

use std::f64::consts::PI;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use trapsim::crystal::{lamb_dicke, solve, CrystalSolution, IonSpecies, LambDickeTensor, TrapConfiguration, Well};
use trapsim::drive::{rabi_solution, DriveSpec, Form, RabiProblem, TwoLevel};
use trapsim::gate::{analytic_propagator, fit_fringe, pair_density, parity_scan_density, run_program, schmitz_phase_check, Engine, PulseProgram, RunOptions, Segment};
use trapsim::hilbert::{displacement_matrix_element, measure_populations, propagate, reduced_spin_state, sample_shots, spin_label, ModeSpec, PropagateOptions, SimState, SpaceSpec};
use trapsim::ising::{
    adiabatic_run, all_right, bias_field, coupling_matrix, crossover_curve, exact_vs_effective, ground_state_crossover, ising_model, steepness, weaker_dressing, BiasMode, IsingModel,
    Profile, RampSchedule,
};
use trapsim::C64;

use crate::output::{num, Outcome, Table};
use crate::quantity::Dimension;
use crate::scenario::{BiasName, BranchName, CouplingSource, CrossoverMethod, EngineName, Kind, Points, ProfileBlock, Pulse, Scenario, Trap};

/// Run-wide settings from flags and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Threshold for invariant checks (norm, engine agreement, loop closure).
    pub tol: f64,
    pub dim_cap: usize,
    /// Overrides `experiment.engine`.
    pub engine: Option<EngineName>,
    pub jobs: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { tol: 1e-7, dim_cap: trapsim::hilbert::DEFAULT_DIMENSION_CAP, engine: None, jobs: 1 }
    }
}

pub fn propagate_options() -> PropagateOptions {
    PropagateOptions::default()
}

pub fn execute(scenario: &Scenario, settings: &Settings) -> Result<Outcome> {
    let kind = scenario.experiment.kind;
    let outcome = match kind {
        Kind::Modes => modes(scenario),
        Kind::Rabi => rabi(scenario, settings),
        Kind::Gate => gate(scenario, settings),
        Kind::IsingRamp => ising_ramp(scenario, settings),
        Kind::IsingCrossover => crossover(scenario),
        Kind::Couplings => couplings(scenario),
        Kind::ExactVsEffective => exact(scenario, settings),
    };
    outcome.with_context(|| format!("{} experiment", kind.name()))
}

fn species(trap: &Trap) -> Result<IonSpecies> {
    Ok(IonSpecies::new(trap.mass.to(Dimension::Mass)?, trap.charge as f64 * trapsim::units::ELEMENTARY_CHARGE)?)
}

fn crystal(scenario: &Scenario) -> Result<(IonSpecies, CrystalSolution)> {
    let trap = scenario.trap.as_ref().context("missing [trap]")?;
    let sp = species(trap)?;
    let config = match (&trap.ions, &trap.frequencies) {
        (Some(n), Some(f)) => TrapConfiguration::linear(sp, *n, [f[0].to(Dimension::Frequency)?, f[1].to(Dimension::Frequency)?, f[2].to(Dimension::Frequency)?])?,
        _ => {
            let mut wells = Vec::with_capacity(trap.well.len());
            for w in &trap.well {
                let f = [w.frequencies[0].to(Dimension::Frequency)?, w.frequencies[1].to(Dimension::Frequency)?, w.frequencies[2].to(Dimension::Frequency)?];
                let p = [w.position[0].to(Dimension::Length)?, w.position[1].to(Dimension::Length)?, w.position[2].to(Dimension::Length)?];
                wells.push(Well::aligned(f, p));
            }
            TrapConfiguration::new(sp, wells)?
        }
    };
    Ok((sp, solve(&config)?))
}

/// Lamb-Dicke tensor of the selected modes, ascending in frequency along the axis.
fn selected_modes(scenario: &Scenario, sp: &IonSpecies, sol: &CrystalSolution) -> Result<LambDickeTensor> {
    let modes = scenario.modes.as_ref().context("missing [modes]")?;
    let drive = scenario.drive.as_ref().context("missing [drive]")?;
    let mut along = sol.modes_along(modes.axis.index());
    along.sort_by(|&a, &b| sol.mode_frequencies[a].total_cmp(&sol.mode_frequencies[b]));
    let chosen: Vec<usize> = if modes.select.is_empty() {
        along.clone()
    } else {
        modes
            .select
            .iter()
            .map(|&k| along.get(k).copied().with_context(|| format!("modes.select index {k} out of range ({} modes along the axis)", along.len())))
            .collect::<Result<_>>()?
    };
    let k = [drive.wavevector[0].to(Dimension::Wavevector)?, drive.wavevector[1].to(Dimension::Wavevector)?, drive.wavevector[2].to(Dimension::Wavevector)?];
    Ok(lamb_dicke(sol, sp, &vec![k; sol.n_ions()])?.select(&chosen)?)
}

fn build_drive(scenario: &Scenario, ld: LambDickeTensor) -> Result<DriveSpec> {
    let d = scenario.drive.as_ref().context("missing [drive]")?;
    let n = ld.n_ions();
    let rabi = vec![d.rabi.to(Dimension::Frequency)?; n];
    let phases = if d.phases.is_empty() {
        vec![0.0; n]
    } else {
        ensure!(d.phases.len() == n, "drive.phases has {} entries for {n} ions", d.phases.len());
        d.phases.iter().map(|q| q.to(Dimension::Angle)).collect::<Result<_>>()?
    };
    Ok(match d.branch {
        BranchName::Z => {
            let det = d.detuning.as_ref().context("drive.detuning")?;
            let w = *ld.mode_frequencies.get(det.mode).with_context(|| format!("drive.detuning.mode {} out of range", det.mode))?;
            DriveSpec::z_branch_at(rabi, phases, d.alpha[0], d.alpha[1], ld, w + det.value.to(Dimension::Frequency)?)?
        }
        BranchName::Xy => {
            let carrier = d.carrier_detuning.as_ref().map(|q| q.to(Dimension::Frequency)).transpose()?.unwrap_or(0.0);
            DriveSpec::xy_branch(rabi, phases, d.alpha[0], d.alpha[1], ld, carrier)?
        }
    })
}

fn space_for(drive: &DriveSpec, n_max: usize, cap: usize) -> Result<SpaceSpec> {
    let modes = drive.lamb_dicke.mode_frequencies.iter().enumerate().map(|(m, &w)| ModeSpec::new(format!("mode{m}"), w, n_max)).collect();
    Ok(SpaceSpec::with_cap(drive.n_ions(), modes, cap)?)
}

fn linspace(points: &Points, dim: Dimension) -> Result<Vec<f64>> {
    let (a, b) = (points.start.to(dim)?, points.stop.to(dim)?);
    ensure!(points.points >= 1, "at least one point is required");
    if points.points == 1 {
        return Ok(vec![a]);
    }
    Ok((0..points.points).map(|k| a + (b - a) * k as f64 / (points.points - 1) as f64).collect())
}

fn engine(scenario: &Scenario, settings: &Settings) -> Engine {
    match settings.engine.or(scenario.experiment.engine).unwrap_or(EngineName::Analytic) {
        EngineName::Analytic => Engine::Analytic,
        EngineName::Integrate => Engine::Integrate,
        EngineName::Both => Engine::Both,
    }
}

fn populations_table(p: &[f64], n: usize) -> Table {
    let mut t = Table::new("populations", &["config", "probability"]);
    for (s, v) in p.iter().enumerate() {
        t.push(vec![spin_label(s, n), num(*v)]);
    }
    t
}

fn shots_table(state: &SimState, shots: usize, seed: u64) -> Result<Table> {
    let counts = sample_shots(state, shots, seed)?;
    let mut t = Table::new("shots", &["config", "counts"]);
    for (s, c) in counts.iter().enumerate() {
        t.push(vec![spin_label(s, state.space.n_spins), c.to_string()]);
    }
    Ok(t)
}

fn check_norm(out: &mut Outcome, state: &SimState, tol: f64) {
    let err = (state.norm() - 1.0).abs();
    out.summary("norm_error", err);
    if err > tol {
        out.breach(format!("state norm deviates from 1 by {err:e}"));
    }
}

fn modes(scenario: &Scenario) -> Result<Outcome> {
    let (_, sol) = crystal(scenario)?;
    let mut out = Outcome::default();
    out.warnings.extend(sol.warnings.iter().cloned());
    let mut t = Table::new("modes", &["kind", "index", "axis", "value0", "value1", "value2"]);
    for i in 0..sol.n_ions() {
        let p = sol.position(i);
        t.push(vec!["position_m".into(), i.to_string(), String::new(), num(p[0]), num(p[1]), num(p[2])]);
    }
    for axis in 0..3 {
        let mut along = sol.modes_along(axis);
        along.sort_by(|&a, &b| sol.mode_frequencies[a].total_cmp(&sol.mode_frequencies[b]));
        let Some(&lowest) = along.first() else { continue };
        let name = ["x", "y", "z"][axis];
        for (k, &m) in along.iter().enumerate() {
            let w = sol.mode_frequencies[m];
            let ratio = w / sol.mode_frequencies[lowest];
            t.push(vec!["frequency".into(), k.to_string(), name.into(), num(w), num(w / (2.0 * PI)), num(ratio)]);
            out.summary(&format!("ratio_{name}_{k}"), ratio);
        }
    }
    out.summary("n_modes", sol.mode_frequencies.len() as f64);
    out.tables.push(t);
    Ok(out)
}

fn rabi(scenario: &Scenario, settings: &Settings) -> Result<Outcome> {
    let block = scenario.rabi.as_ref().context("missing [rabi]")?;
    let (sp, sol) = crystal(scenario)?;
    let ld = selected_modes(scenario, &sp, &sol)?;
    ensure!(ld.n_ions() == 1 && ld.n_modes() == 1, "the rabi experiment needs one ion and one selected mode");
    let drive = build_drive(scenario, ld)?;
    ensure!(drive.branch == trapsim::drive::Branch::Xy, "the rabi experiment needs an xy-branch drive");
    let n_max = scenario.modes.as_ref().map(|m| m.n_max).unwrap_or(15);
    let space = space_for(&drive, n_max, settings.dim_cap)?;
    let target = block.fock as i64 + block.sideband;
    ensure!(block.fock <= n_max && (0..=n_max as i64).contains(&target), "fock level and sideband must stay within n_max = {n_max}");
    let target = target as usize;
    let w = drive.lamb_dicke.mode_frequencies[0];
    let eta = drive.lamb_dicke.eta[(0, 0)];
    let [_, a1, a2, _] = drive.alpha;
    let i = C64::new(0.0, 1.0);
    // ⟨↑|σ₊|↓⟩ = 2 cancels the ½ of the xy-branch prefactor
    let y = -i * drive.rabi[0] * C64::new(a1, -a2) * C64::from_polar(1.0, drive.phases[0]) * displacement_matrix_element(target, block.fock, C64::new(0.0, eta));
    let delta = drive.carrier_detuning - block.sideband as f64 * w;

    let h = drive.hamiltonian(&space, Form::Full)?;
    let mut state = SimState::basis(&space, 0, &[block.fock])?;
    let mut t = 0.0;
    let mut out = Outcome::default();
    out.warnings.extend(drive.warnings());
    if let Some(w) = (RabiProblem { delta, y, t: 0.0 }).resolved_sideband_warning(w) {
        out.warnings.push(w);
    }
    let mut table = Table::new("rabi", &["time_s", "p_up", "p_target", "p_target_closed_form"]);
    let mut worst: f64 = 0.0;
    let target_index = space.index(1, &[target]);
    for time in linspace(&block.times, Dimension::Time)? {
        ensure!(time >= t, "rabi.times must be increasing");
        if time > t {
            state = propagate(&h, &state, t, time, &propagate_options())?.state;
            t = time;
        }
        let p_up = measure_populations(&state)[1];
        let p_target = state.amplitudes[target_index].norm_sqr();
        let closed = rabi_solution(&RabiProblem { delta, y, t: time }, TwoLevel { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) }).up.norm_sqr();
        worst = worst.max((p_target - closed).abs());
        table.push(vec![num(time), num(p_up), num(p_target), num(closed)]);
    }
    out.tables.push(table);
    out.summary("rabi_coupling", y.norm());
    out.summary("detuning", delta);
    out.summary("max_closed_form_difference", worst);
    check_norm(&mut out, &state, settings.tol);
    Ok(out)
}

/// Loop length `2π/|δ_ref|` of the reference mode.
fn loop_time(drive: &DriveSpec, mode: usize) -> Result<f64> {
    let d = *drive.detunings.get(mode).with_context(|| format!("reference mode {mode} out of range"))?;
    ensure!(d != 0.0, "reference mode {mode} has zero detuning");
    Ok(2.0 * PI / d.abs())
}

fn pulse_program(pulses: &[Pulse], drive: &DriveSpec, loop_t: f64) -> Result<PulseProgram> {
    let mut program = PulseProgram::new();
    for p in pulses {
        program.segments.push(match p {
            Pulse::Rotation { theta, phi, targets } => Segment::Rotation { theta: theta.to(Dimension::Angle)?, phi: phi.to(Dimension::Angle)?, targets: targets.clone() },
            Pulse::Displacement { loops, duration } => {
                let duration = match (loops, duration) {
                    (Some(l), _) => l * loop_t,
                    (None, Some(q)) => q.to(Dimension::Time)?,
                    (None, None) => bail!("displacement without a length"),
                };
                Segment::Displacement { drive: drive.clone(), duration }
            }
            Pulse::Idle { duration } => Segment::Idle { duration: duration.to(Dimension::Time)? },
            Pulse::Zphase { angle, targets } => Segment::ZPhase { angle: angle.to(Dimension::Angle)?, targets: targets.clone() },
        });
    }
    Ok(program)
}

/// `Σ Φ(↓↓) − Φ(↓↑)` of the geometric phases over all displacement segments.
fn differential_phase(program: &PulseProgram) -> Result<f64> {
    let mut total = 0.0;
    for seg in &program.segments {
        if let Segment::Displacement { drive, duration } = seg {
            let ledger = analytic_propagator(drive, 0.0, *duration)?;
            total += ledger.geometric(0b00) - ledger.geometric(0b01);
        }
    }
    Ok(total)
}

fn gate(scenario: &Scenario, settings: &Settings) -> Result<Outcome> {
    let block = scenario.gate.as_ref().context("missing [gate]")?;
    let (sp, sol) = crystal(scenario)?;
    let ld = selected_modes(scenario, &sp, &sol)?;
    let mut drive = build_drive(scenario, ld)?;
    let reference = block.reference_mode.or(scenario.drive.as_ref().and_then(|d| d.detuning.as_ref().map(|d| d.mode))).unwrap_or(0);
    let loop_t = if drive.branch == trapsim::drive::Branch::Z { loop_time(&drive, reference)? } else { 0.0 };
    let mut out = Outcome::default();
    let n = drive.n_ions();

    let mut scale = 1.0;
    if let Some(target) = &block.differential_phase {
        ensure!(n >= 2, "phase calibration needs at least two ions");
        ensure!(drive.branch == trapsim::drive::Branch::Z, "phase calibration needs a z-branch drive");
        let target = target.to(Dimension::Angle)?;
        let current = differential_phase(&pulse_program(&block.pulse, &drive, loop_t)?)?;
        ensure!(current != 0.0 && current.signum() == target.signum(), "the drive gives a differential phase of {current:e} rad, which cannot be scaled to {target:e} rad");
        scale = (target / current).sqrt();
        drive = drive.scaled(scale);
    }
    out.warnings.extend(drive.warnings());
    let program = pulse_program(&block.pulse, &drive, loop_t)?;
    let n_max = scenario.modes.as_ref().map(|m| m.n_max).unwrap_or(15);
    let space = space_for(&drive, n_max, settings.dim_cap)?;
    let options = RunOptions { propagate: propagate_options(), ..RunOptions::default() };
    let engine = engine(scenario, settings);
    let run = run_program(&program, &SimState::ground(&space), engine, &options)?;
    out.warnings.extend(run.warnings.iter().cloned());

    let populations = measure_populations(&run.state);
    out.tables.push(populations_table(&populations, n));
    let mut phases = Table::new("phases", &["segment", "config", "geometric", "dynamic", "global", "total"]);
    let mut residual: f64 = 0.0;
    for seg in &run.ledgers {
        let l = &seg.ledger;
        residual = residual.max(l.residual_displacement());
        for s in 0..l.n_configs() {
            phases.push(vec![seg.segment.to_string(), spin_label(s, n), num(l.geometric(s)), num(l.dynamic(s)), num(l.global()), num(l.phase(s))]);
        }
    }
    if !run.ledgers.is_empty() {
        out.tables.push(phases);
        out.summary("residual_displacement", residual);
    }
    out.summary("rabi_scale", scale);
    out.summary("rabi_frequency_hz", drive.rabi[0] / (2.0 * PI));
    out.summary("gate_time", run.gate_time);
    if drive.branch == trapsim::drive::Branch::Z && n >= 2 {
        out.summary("differential_phase", differential_phase(&program)?);
    }
    if n >= 2 {
        let rho = pair_density(&reduced_spin_state(&run.state), n, 0, 1)?;
        let grid: Vec<f64> = (0..block.parity_points.max(3)).map(|k| k as f64 * PI / block.parity_points.max(3) as f64).collect();
        let parity = parity_scan_density(&rho, &grid)?;
        let fit = fit_fringe(&grid, &parity)?;
        let mut t = Table::new("parity", &["phi", "parity"]);
        for (p, v) in grid.iter().zip(&parity) {
            t.push(vec![num(*p), num(*v)]);
        }
        out.tables.push(t);
        let (p00, p11) = (rho[(0, 0)].re, rho[(3, 3)].re);
        out.summary("parity_contrast", fit.contrast());
        out.summary("parity_phase", fit.phase());
        out.summary("bell_fidelity", (p00 + p11) / 2.0 + rho[(0, 3)].norm());
    }
    if let Some(overlap) = run.engine_overlap {
        out.summary("engine_overlap", overlap);
        if 1.0 - overlap > settings.tol {
            out.breach(format!("analytic and integrated engines disagree: 1 − overlap = {:e}", 1.0 - overlap));
        }
    }
    if let Some(c) = &block.commensurate {
        let report = schmitz_phase_check(&drive, c.stretch, c.com)?;
        out.warnings.extend(report.warnings.iter().cloned());
        let closure = report.residual_displacement.iter().cloned().fold(0.0, f64::max);
        out.summary("commensurate_detuning_ratio", report.detuning_ratio);
        out.summary("commensurate_residual_displacement", closure);
        out.summary("commensurate_dynamic_ratio", report.dynamic_ratio);
        out.summary("commensurate_phi_str", report.phi_str);
        out.summary("commensurate_phi_com", report.phi_com);
        if !report.closed(settings.tol) {
            out.breach(format!("modes do not close at the commensurate gate time: residual {closure:e}"));
        }
    }
    if scenario.experiment.shots > 0 {
        out.tables.push(shots_table(&run.state, scenario.experiment.shots, scenario.experiment.seed)?);
    }
    check_norm(&mut out, &run.state, settings.tol);
    Ok(out)
}

fn profile(p: &ProfileBlock) -> Result<Profile> {
    Ok(match p {
        ProfileBlock::Constant { value } => Profile::Constant(*value),
        ProfileBlock::Linear { from, to } => Profile::Linear { from: *from, to: *to },
        ProfileBlock::Exponential { from, to, tau } => Profile::Exponential { from: *from, to: *to, tau: tau.to(Dimension::Time)? },
    })
}

fn ising_base(scenario: &Scenario) -> Result<(IsingModel, BiasMode, Vec<String>)> {
    let block = scenario.ising.as_ref().context("missing [ising]")?;
    let b = block.field.to(Dimension::Frequency)?;
    let bias = match block.bias {
        BiasName::Compensated => BiasMode::Compensated,
        BiasName::Included => BiasMode::Included,
    };
    Ok(match block.source {
        CouplingSource::Uniform => {
            let n = block.spins.context("ising.spins")?;
            let j = block.coupling.as_ref().context("ising.coupling")?.to(Dimension::Frequency)?;
            (IsingModel::uniform(n, j, b), bias, Vec::new())
        }
        CouplingSource::Drive => {
            let (sp, sol) = crystal(scenario)?;
            let drive = build_drive(scenario, selected_modes(scenario, &sp, &sol)?)?;
            let n = drive.n_ions();
            (ising_model(&drive, vec![b; n])?, bias, drive.warnings())
        }
    })
}

fn ising_ramp(scenario: &Scenario, settings: &Settings) -> Result<Outcome> {
    let ramp = scenario.ramp.as_ref().context("missing [ramp]")?;
    let (base, bias, warnings) = ising_base(scenario)?;
    let n = base.n_spins();
    let schedule = RampSchedule { total_time: ramp.duration.to(Dimension::Time)?, j_scale: profile(&ramp.coupling)?, b_scale: profile(&ramp.field)?, steps: ramp.steps };
    let run = adiabatic_run(&base, &schedule, &all_right(n), bias)?;
    let mut out = Outcome { warnings, ..Outcome::default() };
    let mut t = Table::new("ramp", &["time_s", "gap", "ground_overlap", "magnetization"]);
    for s in &run.snapshots {
        t.push(vec![num(s.time), num(s.gap), num(s.ground_overlap), num(s.magnetization)]);
    }
    out.tables.push(t);
    out.tables.push(populations_table(&run.populations, n));
    let mut j = Table::new("couplings", &["i", "j", "coupling"]);
    for a in 0..n {
        for b in a + 1..n {
            j.push(vec![a.to_string(), b.to_string(), num(base.j[(a, b)])]);
        }
    }
    out.tables.push(j);
    out.summary("ghz_fidelity", run.ghz_fidelity);
    out.summary("min_gap", run.min_gap);
    out.summary("final_ground_overlap", run.final_ground_overlap);
    let last = run.populations.len() - 1;
    out.summary("aligned_population", run.populations[0] + run.populations[last]);
    let state = SimState::new(SpaceSpec::spins(n)?, run.state.as_slice().to_vec())?;
    if n >= 2 {
        let rho = pair_density(&reduced_spin_state(&state), n, 0, 1)?;
        let grid: Vec<f64> = (0..32).map(|k| k as f64 * PI / 32.0).collect();
        out.summary("parity_contrast", fit_fringe(&grid, &parity_scan_density(&rho, &grid)?)?.contrast());
    }
    if run.final_ground_overlap < 0.99 {
        out.warnings.push(format!("ramp is not adiabatic: final ground-space weight {:.6}", run.final_ground_overlap));
    }
    if scenario.experiment.shots > 0 {
        out.tables.push(shots_table(&state, scenario.experiment.shots, scenario.experiment.seed)?);
    }
    check_norm(&mut out, &state, settings.tol);
    Ok(out)
}

fn crossover(scenario: &Scenario) -> Result<Outcome> {
    let c = scenario.crossover.as_ref().context("missing [crossover]")?;
    let (lo, hi) = (c.ratio_from.ln(), c.ratio_to.ln());
    let ratios: Vec<f64> = (0..c.points).map(|k| (lo + (hi - lo) * k as f64 / (c.points - 1) as f64).exp()).collect();
    let curves: Vec<Vec<f64>> = c
        .spins
        .par_iter()
        .map(|&n| match c.method {
            CrossoverMethod::Ground => {
                ensure!((2..=10).contains(&n), "crossover spins must be between 2 and 10");
                Ok(ground_state_crossover(n, &ratios))
            }
            CrossoverMethod::Ramp => Ok(crossover_curve(n, &ratios, 1.0, c.ramp_rate)?),
        })
        .collect::<Result<_>>()?;
    let mut header = vec!["ratio".to_string()];
    header.extend(c.spins.iter().map(|n| format!("n{n}")));
    let mut t = Table { name: "crossover".into(), header, rows: Vec::new() };
    for (k, r) in ratios.iter().enumerate() {
        let mut row = vec![num(*r)];
        row.extend(curves.iter().map(|curve| num(curve[k])));
        t.push(row);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    for (n, curve) in c.spins.iter().zip(&curves) {
        out.summary(&format!("steepness_n{n}"), steepness(&ratios, curve));
        out.summary(&format!("final_n{n}"), *curve.last().unwrap_or(&0.0));
    }
    Ok(out)
}

/// Least-squares slope of `ln|J|` against `ln r` over all coupled pairs.
pub fn power_law_exponent(distances: &[f64], couplings: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = distances.iter().zip(couplings).filter(|(_, j)| **j != 0.0).map(|(d, j)| (d.ln(), j.abs().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    -sxy / sxx
}

fn couplings(scenario: &Scenario) -> Result<Outcome> {
    let (sp, sol) = crystal(scenario)?;
    let drive = build_drive(scenario, selected_modes(scenario, &sp, &sol)?)?;
    let j = coupling_matrix(&drive)?;
    let bias = bias_field(&drive)?;
    let n = drive.n_ions();
    let mut out = Outcome { warnings: drive.warnings(), ..Outcome::default() };
    let mut t = Table::new("couplings", &["i", "j", "distance_m", "coupling"]);
    let (mut ds, mut js) = (Vec::new(), Vec::new());
    let mut signs = [0usize; 2];
    for a in 0..n {
        for b in a + 1..n {
            let (pa, pb) = (sol.position(a), sol.position(b));
            let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt();
            t.push(vec![a.to_string(), b.to_string(), num(d), num(j[(a, b)])]);
            ds.push(d);
            js.push(j[(a, b)]);
            signs[usize::from(j[(a, b)] > 0.0)] += 1;
        }
    }
    out.tables.push(t);
    let mut bt = Table::new("bias", &["ion", "bias"]);
    for (i, b) in bias.iter().enumerate() {
        bt.push(vec![i.to_string(), num(*b)]);
    }
    out.tables.push(bt);
    if ds.len() >= 2 {
        out.summary("power_law_exponent", power_law_exponent(&ds, &js));
    }
    if signs[0] > 0 && signs[1] > 0 {
        out.warnings.push(format!("couplings change sign: {} ferromagnetic, {} antiferromagnetic pairs", signs[0], signs[1]));
    }
    out.summary("ferromagnetic_pairs", signs[0] as f64);
    out.summary("antiferromagnetic_pairs", signs[1] as f64);
    out.summary("max_abs_coupling", js.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    Ok(out)
}

fn exact(scenario: &Scenario, settings: &Settings) -> Result<Outcome> {
    let block = scenario.exact.as_ref().context("missing [exact]")?;
    let (sp, sol) = crystal(scenario)?;
    let drive = build_drive(scenario, selected_modes(scenario, &sp, &sol)?)?;
    let n = drive.n_ions();
    ensure!(n >= 2, "the comparison needs at least two ions");
    let n_max = scenario.modes.as_ref().map(|m| m.n_max).unwrap_or(15);
    let dim = (1usize << n) * (n_max + 1).pow(drive.n_modes() as u32);
    ensure!(dim <= settings.dim_cap, "Hilbert-space dimension {dim} exceeds the cap {}", settings.dim_cap);
    let j01 = coupling_matrix(&drive)?[(0, 1)];
    let b = block.field_ratio * j01.abs();
    let loop_t = loop_time(&drive, 0)?;
    let times: Vec<f64> = block.loops.iter().map(|l| l * loop_t).collect();
    let mut variants = vec![("base".to_string(), drive.clone())];
    if let Some(f) = block.weaker_by {
        ensure!(f > 0.0, "exact.weaker_by must be positive");
        variants.push(("weaker".to_string(), weaker_dressing(&drive, f)));
    }
    let psi = all_right(n);
    let results: Vec<_> = variants
        .par_iter()
        .map(|(_, d)| exact_vs_effective(d, &vec![b; n], &psi, &times, n_max, &propagate_options()))
        .collect::<std::result::Result<_, _>>()?;
    let mut out = Outcome { warnings: drive.warnings(), ..Outcome::default() };
    let mut t = Table::new("comparison", &["dressing", "epsilon", "time_s", "infidelity", "entanglement_entropy", "population_error"]);
    for ((label, _), r) in variants.iter().zip(&results) {
        for p in &r.points {
            t.push(vec![label.clone(), num(r.epsilon), num(p.time), num(p.infidelity), num(p.entanglement_entropy), num(p.population_error)]);
        }
        out.summary(&format!("{label}_epsilon"), r.epsilon);
        out.summary(&format!("{label}_final_infidelity"), r.final_infidelity());
        if r.max_leakage > propagate_options().leakage_threshold {
            out.warnings.push(format!("{label}: Fock truncation leakage {:e}", r.max_leakage));
        }
    }
    if results.len() == 2 {
        out.summary("infidelity_ratio", results[0].final_infidelity() / results[1].final_infidelity());
    }
    out.summary("coupling_01", j01);
    out.summary("field", b);
    out.tables.push(t);
    Ok(out)
}
