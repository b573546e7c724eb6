use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use trapsim::crystal::{lamb_dicke, solve, IonSpecies, LambDickeTensor, TrapConfiguration};
use trapsim::drive::DriveSpec;
use trapsim::gate::{
    analytic_propagator, echo_dynamic_residual, fit_fringe, parity_scan, run_program, scan_durations, schmitz_phase_check, Engine, PulseProgram, RunOptions,
};
use trapsim::hilbert::{measure_populations, ModeSpec, SimState, SpaceSpec};

const TWO_PI: f64 = 2.0 * PI;

fn raman_k(wavelength: f64) -> f64 {
    2f64.sqrt() * TWO_PI / wavelength
}

/// Two-ion axial modes, ascending in frequency: COM then STR.
fn axial_pair(mass_u: f64, wz: f64, k: f64) -> LambDickeTensor {
    let sp = IonSpecies::from_atomic(mass_u, 1).unwrap();
    let sol = solve(&TrapConfiguration::linear(sp, 2, [5.0 * wz, 6.0 * wz, wz]).unwrap()).unwrap();
    let mut axial = sol.modes_along(2);
    axial.sort_by(|&a, &b| sol.mode_frequencies[a].total_cmp(&sol.mode_frequencies[b]));
    lamb_dicke(&sol, &sp, &[[0.0, 0.0, k]; 2]).unwrap().select(&axial).unwrap()
}

fn bell(space: &SpaceSpec) -> SimState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    amps[0] = C64::new(r, 0.0);
    amps[3] = C64::new(0.0, r);
    SimState::new(space.clone(), amps).unwrap()
}

fn leibfried() -> (DriveSpec, f64, SpaceSpec) {
    let all = axial_pair(9.012182, TWO_PI * 3.6e6, raman_k(313e-9));
    let stretch = all.select(&[1]).unwrap();
    let delta = TWO_PI * 26e3;
    let eta = stretch.eta[(0, 0)].abs();
    let omega = delta / (6.0 * eta);
    let space = SpaceSpec::new(2, vec![ModeSpec::new("str", stretch.mode_frequencies[0], 20)]).unwrap();
    let drive = DriveSpec::z_branch_at(vec![omega; 2], vec![0.0; 2], -0.5, 1.5, stretch.clone(), stretch.mode_frequencies[0] + delta).unwrap();
    (drive, TWO_PI / delta, space)
}

#[test]
fn stretch_mode_has_antisymmetric_coupling() {
    let all = axial_pair(9.012182, TWO_PI * 3.6e6, raman_k(313e-9));
    assert!((all.mode_frequencies[1] / all.mode_frequencies[0] - 3f64.sqrt()).abs() < 1e-9);
    assert!((all.eta[(0, 0)] - all.eta[(0, 1)]).abs() < 1e-12);
    assert!((all.eta[(1, 0)] + all.eta[(1, 1)]).abs() < 1e-12);
}

#[test]
fn leibfried_gate_from_crystal() {
    let (drive, tg, space) = leibfried();
    let ledger = analytic_propagator(&drive, 0.0, tg).unwrap();
    assert!((ledger.geometric(0b01) + FRAC_PI_2).abs() < 1e-9);
    assert!(ledger.residual_displacement() < 1e-10);
    let program = PulseProgram::new().rotation(FRAC_PI_2, FRAC_PI_2).displacement(drive, tg).rotation(FRAC_PI_2, PI).rotation(FRAC_PI_2, FRAC_PI_2);
    let run = run_program(&program, &SimState::ground(&space), Engine::Both, &RunOptions::default()).unwrap();
    assert!(1.0 - run.state.overlap(&bell(&space)) < 1e-6);
    assert!(1.0 - run.engine_overlap.unwrap() < 1e-7);
    let phases: Vec<f64> = (0..16).map(|k| k as f64 * PI / 16.0).collect();
    let fit = fit_fringe(&phases, &parity_scan(&run.state, &phases).unwrap()).unwrap();
    assert!((fit.contrast() - 1.0).abs() < 1e-6);
}

#[test]
fn gate_phase_scales_with_rabi_squared() {
    let (drive, tg, _) = leibfried();
    let base = analytic_propagator(&drive, 0.0, tg).unwrap().geometric(0b01);
    let doubled = analytic_propagator(&drive.scaled(2.0), 0.0, tg).unwrap().geometric(0b01);
    assert!((doubled / base - 4.0).abs() < 1e-9);
    // halving δ at fixed Ω and one loop: phase ∝ T/δ ∝ 1/δ²
    let mut slow = drive.clone();
    slow.detunings[0] /= 2.0;
    let half = analytic_propagator(&slow, 0.0, 2.0 * tg).unwrap().geometric(0b01);
    assert!((half / base - 4.0).abs() < 1e-9);
}

#[test]
fn commensurate_gate_closes_both_modes() {
    let all = axial_pair(9.012182, TWO_PI * 2.0e6, raman_k(313e-9));
    // place the drive so that δ_COM = −5 δ_STR
    let (w_com, w_str) = (all.mode_frequencies[0], all.mode_frequencies[1]);
    let d_str = (w_com - w_str) / 6.0;
    let drive = DriveSpec::z_branch_at(vec![TWO_PI * 200e3; 2], vec![0.0; 2], -0.25, 1.25, all, w_str + d_str).unwrap();
    assert!((drive.detunings[0] / drive.detunings[1] + 5.0).abs() < 1e-9);
    assert!(drive.detunings[1] < 0.0 && drive.detunings[0] > 0.0);
    let report = schmitz_phase_check(&drive, 1, 0).unwrap();
    assert!(report.closed(1e-10), "{:?}", report.residual_displacement);
    assert!((report.dynamic_ratio - 0.4).abs() < 1e-9);
    let tuned = schmitz_phase_check(&drive.scaled(report.rabi_scale_for_quarter_turn), 1, 0).unwrap();
    assert!((tuned.differential.abs() - FRAC_PI_2).abs() < 1e-9);
}

/// Radial x modes of two Mg ions with a 2·65 kHz splitting, ascending: ROC then COM.
fn radial_pair() -> LambDickeTensor {
    let sp = IonSpecies::from_atomic(24.985837, 1).unwrap();
    let (wx, wy) = (TWO_PI * 5e6, TWO_PI * 5.6e6);
    let target = TWO_PI * 130e3;
    let modes = |wz: f64| {
        let sol = solve(&TrapConfiguration::linear(sp, 2, [wx, wy, wz]).unwrap()).unwrap();
        let mut xs = sol.modes_along(0);
        xs.sort_by(|&a, &b| sol.mode_frequencies[a].total_cmp(&sol.mode_frequencies[b]));
        (sol, xs)
    };
    // the splitting grows with ωz; bisect for the target
    let (mut lo, mut hi) = (TWO_PI * 0.5e6, TWO_PI * 2e6);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (sol, xs) = modes(mid);
        if sol.mode_frequencies[xs[1]] - sol.mode_frequencies[xs[0]] < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (sol, xs) = modes(0.5 * (lo + hi));
    lamb_dicke(&sol, &sp, &[[raman_k(280e-9), 0.0, 0.0]; 2]).unwrap().select(&xs).unwrap()
}

fn radial_program(drive: &DriveSpec, pulse: f64, z_kick: f64) -> PulseProgram {
    PulseProgram::new()
        .rotation(FRAC_PI_2, FRAC_PI_2)
        .displacement(drive.clone(), pulse)
        .z_phase(z_kick)
        .rotation(PI, 0.0)
        .z_phase(z_kick)
        .displacement(drive.clone(), pulse)
        .rotation(FRAC_PI_2, PI)
        .rotation(FRAC_PI_2, FRAC_PI_2)
}

fn radial_drive() -> (DriveSpec, f64, SpaceSpec) {
    let ld = radial_pair();
    let delta = TWO_PI * 65e3;
    let (a0, a3) = (-0.25, 1.25);
    let eta2 = ld.eta[(0, 0)].powi(2) + ld.eta[(1, 0)].powi(2);
    let omega = (delta * delta / (32.0 * a3 * a3 * eta2)).sqrt();
    let wi = 0.5 * (ld.mode_frequencies[0] + ld.mode_frequencies[1]);
    let space = SpaceSpec::new(2, vec![ModeSpec::new("roc", ld.mode_frequencies[0], 15), ModeSpec::new("com", ld.mode_frequencies[1], 15)]).unwrap();
    let drive = DriveSpec::z_branch_at(vec![omega; 2], vec![0.0; 2], a0, a3, ld, wi).unwrap();
    (drive, TWO_PI / delta, space)
}

#[test]
fn radial_two_pulse_echo_gate() {
    let (drive, pulse, space) = radial_drive();
    assert!((drive.detunings[0] - TWO_PI * 65e3).abs() < 1e-3 && (drive.detunings[1] + TWO_PI * 65e3).abs() < 1e-3);
    let run = run_program(&radial_program(&drive, pulse, 0.0), &SimState::ground(&space), Engine::Both, &RunOptions::default()).unwrap();
    assert!(1.0 - run.state.overlap(&bell(&space)) < 1e-6);
    assert!(1.0 - run.engine_overlap.unwrap() < 1e-7);
    let (first, second) = (&run.ledgers[0].ledger, &run.ledgers[1].ledger);
    assert!(first.modes[1].dynamic[0].abs() > 0.1);
    assert!(echo_dynamic_residual(first, second, 1) < 1e-9);
    // each pulse: Φ(↓↓) − Φ(↓↑) = π/4
    assert!((first.geometric(0b00) - first.geometric(0b01) - PI / 4.0).abs() < 1e-9);
}

#[test]
fn echo_removes_injected_z_phases() {
    let (drive, pulse, space) = radial_drive();
    let reference = run_program(&radial_program(&drive, pulse, 0.0), &SimState::ground(&space), Engine::Analytic, &RunOptions::default()).unwrap();
    for kick in [0.3, -1.1, 2.0] {
        let run = run_program(&radial_program(&drive, pulse, kick), &SimState::ground(&space), Engine::Analytic, &RunOptions::default()).unwrap();
        assert!(1.0 - run.state.overlap(&reference.state) < 1e-12, "kick {kick}");
    }
}

#[test]
fn population_exchange_is_periodic_in_pulse_length() {
    let (drive, pulse, space) = radial_drive();
    let build = |t: f64| -> trapsim::Result<PulseProgram> {
        Ok(PulseProgram::new().rotation(FRAC_PI_2, FRAC_PI_2).displacement(drive.clone(), t).rotation(PI, 0.0).displacement(drive.clone(), t).rotation(FRAC_PI_2, PI).rotation(FRAC_PI_2, FRAC_PI_2))
    };
    let durations: Vec<f64> = (0..=8).map(|k| k as f64 * pulse).collect();
    let pops = scan_durations(build, &SimState::ground(&space), &durations, Engine::Analytic, &RunOptions::default()).unwrap();
    // the bare carrier sequence maps ↓↓ to ↑↑; each closure adds π/2 of ZZ phase
    for (k, p) in pops.iter().enumerate() {
        let expected_dd = [0.0, 0.5, 1.0, 0.5][k % 4];
        assert!((p[0] - expected_dd).abs() < 1e-9, "loop {k}: {p:?}");
        assert!((p[0] + p[3] - 1.0).abs() < 1e-9);
    }
    // between closures spin and motion are entangled and odd-parity states appear
    let open = scan_durations(build, &SimState::ground(&space), &[0.5 * pulse], Engine::Analytic, &RunOptions::default()).unwrap();
    assert!(open[0][1] + open[0][2] > 1e-3);
    let populations = measure_populations(&SimState::ground(&space));
    assert_eq!(populations[0], 1.0);
}
