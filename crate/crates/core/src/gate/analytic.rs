//! Closed-form propagator of the Lamb-Dicke z-branch drive.
//!
//! For spin configuration `s` the force on mode `m` is `F_m(t) a_m† + h.c.` with
//! `F_m = i Σ_i Ω_i η_mi f_i(s) e^{i(φ_i − δ_m t)}` and `f_i = α₀ + α₃ z_i`. The
//! propagator from `t0` to `t1` is `Π_m D_m(λ_{m,s}) e^{iΦ_s}` with
//!
//! * `λ_{m,s} = i Σ_i (Ω_i η_mi f_i / δ_m)(e^{−iδ_m Δt} − 1) e^{−iδ_m t0} e^{iφ_i}`
//! * `Φ_s = −Σ_m Σ_ij Ω_iΩ_jη_miη_mj f_i f_j cos(φ_i − φ_j) (δ_mΔt − sin δ_mΔt)/δ_m²`.
//!
//! `Φ_s` splits into a global part (`α₀²`), a dynamic part (`α₀α₃(z_i + z_j)`)
//! and a geometric part (`α₃² z_i z_j`, including `i = j`).

use nalgebra::DMatrix;

use crate::drive::{Branch, DriveSpec};
use crate::hilbert::{displacement_matrix, SimState};
use crate::{Error, Result, C64};

/// Per-mode contribution to the propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLedger {
    /// Displacement amplitude for each spin configuration.
    pub displacement: Vec<C64>,
    /// Geometric phase for each spin configuration, rad.
    pub geometric: Vec<f64>,
    /// Dynamic phase for each spin configuration, rad.
    pub dynamic: Vec<f64>,
    /// Configuration-independent phase, rad.
    pub global: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLedger {
    pub n_spins: usize,
    pub t0: f64,
    pub t1: f64,
    pub modes: Vec<ModeLedger>,
    pub warnings: Vec<String>,
}

impl PhaseLedger {
    pub fn n_configs(&self) -> usize {
        1 << self.n_spins
    }

    pub fn geometric(&self, config: usize) -> f64 {
        self.modes.iter().map(|m| m.geometric[config]).sum()
    }

    pub fn dynamic(&self, config: usize) -> f64 {
        self.modes.iter().map(|m| m.dynamic[config]).sum()
    }

    pub fn global(&self) -> f64 {
        self.modes.iter().map(|m| m.global).sum()
    }

    /// Full phase `Φ_s`.
    pub fn phase(&self, config: usize) -> f64 {
        self.geometric(config) + self.dynamic(config) + self.global()
    }

    /// Largest `|λ_{m,s}|` over modes and configurations.
    pub fn residual_displacement(&self) -> f64 {
        self.modes.iter().flat_map(|m| m.displacement.iter()).map(|l| l.norm()).fold(0.0, f64::max)
    }

    /// Applies `Π_m D_m(λ_{m,s}) e^{iΦ_s}` to every spin configuration of `state`.
    pub fn apply(&self, state: &mut SimState) -> Result<()> {
        let space = state.space.clone();
        if space.n_spins != self.n_spins || space.n_modes() != self.modes.len() {
            return Err(Error::DimensionMismatch("ledger does not match the state space".into()));
        }
        let sd = space.spin_dim();
        let md = space.mode_dim();
        let mut buffer = vec![C64::new(0.0, 0.0); md];
        let mut scratch = vec![C64::new(0.0, 0.0); md];
        for config in 0..sd {
            for (k, b) in buffer.iter_mut().enumerate() {
                *b = state.amplitudes[config + k * sd];
            }
            let mut stride = 1;
            for (m, mode) in space.modes.iter().enumerate() {
                let lambda = self.modes[m].displacement[config];
                let levels = mode.levels();
                if lambda != C64::new(0.0, 0.0) {
                    let d = displacement_matrix(mode.n_max, lambda);
                    apply_along(&d, levels, stride, &buffer, &mut scratch);
                    std::mem::swap(&mut buffer, &mut scratch);
                }
                stride *= levels;
            }
            let phase = C64::from_polar(1.0, self.phase(config));
            for (k, b) in buffer.iter().enumerate() {
                state.amplitudes[config + k * sd] = b * phase;
            }
        }
        Ok(())
    }
}

fn apply_along(d: &DMatrix<C64>, levels: usize, stride: usize, input: &[C64], output: &mut [C64]) {
    output.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    for (idx, &v) in input.iter().enumerate() {
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        let c = (idx / stride) % levels;
        let base = idx - c * stride;
        for r in 0..levels {
            output[base + r * stride] += d[(r, c)] * v;
        }
    }
}

/// `z_i = ±1` for spin `i` of a configuration index.
pub fn spin_z(config: usize, i: usize) -> f64 {
    if config >> i & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `(e^{−ix} − 1)/x`, with its Taylor series near zero.
fn loop_factor(x: f64) -> C64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        C64::new(-x / 2.0 + x * x2 / 24.0, -1.0 + x2 / 6.0)
    } else {
        (C64::from_polar(1.0, -x) - 1.0) / x
    }
}

/// `(x − sin x)/x²`, with its Taylor series near zero.
fn area_factor(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x / 6.0 - x * x2 / 120.0 + x * x2 * x2 / 5040.0
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// Ledger of the Lamb-Dicke z-branch propagator from `t0` to `t1`.
pub fn analytic_propagator(drive: &DriveSpec, t0: f64, t1: f64) -> Result<PhaseLedger> {
    drive.validate()?;
    if drive.branch != Branch::Z {
        return Err(Error::Branch("the closed-form propagator needs a z-branch drive".into()));
    }
    let n = drive.n_ions();
    let configs = 1usize << n;
    let dt = t1 - t0;
    let [a0, _, _, a3] = drive.alpha;
    let mut warnings = Vec::new();
    let mut modes = Vec::with_capacity(drive.n_modes());
    for m in 0..drive.n_modes() {
        let delta = drive.detunings[m];
        if delta == 0.0 && dt != 0.0 {
            warnings.push(format!("mode {m}: zero detuning, straight-line displacement"));
        }
        let x = delta * dt;
        let coupling: Vec<f64> = (0..n).map(|i| drive.rabi[i] * drive.lamb_dicke.eta[(m, i)]).collect();
        let loop_prefactor = C64::new(0.0, 1.0) * C64::from_polar(1.0, -delta * t0) * loop_factor(x) * dt;
        let area = dt * dt * area_factor(x);
        let kernel = |i: usize, j: usize| coupling[i] * coupling[j] * (drive.phases[i] - drive.phases[j]).cos() * area;

        let mut ledger = ModeLedger {
            displacement: vec![C64::new(0.0, 0.0); configs],
            geometric: vec![0.0; configs],
            dynamic: vec![0.0; configs],
            global: 0.0,
        };
        for i in 0..n {
            for j in 0..n {
                ledger.global -= a0 * a0 * kernel(i, j);
            }
        }
        for config in 0..configs {
            let mut lambda = C64::new(0.0, 0.0);
            for i in 0..n {
                let f = a0 + a3 * spin_z(config, i);
                lambda += C64::from_polar(coupling[i] * f, drive.phases[i]);
            }
            ledger.displacement[config] = lambda * loop_prefactor;
            let mut geometric = 0.0;
            let mut dynamic = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let k = kernel(i, j);
                    let (zi, zj) = (spin_z(config, i), spin_z(config, j));
                    geometric -= a3 * a3 * zi * zj * k;
                    dynamic -= a0 * a3 * (zi + zj) * k;
                }
            }
            ledger.geometric[config] = geometric;
            ledger.dynamic[config] = dynamic;
        }
        modes.push(ledger);
    }
    Ok(PhaseLedger { n_spins: n, t0, t1, modes, warnings })
}

/// Largest `|Φ^dyn_first(s) + Φ^dyn_second(s̄)|` over configurations, where `s̄`
/// is `s` with every spin flipped: the dynamic phase left after a spin echo.
pub fn echo_dynamic_residual(first: &PhaseLedger, second: &PhaseLedger, mode: usize) -> f64 {
    let all = first.n_configs() - 1;
    (0..first.n_configs())
        .map(|s| (first.modes[mode].dynamic[s] + second.modes[mode].dynamic[s ^ all]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::LambDickeTensor;
    use crate::drive::Form;
    use crate::hilbert::{propagate, ModeSpec, PropagateOptions, SpaceSpec};
    use std::f64::consts::PI;

    fn str_only(omega: f64, eta: f64, delta: f64) -> DriveSpec {
        let ld = LambDickeTensor { eta: DMatrix::from_row_slice(1, 2, &[eta, -eta]), mode_frequencies: vec![2.0 * PI * 3.6e6] };
        DriveSpec::z_branch(vec![omega; 2], vec![0.0; 2], -0.5, 1.5, ld, vec![delta]).unwrap()
    }

    #[test]
    fn zero_drive_is_identity() {
        let d = str_only(0.0, 0.1, 1.0);
        let l = analytic_propagator(&d, 0.0, 3.0).unwrap();
        assert_eq!(l.residual_displacement(), 0.0);
        for s in 0..4 {
            assert_eq!(l.phase(s), 0.0);
        }
    }

    #[test]
    fn leibfried_geometric_phase() {
        let delta = 2.0 * PI * 26e3;
        let eta = 0.2;
        let omega = delta / (6.0 * eta);
        let d = str_only(omega, eta, delta);
        let l = analytic_propagator(&d, 0.0, 2.0 * PI / delta).unwrap();
        assert!(l.residual_displacement() < 1e-12);
        let expected = -2.0 * PI * 4.0 * (omega * eta / delta).powi(2) * 1.5 * 1.5;
        assert!((expected + PI / 2.0).abs() < 1e-12);
        // ↓↑ and ↑↓ pick up the phase, ↓↓ and ↑↑ nothing
        assert!((l.phase(0b01) - expected).abs() < 1e-12);
        assert!((l.phase(0b10) - expected).abs() < 1e-12);
        assert!(l.phase(0b00).abs() < 1e-12 && l.phase(0b11).abs() < 1e-12);
    }

    #[test]
    fn straight_line_limit() {
        let d = str_only(1.0, 0.1, 0.0);
        let l = analytic_propagator(&d, 0.0, 2.0).unwrap();
        assert_eq!(l.warnings.len(), 1);
        // constant force: λ = −i ∫F dt = Σ Ωηf · Δt; spin 0 up (f = 1), spin 1 down (f = −2)
        let expected = (0.1 * 1.0 + -0.1 * -2.0) * 2.0;
        assert!((l.modes[0].displacement[0b01] - C64::from(expected)).norm() < 1e-12);
        assert!(l.phase(0b01).abs() < 1e-15);
    }

    #[test]
    fn small_detuning_is_continuous() {
        let a = analytic_propagator(&str_only(1.0, 0.1, 1e-7), 0.3, 2.0).unwrap();
        let b = analytic_propagator(&str_only(1.0, 0.1, 1e-3), 0.3, 2.0).unwrap();
        assert!((a.modes[0].displacement[1] - b.modes[0].displacement[1]).norm() < 1e-3);
    }

    #[test]
    fn matches_integration_for_random_drive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let w = [2.0, 3.4];
        let ld = LambDickeTensor {
            eta: DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.1..0.1)),
            mode_frequencies: w.to_vec(),
        };
        let d = DriveSpec::z_branch(
            vec![rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)],
            vec![rng.random_range(-PI..PI), rng.random_range(-PI..PI)],
            -0.3,
            1.1,
            ld,
            vec![0.4, -0.7],
        )
        .unwrap();
        let space = SpaceSpec::new(2, vec![ModeSpec::new("a", w[0], 14), ModeSpec::new("b", w[1], 14)]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [C64::new(r, 0.0), C64::new(0.0, r)];
        let start = SimState::product(&space, &[plus, plus], &[0, 0]).unwrap();
        let (t0, t1) = (0.7, 9.0);
        let h = d.hamiltonian(&space, Form::LambDicke).unwrap();
        let integrated = propagate(&h, &start, t0, t1, &PropagateOptions::default()).unwrap().state;
        let mut analytic = start.clone();
        analytic_propagator(&d, t0, t1).unwrap().apply(&mut analytic).unwrap();
        assert!(analytic.overlap(&integrated) > 1.0 - 1e-9, "{}", 1.0 - analytic.overlap(&integrated));
        // and the phase itself, not only the overlap
        assert!((analytic.inner(&integrated) - 1.0).norm() < 1e-6);
    }
}
