//! Adiabatic ramps of the spin-only Ising model.

use nalgebra::{DMatrix, DVector};

use super::effective::{effective_hamiltonian, BiasMode, IsingModel};
use crate::drive::rotation;
use crate::hilbert::linalg::eigh;
use crate::hilbert::magnus4_step;
use crate::{Error, Result, C64};

/// Steps between spectrum snapshots.
pub const SNAPSHOT_INTERVAL: usize = 32;

/// Time profile on `s = t/T ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    Linear { from: f64, to: f64 },
    /// `from + (to − from)(1 − e^{−t/τ})/(1 − e^{−T/τ})`.
    Exponential { from: f64, to: f64, tau: f64 },
}

impl Profile {
    pub fn at(&self, t: f64, total: f64) -> f64 {
        match *self {
            Profile::Constant(v) => v,
            Profile::Linear { from, to } => from + (to - from) * (t / total),
            Profile::Exponential { from, to, tau } => from + (to - from) * (-(t / tau)).exp_m1() / (-(total / tau)).exp_m1(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Constant(v) => v.is_finite(),
            Profile::Linear { from, to } => from.is_finite() && to.is_finite(),
            Profile::Exponential { from, to, tau } => from.is_finite() && to.is_finite() && tau.is_finite() && tau > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("ramp profiles need finite values and a positive time constant".into()))
        }
    }
}

/// Scales applied to a base model's `J` and field over the ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSchedule {
    pub total_time: f64,
    pub j_scale: Profile,
    pub b_scale: Profile,
    pub steps: usize,
}

impl RampSchedule {
    /// `J` ramped linearly from zero at constant field.
    pub fn linear_j(total_time: f64, steps: usize) -> Self {
        Self { total_time, j_scale: Profile::Linear { from: 0.0, to: 1.0 }, b_scale: Profile::Constant(1.0), steps }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time.is_finite() && self.total_time > 0.0) || self.steps == 0 {
            return Err(Error::InvalidArgument("a ramp needs a positive duration and at least one step".into()));
        }
        self.j_scale.validate()?;
        self.b_scale.validate()
    }

    pub fn model_at(&self, base: &IsingModel, t: f64) -> IsingModel {
        base.scaled(self.j_scale.at(t, self.total_time), self.b_scale.at(t, self.total_time))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    /// `E₁ − E₀` within the symmetry sector of the initial state.
    pub gap: f64,
    /// Weight of the state in the instantaneous ground space of that sector.
    pub ground_overlap: f64,
    /// `⟨Σᵢ σzᵢ⟩ / N`.
    pub magnetization: f64,
}

#[derive(Debug, Clone)]
pub struct AdiabaticRun {
    pub state: DVector<C64>,
    pub snapshots: Vec<Snapshot>,
    pub min_gap: f64,
    /// Ground-space weight at `t = T`.
    pub final_ground_overlap: f64,
    pub populations: Vec<f64>,
    /// `(P↓…↓ + P↑…↑)/2 + |ρ_{↓…↓,↑…↑}|`; above 1/2 witnesses entanglement.
    pub ghz_fidelity: f64,
}

/// `|→…→⟩ = R(π/2, π/2)^{⊗N} |↓…↓⟩`.
pub fn all_right(n: usize) -> DVector<C64> {
    let r = rotation(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let single = [r[(0, 0)], r[(1, 0)]];
    DVector::from_fn(1 << n, |s, _| (0..n).map(|i| single[s >> i & 1]).product())
}

/// Orthonormal basis of the `Πᵢσxᵢ = parity` sector, as columns.
fn parity_sector(n: usize, parity: f64) -> DMatrix<C64> {
    let dim = 1usize << n;
    let all = dim - 1;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let reps: Vec<usize> = (0..dim).filter(|&s| s < s ^ all).collect();
    let mut b = DMatrix::<C64>::zeros(dim, reps.len());
    for (k, &s) in reps.iter().enumerate() {
        b[(s, k)] = C64::from(r);
        b[(s ^ all, k)] = C64::from(parity * r);
    }
    b
}

fn parity_of(psi: &DVector<C64>) -> Option<f64> {
    let all = psi.len() - 1;
    let value: C64 = (0..psi.len()).map(|s| psi[s].conj() * psi[s ^ all]).sum();
    if (value.re.abs() - 1.0).abs() < 1e-9 && psi.len() > 1 {
        Some(value.re.signum())
    } else {
        None
    }
}

fn spectrum_snapshot(h: &DMatrix<C64>, psi: &DVector<C64>, sector: Option<&DMatrix<C64>>, time: f64, n: usize) -> Snapshot {
    let (h_eff, psi_eff) = match sector {
        Some(b) => (b.adjoint() * h * b, b.adjoint() * psi),
        None => (h.clone(), psi.clone()),
    };
    let (e, v) = eigh(&h_eff);
    let scale = e.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let window = 1e-9 * scale;
    let degenerate = e.iter().take_while(|&&x| x - e[0] <= window).count();
    let gap = if degenerate < e.len() { e[degenerate] - e[0] } else { 0.0 };
    let ground_overlap = (0..degenerate).map(|k| v.column(k).dotc(&psi_eff).norm_sqr()).sum();
    let magnetization = (0..psi.len())
        .map(|s| psi[s].norm_sqr() * (0..n).map(|i| if s >> i & 1 == 1 { 1.0 } else { -1.0 }).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    Snapshot { time, gap, ground_overlap, magnetization }
}

/// Integrates the ramp with fourth-order Magnus steps, recording the spectrum
/// every [`SNAPSHOT_INTERVAL`] steps and at the end.
pub fn adiabatic_run(base: &IsingModel, schedule: &RampSchedule, initial: &DVector<C64>, bias: BiasMode) -> Result<AdiabaticRun> {
    schedule.validate()?;
    let n = base.n_spins();
    if initial.len() != 1 << n {
        return Err(Error::DimensionMismatch(format!("state of length {} for {n} spins", initial.len())));
    }
    let h = |t: f64| effective_hamiltonian(&schedule.model_at(base, t), bias);
    let parity = if bias == BiasMode::Compensated { parity_of(initial) } else { None };
    let sector = parity.map(|p| parity_sector(n, p));
    let dt = schedule.total_time / schedule.steps as f64;
    let mut psi = initial.clone();
    let mut snapshots = vec![spectrum_snapshot(&h(0.0), &psi, sector.as_ref(), 0.0, n)];
    for k in 0..schedule.steps {
        let t = k as f64 * dt;
        psi = magnus4_step(&h, t, dt) * psi;
        if (k + 1) % SNAPSHOT_INTERVAL == 0 || k + 1 == schedule.steps {
            let t1 = (k + 1) as f64 * dt;
            snapshots.push(spectrum_snapshot(&h(t1), &psi, sector.as_ref(), t1, n));
        }
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-9 * (schedule.steps as f64).max(1.0) {
        return Err(Error::Integration(format!("norm drifted to {norm}")));
    }
    let populations: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
    let last = psi.len() - 1;
    let ghz_fidelity = (populations[0] + populations[last]) / 2.0 + (psi[0] * psi[last].conj()).norm();
    let min_gap = snapshots.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min);
    let final_ground_overlap = snapshots.last().map(|s| s.ground_overlap).unwrap_or(0.0);
    Ok(AdiabaticRun { state: psi, snapshots, min_gap, final_ground_overlap, populations, ghz_fidelity })
}

/// Shortest ramp, in units of `1/|B|`.
const MIN_RAMP_TIME: f64 = 20.0;
/// Magnus step, in units of `1/|B|`.
const RAMP_STEP: f64 = 0.05;

/// `P↓…↓ + P↑…↑` after ramping uniform `J` from zero to `−ratio·|B|` at
/// `|dJ/dt| = ramp_rate·B²`, starting from `|→…→⟩`. The field is applied as `−|B|`
/// so that `|→…→⟩` is the initial ground state.
pub fn crossover_curve(n: usize, ratios: &[f64], field: f64, ramp_rate: f64) -> Result<Vec<f64>> {
    if !(2..=8).contains(&n) {
        return Err(Error::InvalidArgument("crossover curves are defined for 2 to 8 spins".into()));
    }
    if !(field.is_finite() && field != 0.0 && ramp_rate.is_finite() && ramp_rate > 0.0) {
        return Err(Error::InvalidArgument("crossover curves need a non-zero field and a positive ramp rate".into()));
    }
    let b = field.abs();
    let psi0 = all_right(n);
    ratios
        .iter()
        .map(|&ratio| {
            let total = (ratio.abs() / ramp_rate).max(MIN_RAMP_TIME) / b;
            let steps = (total * b / RAMP_STEP).ceil() as usize;
            let base = IsingModel::uniform(n, -ratio * b, -b);
            let run = adiabatic_run(&base, &RampSchedule::linear_j(total, steps), &psi0, BiasMode::Compensated)?;
            Ok(run.populations[0] + run.populations[(1 << n) - 1])
        })
        .collect()
}

/// `P↓…↓ + P↑…↑` of the exact ground state of the parity sector of `|→…→⟩`
/// for uniform `J = −ratio·|B|`.
pub fn ground_state_crossover(n: usize, ratios: &[f64]) -> Vec<f64> {
    let sector = parity_sector(n, 1.0);
    ratios
        .iter()
        .map(|&ratio| {
            let h = effective_hamiltonian(&IsingModel::uniform(n, -ratio, -1.0), BiasMode::Compensated);
            let (_, v) = eigh(&(sector.adjoint() * h * &sector));
            let g = &sector * v.column(0);
            g[0].norm_sqr() + g[(1 << n) - 1].norm_sqr()
        })
        .collect()
}

/// Largest `ΔP/Δ ln r` between neighbouring points of a crossover curve.
pub fn steepness(ratios: &[f64], curve: &[f64]) -> f64 {
    ratios
        .windows(2)
        .zip(curve.windows(2))
        .map(|(r, p)| (p[1] - p[0]) / (r[1] / r[0]).ln())
        .fold(f64::NEG_INFINITY, f64::max)
}
