//! Time propagation of `i dψ/dt = H(t) ψ`.
//!
//! [`propagate`] is an adaptive explicit Runge–Kutta integrator (Dormand–Prince
//! 8(5,3)) working on any [`Generator`]. [`magnus4_step`] is a fourth-order
//! Magnus step for small dense Hamiltonians where exact exponentials are cheap.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{commutator, expm_hermitian};
use super::operator::Generator;
use super::space::SimState;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    /// Maximum probability allowed in the top two Fock levels of any mode.
    pub leakage_threshold: f64,
    /// Relative Hermiticity residual above which the generator is rejected.
    pub hermiticity_tolerance: f64,
    pub max_steps: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { tol: 1e-10, leakage_threshold: 1e-6, hermiticity_tolerance: 1e-10, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub state: SimState,
    pub steps: usize,
    pub rejected: usize,
    /// Number of times the norm drifted by more than 1e-12 and was reset.
    pub renormalizations: usize,
    pub max_norm_drift: f64,
    pub max_leakage: f64,
}

/// Relative residual `|⟨u|Hv⟩ − ⟨Hu|v⟩|` for reproducible random vectors.
pub fn hermiticity_residual(h: &dyn Generator, t: f64) -> f64 {
    let dim = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut draw = || -> Vec<C64> { (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect() };
    let u = draw();
    let v = draw();
    let mut hu = vec![C64::new(0.0, 0.0); dim];
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    h.apply(t, &u, &mut hu);
    h.apply(t, &v, &mut hv);
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let norm = |a: &[C64]| a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let scale = (norm(&hu) * norm(&v)).max(norm(&u) * norm(&hv));
    if scale == 0.0 {
        return 0.0;
    }
    (dot(&u, &hv) - dot(&hu, &v)).norm() / scale
}

/// Integrates the Schrödinger equation from `t0` to `t1`.
pub fn propagate(h: &dyn Generator, state: &SimState, t0: f64, t1: f64, options: &PropagateOptions) -> Result<Propagation> {
    let dim = state.space.dim();
    if h.dim() != dim {
        return Err(Error::DimensionMismatch(format!("generator dimension {} vs state dimension {}", h.dim(), dim)));
    }
    for t in [t0, 0.5 * (t0 + t1), t1] {
        let residual = hermiticity_residual(h, t);
        if residual > options.hermiticity_tolerance {
            return Err(Error::NonHermitian { time: t, residual });
        }
    }
    let mut result = Propagation {
        state: state.clone(),
        steps: 0,
        rejected: 0,
        renormalizations: 0,
        max_norm_drift: 0.0,
        max_leakage: max_leakage(state, options)?,
    };
    if t1 == t0 {
        return Ok(result);
    }
    let mut solver = Dop853::new(dim, options.tol);
    let rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        h.apply(t, y, out);
        for v in out.iter_mut() {
            *v = C64::new(v.im, -v.re);
        }
    };
    let mut y = state.amplitudes.clone();
    let mut t = t0;
    let direction = (t1 - t0).signum();
    rhs(t, &y, &mut solver.k[0]);
    let mut h_abs = solver.initial_step(&rhs, t, &y, direction, (t1 - t0).abs());

    while direction * (t1 - t) > 0.0 {
        if result.steps + result.rejected >= options.max_steps {
            return Err(Error::Integration(format!("step limit {} reached at t = {t:e}", options.max_steps)));
        }
        let min_step = 10.0 * (next_after(t, direction) - t).abs();
        let mut rejected_here = false;
        loop {
            if h_abs < min_step {
                return Err(Error::Integration(format!("step size underflow at t = {t:e}")));
            }
            let mut step = h_abs * direction;
            let mut t_new = t + step;
            if direction * (t_new - t1) > 0.0 {
                t_new = t1;
                step = t_new - t;
                h_abs = step.abs();
            }
            let err = solver.step(&rhs, t, &y, step);
            if err < 1.0 {
                let mut factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR) };
                if rejected_here {
                    factor = factor.min(1.0);
                }
                h_abs *= factor;
                t = t_new;
                std::mem::swap(&mut y, &mut solver.y_new);
                solver.k.swap(0, STAGES);
                result.steps += 1;
                break;
            }
            h_abs *= (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
            rejected_here = true;
            result.rejected += 1;
        }

        let norm = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - 1.0).abs();
        result.max_norm_drift = result.max_norm_drift.max(drift);
        if drift > 1e-12 {
            // k[0] = f(t, y) is linear in y, so it rescales with it.
            y.iter_mut().for_each(|a| *a /= norm);
            solver.k[0].iter_mut().for_each(|a| *a /= norm);
            result.renormalizations += 1;
        }
        if !state.space.modes.is_empty() {
            result.state.amplitudes.copy_from_slice(&y);
            result.max_leakage = result.max_leakage.max(max_leakage(&result.state, options)?);
        }
    }
    result.state.amplitudes = y;
    Ok(result)
}

fn max_leakage(state: &SimState, options: &PropagateOptions) -> Result<f64> {
    let leak = state.leakage();
    let mut worst: f64 = 0.0;
    for (mode, &l) in leak.iter().enumerate() {
        if l > options.leakage_threshold {
            return Err(Error::Leakage { mode, leakage: l, threshold: options.leakage_threshold });
        }
        worst = worst.max(l);
    }
    Ok(worst)
}

fn next_after(t: f64, direction: f64) -> f64 {
    if t == 0.0 {
        return direction * f64::from_bits(1);
    }
    let bits = t.to_bits();
    let up = (t > 0.0) == (direction > 0.0);
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}

/// One fourth-order Magnus step: the unitary taking `ψ(t)` to `ψ(t + dt)`.
pub fn magnus4_step(h: &impl Fn(f64) -> DMatrix<C64>, t: f64, dt: f64) -> DMatrix<C64> {
    let offset = 3.0_f64.sqrt() / 6.0;
    let h1 = h(t + dt * (0.5 - offset));
    let h2 = h(t + dt * (0.5 + offset));
    let omega = (&h1 + &h2) * C64::from(dt / 2.0) - commutator(&h2, &h1) * C64::new(0.0, 3.0_f64.sqrt() * dt * dt / 12.0);
    expm_hermitian(&omega, 1.0)
}

/// Fixed-step fourth-order Magnus propagation of a state vector.
pub fn propagate_magnus(h: &impl Fn(f64) -> DMatrix<C64>, psi: &[C64], t0: f64, t1: f64, steps: usize) -> Vec<C64> {
    let steps = steps.max(1);
    let dt = (t1 - t0) / steps as f64;
    let mut y = nalgebra::DVector::from_column_slice(psi);
    for k in 0..steps {
        y = magnus4_step(h, t0 + k as f64 * dt, dt) * y;
    }
    y.iter().copied().collect()
}

const STAGES: usize = 12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

const C: [f64; STAGES] = [
    0.0,
    0.052_600_151_958_767_73,
    0.078_900_227_938_151_6,
    0.118_350_341_907_227_4,
    0.281_649_658_092_772_6,
    0.333_333_333_333_333_3,
    0.25,
    0.307_692_307_692_307_7,
    0.651_282_051_282_051_3,
    0.6,
    0.857_142_857_142_857_1,
    1.0,
];

/// Non-zero lower-triangular Butcher coefficients, `(row, col, value)`.
const A: &[(usize, usize, f64)] = &[
    (1, 0, 0.052_600_151_958_767_73),
    (2, 0, 0.019_725_056_984_537_9),
    (2, 1, 0.059_175_170_953_613_7),
    (3, 0, 0.029_587_585_476_806_85),
    (3, 2, 0.088_762_756_430_420_54),
    (4, 0, 0.241_365_134_159_266_7),
    (4, 2, -0.884_549_479_328_286_1),
    (4, 3, 0.924_834_003_261_792),
    (5, 0, 0.037_037_037_037_037_035),
    (5, 3, 0.170_828_608_729_473_86),
    (5, 4, 0.125_467_687_566_822_42),
    (6, 0, 0.037_109_375),
    (6, 3, 0.170_252_211_019_544_05),
    (6, 4, 0.060_216_538_980_455_96),
    (6, 5, -0.017_578_125),
    (7, 0, 0.037_092_000_118_504_79),
    (7, 3, 0.170_383_925_712_239_98),
    (7, 4, 0.107_262_030_446_373_28),
    (7, 5, -0.015_319_437_748_624_402),
    (7, 6, 0.008_273_789_163_814_023),
    (8, 0, 0.624_110_958_716_075_7),
    (8, 3, -3.360_892_629_446_941_4),
    (8, 4, -0.868_219_346_841_726),
    (8, 5, 27.592_099_699_446_71),
    (8, 6, 20.154_067_550_477_894),
    (8, 7, -43.489_884_181_069_96),
    (9, 0, 0.477_662_536_438_264_34),
    (9, 3, -2.488_114_619_971_667_7),
    (9, 4, -0.590_290_826_836_843),
    (9, 5, 21.230_051_448_181_193),
    (9, 6, 15.279_233_632_882_423),
    (9, 7, -33.288_210_968_984_86),
    (9, 8, -0.020_331_201_708_508_627),
    (10, 0, -0.937_142_430_085_987_3),
    (10, 3, 5.186_372_428_844_064),
    (10, 4, 1.091_437_348_996_729_5),
    (10, 5, -8.149_787_010_746_927),
    (10, 6, -18.520_065_659_996_96),
    (10, 7, 22.739_487_099_350_505),
    (10, 8, 2.493_605_552_679_652_3),
    (10, 9, -3.046_764_471_898_219_6),
    (11, 0, 2.273_310_147_516_538),
    (11, 3, -10.534_495_466_737_25),
    (11, 4, -2.000_872_058_224_862_5),
    (11, 5, -17.958_931_863_118_8),
    (11, 6, 27.948_884_529_419_96),
    (11, 7, -2.858_998_277_135_023_5),
    (11, 8, -8.872_856_933_530_63),
    (11, 9, 12.360_567_175_794_303),
    (11, 10, 0.643_392_746_015_763_6),
];

const B: [f64; STAGES] = [
    0.054_293_734_116_568_765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    0.311_164_366_957_819_9,
    -0.152_160_949_662_516_1,
    0.201_365_400_804_030_34,
    0.044_710_615_727_772_59,
];

const E3: [f64; STAGES + 1] = [
    -0.189_800_754_072_407_62,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    -0.422_682_321_323_791_9,
    -0.152_160_949_662_516_1,
    0.201_365_400_804_030_34,
    0.022_651_792_198_360_82,
    0.0,
];

const E5: [f64; STAGES + 1] = [
    0.013_120_044_994_194_88,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -0.495_758_949_657_250_2,
    1.664_377_182_454_986_4,
    -0.350_328_848_749_973_66,
    0.334_179_118_713_017_5,
    0.081_923_206_485_115_71,
    -0.022_355_307_863_886_294,
    0.0,
];

struct Dop853 {
    tol: f64,
    /// Stage derivatives; `k[STAGES]` holds `f(t + h, y_new)`.
    k: Vec<Vec<C64>>,
    y_new: Vec<C64>,
    work: Vec<C64>,
}

impl Dop853 {
    fn new(dim: usize, tol: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Dop853 { tol, k: vec![vec![zero; dim]; STAGES + 1], y_new: vec![zero; dim], work: vec![zero; dim] }
    }

    fn rms(v: &[C64], scale: &[f64]) -> f64 {
        (v.iter().zip(scale).map(|(a, s)| (a.norm() / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    fn initial_step(&mut self, rhs: &impl Fn(f64, &[C64], &mut [C64]), t: f64, y: &[C64], direction: f64, span: f64) -> f64 {
        let scale: Vec<f64> = y.iter().map(|a| self.tol + a.norm() * self.tol).collect();
        let d0 = Self::rms(y, &scale);
        let d1 = Self::rms(&self.k[0], &scale);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for (w, (a, f)) in self.work.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *w = a + f * (h0 * direction);
        }
        let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
        rhs(t + h0 * direction, &self.work, &mut f1);
        let diff: Vec<C64> = f1.iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = Self::rms(&diff, &scale) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 8.0) };
        (100.0 * h0).min(h1).min(span)
    }

    /// One trial step; fills `y_new` and `k[STAGES]` and returns the error norm.
    fn step(&mut self, rhs: &impl Fn(f64, &[C64], &mut [C64]), t: f64, y: &[C64], h: f64) -> f64 {
        let dim = y.len();
        let mut a_iter = A.iter().peekable();
        for s in 1..STAGES {
            self.work.copy_from_slice(y);
            while let Some(&&(row, col, a)) = a_iter.peek() {
                if row != s {
                    break;
                }
                let ha = h * a;
                for (w, k) in self.work.iter_mut().zip(&self.k[col]) {
                    *w += k * ha;
                }
                a_iter.next();
            }
            rhs(t + C[s] * h, &self.work, &mut self.k[s]);
        }
        self.y_new.copy_from_slice(y);
        for (s, b) in B.iter().enumerate() {
            if *b == 0.0 {
                continue;
            }
            let hb = h * b;
            for (w, k) in self.y_new.iter_mut().zip(&self.k[s]) {
                *w += k * hb;
            }
        }
        rhs(t + h, &self.y_new, &mut self.k[STAGES]);

        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..dim {
            let scale = self.tol + y[i].norm().max(self.y_new[i].norm()) * self.tol;
            let mut e5 = C64::new(0.0, 0.0);
            let mut e3 = C64::new(0.0, 0.0);
            for s in 0..=STAGES {
                if E5[s] != 0.0 {
                    e5 += self.k[s][i] * E5[s];
                }
                if E3[s] != 0.0 {
                    e3 += self.k[s][i] * E3[s];
                }
            }
            err5 += (e5.norm() / scale).powi(2);
            err3 += (e3.norm() / scale).powi(2);
        }
        if err5 == 0.0 && err3 == 0.0 {
            return 0.0;
        }
        let denom = err5 + 0.01 * err3;
        h.abs() * err5 / (denom * dim as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::linalg::expm_hermitian;
    use crate::hilbert::operator::{build_operator, ModeOp, OperatorSpec, SpinOp};
    use crate::hilbert::space::{ModeSpec, SpaceSpec};

    fn random_hermitian(dim: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (&m + m.adjoint()) * C64::from(0.5)
    }

    fn random_state(space: &SpaceSpec, seed: u64) -> SimState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = SimState::new(
            space.clone(),
            (0..space.dim()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect(),
        )
        .unwrap();
        s.normalize();
        s
    }

    #[test]
    fn zero_hamiltonian_leaves_state_unchanged() {
        let space = SpaceSpec::spins(3).unwrap();
        let psi = random_state(&space, 1);
        let h = DMatrix::<C64>::zeros(8, 8);
        let out = propagate(&h, &psi, 0.0, 5.0, &PropagateOptions::default()).unwrap();
        assert_eq!(out.state.amplitudes, psi.amplitudes);
    }

    #[test]
    fn constant_hamiltonian_matches_exponential() {
        let space = SpaceSpec::spins(3).unwrap();
        let h = random_hermitian(8, 7) * C64::from(3.0);
        let psi = random_state(&space, 2);
        let t = 4.2;
        let out = propagate(&h, &psi, 0.0, t, &PropagateOptions::default()).unwrap();
        let exact = expm_hermitian(&h, t) * nalgebra::DVector::from_column_slice(&psi.amplitudes);
        let err = out.state.amplitudes.iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "error {err:e}");
        assert!((out.state.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backwards_propagation_inverts_forwards() {
        let space = SpaceSpec::spins(2).unwrap();
        let h = random_hermitian(4, 3);
        let psi = random_state(&space, 4);
        let opts = PropagateOptions::default();
        let fwd = propagate(&h, &psi, 0.0, 3.0, &opts).unwrap();
        let back = propagate(&h, &fwd.state, 3.0, 0.0, &opts).unwrap();
        assert!(back.state.overlap(&psi) > 1.0 - 1e-12);
    }

    #[test]
    fn non_hermitian_generator_is_rejected() {
        let space = SpaceSpec::spins(1).unwrap();
        let h = SpinOp::Plus.matrix();
        let err = propagate(&h, &SimState::ground(&space), 0.0, 1.0, &PropagateOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonHermitian { .. }));
    }

    #[test]
    fn leakage_threshold_is_enforced() {
        let space = SpaceSpec::new(0, vec![ModeSpec::new("m", 1.0, 6)]).unwrap();
        let a = build_operator(&space, &OperatorSpec::identity(&space).mode(0, ModeOp::A)).unwrap();
        let h = (&a + a.adjoint()) * C64::from(1.0);
        let err = propagate(&h, &SimState::ground(&space), 0.0, 3.0, &PropagateOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Leakage { mode: 0, .. }));
    }

    #[test]
    fn magnus_matches_exponential_for_constant_hamiltonian() {
        let h = random_hermitian(4, 11);
        let psi: Vec<C64> = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let out = propagate_magnus(&|_| h.clone(), &psi, 0.0, 2.0, 3);
        let exact = expm_hermitian(&h, 2.0) * nalgebra::DVector::from_column_slice(&psi);
        let err = out.iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn magnus_agrees_with_runge_kutta_for_time_dependent_drive() {
        let x = SpinOp::X.matrix();
        let z = SpinOp::Z.matrix();
        let hf = move |t: f64| &x * C64::from((1.3 * t).cos()) + &z * C64::from(0.4 + 0.2 * t);
        let space = SpaceSpec::spins(1).unwrap();
        let psi = SimState::ground(&space);
        let rk = propagate(&super::super::operator::MatrixFunction { dim: 2, f: hf.clone() }, &psi, 0.0, 3.0, &PropagateOptions::default()).unwrap();
        let mg = propagate_magnus(&hf, &psi.amplitudes, 0.0, 3.0, 2000);
        let err = rk.state.amplitudes.iter().zip(&mg).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err:e}");
    }
}
