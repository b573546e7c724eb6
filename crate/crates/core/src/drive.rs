//! Laser–ion coupling in the interaction picture.
//!
//! Each ion `i` sees `Ω_i exp(i[Σ_m η_mi (a_m e^{−iω_m t} + a_m† e^{iω_m t}) − ω_I t + φ_i]) κ̂_i + h.c.`
//! with `κ̂ = α₀𝟙 + α₁σx + α₂σy + α₃σz`. After dropping terms rotating at the
//! optical qubit frequency two branches remain:
//!
//! * z-branch (`α₁ = α₂ = 0`): `Ω_i Π_m D_m(iη_mi e^{iω_m t}) e^{i(φ_i − ω_I t)} (α₀ + α₃σz) + h.c.`
//! * xy-branch (`α₀ = α₃ = 0`): `(Ω_i/2) Π_m D_m(iη_mi e^{iω_m t}) e^{i(φ_i − Δt)} (α₁ − iα₂) σ₊ + h.c.`,
//!   `Δ = ω_I − ω_↑↓`.
//!
//! The Lamb-Dicke form keeps the displacement factors to first order in η; in
//! the z-branch the carrier term and the terms rotating at `ω_I + ω_m` are
//! dropped as well, leaving `Σ_m iΩ_iη_mi e^{i(φ_i − δ_m t)} a_m† (α₀ + α₃σz) + h.c.`
//! with `δ_m = ω_I − ω_m`.

use nalgebra::DMatrix;

use crate::crystal::LambDickeTensor;
use crate::hilbert::{displacement_matrix, Coefficient, ModeOp, ProductOp, SimState, SiteFactor, SpaceSpec, SpinOp, TermHamiltonian};
use crate::{Error, Result, C64};

/// `Ω_{n′,n} = Ω e^{−η²/2} η^{|n′−n|} sqrt(n_<!/n_>!) L_{n_<}^{(|n′−n|)}(η²)`.
pub fn rabi_rate(n_out: usize, n_in: usize, omega: f64, eta: f64) -> f64 {
    let lo = n_out.min(n_in);
    let hi = n_out.max(n_in);
    let delta = hi - lo;
    let x = eta * eta;
    let poly = crate::hilbert::laguerre(lo, delta as f64, x);
    if delta == 0 {
        return omega * (-x / 2.0).exp() * poly;
    }
    if eta == 0.0 {
        return 0.0;
    }
    let ln_ratio: f64 = -((lo + 1)..=hi).map(|k| (k as f64).ln()).sum::<f64>();
    let magnitude = (-x / 2.0 + delta as f64 * eta.abs().ln() + 0.5 * ln_ratio).exp();
    let sign = if eta < 0.0 && delta % 2 == 1 { -1.0 } else { 1.0 };
    omega * sign * magnitude * poly
}

/// Two-level Rabi problem between `|↓, n⟩` and `|↑, n′⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiProblem {
    /// `(ω_I − ω_↑↓) − (n′ − n)ω`, rad/s.
    pub delta: f64,
    /// Complex coupling `Y`, rad/s.
    pub y: C64,
    /// s
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevel {
    pub up: C64,
    pub down: C64,
}

impl RabiProblem {
    /// `X = sqrt(δ²/4 + |Y|²)`.
    pub fn x(&self) -> f64 {
        (self.delta * self.delta / 4.0 + self.y.norm_sqr()).sqrt()
    }

    /// Closed-form propagator acting on `(c_↑, c_↓)`.
    ///
    /// It solves `ċ_↑ = Y e^{−iδt} c_↓`, `ċ_↓ = −Y* e^{iδt} c_↑`.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let x = self.x();
        let t = self.t;
        let i = C64::new(0.0, 1.0);
        let (cos, sin_over_x) = if x * t.abs() < 1e-8 {
            (1.0 - (x * t).powi(2) / 2.0, t * (1.0 - (x * t).powi(2) / 6.0))
        } else {
            ((x * t).cos(), (x * t).sin() / x)
        };
        let early = C64::from_polar(1.0, -self.delta * t / 2.0);
        let late = early.conj();
        let half = self.delta / 2.0;
        [
            [(C64::from(cos) + i * half * sin_over_x) * early, self.y * sin_over_x * early],
            [-self.y.conj() * sin_over_x * late, (C64::from(cos) - i * half * sin_over_x) * late],
        ]
    }

    /// Resolved-sideband warning when `|δ|` or `|Y|` exceeds a fifth of the trap frequency.
    pub fn resolved_sideband_warning(&self, trap_frequency: f64) -> Option<String> {
        let limit = trap_frequency.abs() / 5.0;
        (self.delta.abs() >= limit || self.y.norm() >= limit).then(|| {
            format!(
                "outside the resolved-sideband regime: |δ| = {:e}, |Y| = {:e}, ω/5 = {:e}",
                self.delta.abs(),
                self.y.norm(),
                limit
            )
        })
    }
}

pub fn rabi_solution(problem: &RabiProblem, start: TwoLevel) -> TwoLevel {
    let m = problem.matrix();
    TwoLevel { up: m[0][0] * start.up + m[0][1] * start.down, down: m[1][0] * start.up + m[1][1] * start.down }
}

/// Rotation `R(θ, φ)` as a 2×2 matrix in the (↓, ↑) ordering.
///
/// In the (↑, ↓) ordering it reads `[[cos θ/2, −ie^{iφ} sin θ/2], [−ie^{−iφ} sin θ/2, cos θ/2]]`.
pub fn rotation(theta: f64, phi: f64) -> DMatrix<C64> {
    let c = C64::from((theta / 2.0).cos());
    let s = (theta / 2.0).sin();
    let i = C64::new(0.0, 1.0);
    let up_from_down = -i * C64::from_polar(s, phi);
    let down_from_up = -i * C64::from_polar(s, -phi);
    DMatrix::from_row_slice(2, 2, &[c, down_from_up, up_from_down, c])
}

/// Applies a single-spin unitary to the listed spins.
pub fn apply_spin_unitary(state: &mut SimState, targets: &[usize], u: &DMatrix<C64>) -> Result<()> {
    let n = state.space.n_spins;
    for &target in targets {
        if target >= n {
            return Err(Error::InvalidArgument(format!("spin {target} out of range for {n} spins")));
        }
        let bit = 1usize << target;
        for idx in 0..state.amplitudes.len() {
            if idx & bit != 0 {
                continue;
            }
            let down = state.amplitudes[idx];
            let up = state.amplitudes[idx | bit];
            state.amplitudes[idx] = u[(0, 0)] * down + u[(0, 1)] * up;
            state.amplitudes[idx | bit] = u[(1, 0)] * down + u[(1, 1)] * up;
        }
    }
    Ok(())
}

pub fn apply_rotation(state: &mut SimState, targets: &[usize], theta: f64, phi: f64) -> Result<()> {
    apply_spin_unitary(state, targets, &rotation(theta, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// State-dependent force, `α₁ = α₂ = 0`.
    Z,
    /// Spin-flip coupling, `α₀ = α₃ = 0`.
    Xy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// Exact displacement-operator factors.
    Full,
    /// First order in the Lamb-Dicke parameters.
    LambDicke,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSpec {
    pub branch: Branch,
    /// Per-ion Rabi frequency Ω_i, rad/s.
    pub rabi: Vec<f64>,
    /// Per-ion phase φ_i (with k·x₀ absorbed), rad.
    pub phases: Vec<f64>,
    /// `[α₀, α₁, α₂, α₃]`
    pub alpha: [f64; 4],
    /// Lamb-Dicke parameters of the simulated modes only.
    pub lamb_dicke: LambDickeTensor,
    /// `δ_m = ω_I − ω_m` for each simulated mode, rad/s.
    pub detunings: Vec<f64>,
    /// `ω_I − ω_↑↓` for xy-branch drives, rad/s.
    pub carrier_detuning: f64,
}

impl DriveSpec {
    /// z-branch drive with explicit per-mode detunings.
    pub fn z_branch(rabi: Vec<f64>, phases: Vec<f64>, alpha0: f64, alpha3: f64, lamb_dicke: LambDickeTensor, detunings: Vec<f64>) -> Result<Self> {
        let d = DriveSpec { branch: Branch::Z, rabi, phases, alpha: [alpha0, 0.0, 0.0, alpha3], lamb_dicke, detunings, carrier_detuning: 0.0 };
        d.validate()?;
        Ok(d)
    }

    /// z-branch drive at beat frequency `ω_I`; `δ_m = ω_I − ω_m`.
    pub fn z_branch_at(rabi: Vec<f64>, phases: Vec<f64>, alpha0: f64, alpha3: f64, lamb_dicke: LambDickeTensor, drive_frequency: f64) -> Result<Self> {
        let detunings = lamb_dicke.mode_frequencies.iter().map(|w| drive_frequency - w).collect();
        Self::z_branch(rabi, phases, alpha0, alpha3, lamb_dicke, detunings)
    }

    pub fn xy_branch(rabi: Vec<f64>, phases: Vec<f64>, alpha1: f64, alpha2: f64, lamb_dicke: LambDickeTensor, carrier_detuning: f64) -> Result<Self> {
        let detunings = vec![0.0; lamb_dicke.n_modes()];
        let d = DriveSpec { branch: Branch::Xy, rabi, phases, alpha: [0.0, alpha1, alpha2, 0.0], lamb_dicke, detunings, carrier_detuning };
        d.validate()?;
        Ok(d)
    }

    pub fn n_ions(&self) -> usize {
        self.rabi.len()
    }

    pub fn n_modes(&self) -> usize {
        self.lamb_dicke.n_modes()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rabi.len();
        if self.phases.len() != n || self.lamb_dicke.n_ions() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} Rabi frequencies, {} phases, Lamb-Dicke tensor for {} ions",
                n,
                self.phases.len(),
                self.lamb_dicke.n_ions()
            )));
        }
        if self.detunings.len() != self.lamb_dicke.n_modes() {
            return Err(Error::DimensionMismatch(format!("{} detunings for {} modes", self.detunings.len(), self.lamb_dicke.n_modes())));
        }
        let [a0, a1, a2, a3] = self.alpha;
        match self.branch {
            Branch::Z if a1 != 0.0 || a2 != 0.0 => Err(Error::Branch("z-branch drives require α₁ = α₂ = 0".into())),
            Branch::Xy if a0 != 0.0 || a3 != 0.0 => Err(Error::Branch("xy-branch drives require α₀ = α₃ = 0".into())),
            _ => Ok(()),
        }
    }

    /// Copy with every Rabi frequency multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut d = self.clone();
        d.rabi.iter_mut().for_each(|o| *o *= s);
        d
    }

    /// Beat frequency implied by the detunings; they must agree across modes.
    pub fn drive_frequency(&self) -> Result<f64> {
        let implied: Vec<f64> = self.detunings.iter().zip(&self.lamb_dicke.mode_frequencies).map(|(d, w)| d + w).collect();
        let Some(&first) = implied.first() else {
            return Ok(0.0);
        };
        if implied.iter().any(|w| (w - first).abs() > 1e-9 * first.abs().max(1.0)) {
            return Err(Error::Branch("per-mode detunings do not correspond to a single drive frequency".into()));
        }
        Ok(first)
    }

    /// Diagonal spin action `(α₀ + α₃σz)` on ↓ and ↑.
    pub fn force_factors(&self) -> [f64; 2] {
        [self.alpha[0] - self.alpha[3], self.alpha[0] + self.alpha[3]]
    }

    /// Resolved-sideband and Lamb-Dicke diagnostics.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (m, &w) in self.lamb_dicke.mode_frequencies.iter().enumerate() {
            if self.branch == Branch::Z && self.detunings[m].abs() >= w / 5.0 {
                out.push(format!("mode {m}: |δ| = {:e} is not small against ω/5 = {:e}", self.detunings[m].abs(), w / 5.0));
            }
            for (i, &o) in self.rabi.iter().enumerate() {
                let coupling = (o * self.lamb_dicke.eta[(m, i)]).abs();
                if coupling >= w / 5.0 {
                    out.push(format!("ion {i}, mode {m}: |Ωη| = {coupling:e} is not small against ω/5 = {:e}", w / 5.0));
                }
            }
        }
        out
    }

    fn check_space(&self, space: &SpaceSpec) -> Result<()> {
        self.validate()?;
        if space.n_spins != self.n_ions() || space.n_modes() != self.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "drive for {} ions and {} modes, space with {} spins and {} modes",
                self.n_ions(),
                self.n_modes(),
                space.n_spins,
                space.n_modes()
            )));
        }
        Ok(())
    }

    /// Interaction-picture Hamiltonian as a sum of product terms.
    pub fn hamiltonian(&self, space: &SpaceSpec, form: Form) -> Result<TermHamiltonian> {
        self.check_space(space)?;
        let mut h = TermHamiltonian::new(space.clone());
        let i_unit = C64::new(0.0, 1.0);
        let [a0, a1, a2, a3] = self.alpha;
        for ion in 0..self.n_ions() {
            let omega = self.rabi[ion];
            if omega == 0.0 {
                continue;
            }
            let phase = C64::from_polar(1.0, self.phases[ion]);
            let (spin_op, amplitude, frequency) = match self.branch {
                Branch::Z => (SpinOp::Kappa([a0, 0.0, 0.0, a3]), phase * omega, -self.drive_frequency_for(form)?),
                Branch::Xy => (SpinOp::Plus, phase * (omega / 2.0) * C64::new(a1, -a2), -self.carrier_detuning),
            };
            let spin = SiteFactor::from_dense(ion, &spin_op.matrix(), 0.0);
            match (self.branch, form) {
                (_, Form::Full) => {
                    let mut op = ProductOp::identity().with(spin);
                    for m in 0..self.n_modes() {
                        let eta = self.lamb_dicke.eta[(m, ion)];
                        if eta != 0.0 {
                            let d = displacement_matrix(space.modes[m].n_max, C64::new(0.0, eta));
                            op = op.with(SiteFactor::from_dense(space.mode_site(m), &d, self.lamb_dicke.mode_frequencies[m]));
                        }
                    }
                    h.push_hermitian(Coefficient::Oscillating { amplitude, frequency }, op);
                }
                (Branch::Z, Form::LambDicke) => {
                    for m in 0..self.n_modes() {
                        let eta = self.lamb_dicke.eta[(m, ion)];
                        if eta == 0.0 {
                            continue;
                        }
                        let adag = SiteFactor::from_dense(space.mode_site(m), &ModeOp::Adag.matrix(space.modes[m].n_max), 0.0);
                        let op = ProductOp::identity().with(spin.clone()).with(adag);
                        let coefficient = Coefficient::Oscillating { amplitude: amplitude * i_unit * eta, frequency: -self.detunings[m] };
                        h.push_hermitian(coefficient, op);
                    }
                }
                (Branch::Xy, Form::LambDicke) => {
                    h.push_hermitian(Coefficient::Oscillating { amplitude, frequency }, ProductOp::identity().with(spin.clone()));
                    for m in 0..self.n_modes() {
                        let eta = self.lamb_dicke.eta[(m, ion)];
                        if eta == 0.0 {
                            continue;
                        }
                        let w = self.lamb_dicke.mode_frequencies[m];
                        let n_max = space.modes[m].n_max;
                        for (op, sign) in [(ModeOp::A, -1.0), (ModeOp::Adag, 1.0)] {
                            let factor = SiteFactor::from_dense(space.mode_site(m), &op.matrix(n_max), 0.0);
                            let coefficient = Coefficient::Oscillating { amplitude: amplitude * i_unit * eta, frequency: frequency + sign * w };
                            h.push_hermitian(coefficient, ProductOp::identity().with(spin.clone()).with(factor));
                        }
                    }
                }
            }
        }
        Ok(h)
    }

    fn drive_frequency_for(&self, form: Form) -> Result<f64> {
        match form {
            Form::Full => self.drive_frequency(),
            // unused: the Lamb-Dicke z-branch terms carry δ_m directly
            Form::LambDicke => Ok(0.0),
        }
    }
}

/// Dense interaction-picture Hamiltonian at time `t`.
pub fn build_branch_hamiltonian(space: &SpaceSpec, drive: &DriveSpec, form: Form, t: f64) -> Result<DMatrix<C64>> {
    Ok(drive.hamiltonian(space, form)?.to_dense(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{linalg::max_abs, propagate, MatrixFunction, ModeSpec, PropagateOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tensor(eta: &[&[f64]], freqs: &[f64]) -> LambDickeTensor {
        let rows = eta.len();
        let cols = eta[0].len();
        LambDickeTensor { eta: DMatrix::from_fn(rows, cols, |r, c| eta[r][c]), mode_frequencies: freqs.to_vec() }
    }

    #[test]
    fn rates_without_lamb_dicke_coupling() {
        assert_eq!(rabi_rate(3, 3, 2.0, 0.0), 2.0);
        assert_eq!(rabi_rate(4, 3, 2.0, 0.0), 0.0);
        assert!((rabi_rate(0, 0, 1.0, 0.3) - (-0.045_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rates_are_symmetric() {
        for n in 0..8 {
            for m in 0..8 {
                assert_eq!(rabi_rate(n, m, 1.3, 0.21), rabi_rate(m, n, 1.3, 0.21));
            }
        }
    }

    #[test]
    fn lamb_dicke_limit() {
        let eta = 1e-3;
        for n in 1..6 {
            let red = rabi_rate(n - 1, n, 1.0, eta);
            let blue = rabi_rate(n + 1, n, 1.0, eta);
            let carrier = rabi_rate(n, n, 1.0, eta);
            let nf = n as f64;
            assert!((red / (eta * nf.sqrt()) - 1.0).abs() < 10.0 * eta * eta * (nf + 1.0));
            assert!((blue / (eta * (nf + 1.0).sqrt()) - 1.0).abs() < 10.0 * eta * eta * (nf + 1.0));
            assert!((carrier - 1.0).abs() < 10.0 * eta * eta * (nf + 1.0));
        }
    }

    #[test]
    fn rates_match_displacement_elements() {
        let eta = 0.37;
        for n in 0..6 {
            for m in 0..6 {
                let d = crate::hilbert::displacement_matrix_element(n, m, C64::new(0.0, eta));
                assert!((d.norm() - rabi_rate(n, m, 1.0, eta).abs()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn resonant_pi_pulse_transfers_population() {
        let y = C64::new(0.0, 1.0);
        let p = RabiProblem { delta: 0.0, y, t: PI / 2.0 };
        let out = rabi_solution(&p, TwoLevel { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) });
        assert!((out.up.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn detuned_drive_reaches_half() {
        let y = C64::new(0.8, 0.0);
        let delta = 2.0 * y.norm();
        let x = 2.0_f64.sqrt() * y.norm();
        let p = RabiProblem { delta, y, t: PI / (2.0 * x) };
        let out = rabi_solution(&p, TwoLevel { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) });
        assert!((out.up.norm_sqr() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let delta = rng.random_range(-3.0..3.0);
            let y = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let t = rng.random_range(0.0..4.0);
            let p = RabiProblem { delta, y, t };
            let m = p.matrix();
            // unitarity
            let u = DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
            assert!(max_abs(&(&u * u.adjoint() - DMatrix::identity(2, 2))) < 1e-12);
            // (↑, ↓) generator H = [[0, iYe^{−iδt}], [−iY*e^{iδt}, 0]]; our vectors are (↓, ↑)
            let h = MatrixFunction {
                dim: 2,
                f: move |s: f64| {
                    let up_down = C64::new(0.0, 1.0) * y * C64::from_polar(1.0, -delta * s);
                    DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), up_down.conj(), up_down, C64::new(0.0, 0.0)])
                },
            };
            let space = SpaceSpec::spins(1).unwrap();
            let start = SimState::new(space, vec![C64::new(0.6, 0.1), C64::new(0.2, -0.77)]).unwrap();
            let mut start = start;
            start.normalize();
            let opts = PropagateOptions { tol: 1e-12, ..Default::default() };
            let out = propagate(&h, &start, 0.0, t, &opts).unwrap();
            let cf = rabi_solution(&p, TwoLevel { up: start.amplitudes[1], down: start.amplitudes[0] });
            assert!((cf.up - out.state.amplitudes[1]).norm() < 1e-9);
            assert!((cf.down - out.state.amplitudes[0]).norm() < 1e-9);
        }
    }

    #[test]
    fn rotation_matrix_properties() {
        assert!(max_abs(&(rotation(0.0, 1.2) - DMatrix::identity(2, 2))) < 1e-15);
        let r = rotation(PI, 0.4);
        // R(π, φ)|↓⟩ = −i e^{iφ} |↑⟩
        assert!((r[(1, 0)] - C64::new(0.0, -1.0) * C64::from_polar(1.0, 0.4)).norm() < 1e-15);
        let r = rotation(PI / 2.0, PI / 2.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r[(0, 0)] - C64::from(s)).norm() < 1e-15 && (r[(1, 0)] - C64::from(s)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let u = rotation(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
            assert!(max_abs(&(&u * u.adjoint() - DMatrix::identity(2, 2))) < 1e-12);
        }
    }

    #[test]
    fn zero_rabi_gives_zero_hamiltonian() {
        let ld = tensor(&[&[0.1, 0.1]], &[1.0]);
        let d = DriveSpec::z_branch(vec![0.0, 0.0], vec![0.0, 0.0], -0.5, 1.5, ld, vec![0.1]).unwrap();
        let space = SpaceSpec::new(2, vec![ModeSpec::new("m", 1.0, 4)]).unwrap();
        let h = build_branch_hamiltonian(&space, &d, Form::Full, 0.3).unwrap();
        assert_eq!(max_abs(&h), 0.0);
    }

    #[test]
    fn branch_coefficients_are_checked() {
        let ld = tensor(&[&[0.1]], &[1.0]);
        let mut d = DriveSpec::z_branch(vec![1.0], vec![0.0], -0.5, 1.5, ld, vec![0.1]).unwrap();
        d.alpha[1] = 0.3;
        assert!(matches!(d.validate(), Err(Error::Branch(_))));
    }

    #[test]
    fn force_ratio_of_leibfried_coefficients() {
        let ld = tensor(&[&[0.1]], &[1.0]);
        let d = DriveSpec::z_branch(vec![1.0], vec![0.0], -0.5, 1.5, ld, vec![0.1]).unwrap();
        assert_eq!(d.force_factors(), [-2.0, 1.0]);
        let k = SpinOp::Kappa(d.alpha).matrix();
        assert_eq!(k[(0, 0)], C64::from(-2.0));
        assert_eq!(k[(1, 1)], C64::from(1.0));
    }

    #[test]
    fn full_hamiltonians_are_hermitian() {
        let ld = tensor(&[&[0.12, -0.12], &[0.08, 0.08]], &[2.0, 3.5]);
        let space = SpaceSpec::new(2, vec![ModeSpec::new("a", 2.0, 5), ModeSpec::new("b", 3.5, 4)]).unwrap();
        let z = DriveSpec::z_branch_at(vec![0.3, 0.25], vec![0.1, -0.4], -0.5, 1.5, ld.clone(), 2.2).unwrap();
        let xy = DriveSpec::xy_branch(vec![0.3, 0.25], vec![0.1, -0.4], 0.8, 0.6, ld, 0.05).unwrap();
        for d in [&z, &xy] {
            for form in [Form::Full, Form::LambDicke] {
                let h = build_branch_hamiltonian(&space, d, form, 0.77).unwrap();
                assert!(max_abs(&(&h - h.adjoint())) < 1e-10 * max_abs(&h));
            }
        }
    }

    #[test]
    fn blue_sideband_couplings_from_full_hamiltonian() {
        // single ion, single mode; on the first blue sideband the ↓,n → ↑,n+1 element
        // rotates at (n'−n)ω − Δ = 0 and its magnitude is Ω_{n+1,n}
        let w = 1.0;
        let eta = 0.25;
        let omega = 0.01;
        let ld = tensor(&[&[eta]], &[w]);
        let d = DriveSpec::xy_branch(vec![omega], vec![0.0], 1.0, 0.0, ld, w).unwrap();
        let space = SpaceSpec::new(1, vec![ModeSpec::new("m", w, 8)]).unwrap();
        for t in [0.0, 1.3, 4.0] {
            let h = build_branch_hamiltonian(&space, &d, Form::Full, t).unwrap();
            for n in 0..6 {
                let el = h[(space.index(1, &[n + 1]), space.index(0, &[n]))];
                // (Ω/2)·⟨↑|σ+|↓⟩ = Ω
                assert!((el.norm() - rabi_rate(n + 1, n, omega, eta)).abs() < 1e-10 * omega);
            }
        }
    }

    #[test]
    fn carrier_only_drive_leaves_motion_untouched() {
        let ld = tensor(&[&[0.0]], &[1.0]);
        let d = DriveSpec::xy_branch(vec![0.2], vec![0.3], 1.0, 0.0, ld, 0.0).unwrap();
        let space = SpaceSpec::new(1, vec![ModeSpec::new("m", 1.0, 5)]).unwrap();
        let h = d.hamiltonian(&space, Form::Full).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
        amps[space.index(0, &[1])] = C64::from(0.6);
        amps[space.index(0, &[2])] = C64::from(0.8);
        let start = SimState::new(space.clone(), amps).unwrap();
        let out = propagate(&h, &start, 0.0, 7.0, &PropagateOptions::default()).unwrap();
        for n in 0..=5 {
            let p = |s: &SimState| (0..2).map(|c| s.amplitudes[space.index(c, &[n])].norm_sqr()).sum::<f64>();
            assert!((p(&out.state) - p(&start)).abs() < 1e-10);
        }
    }

    #[test]
    fn lamb_dicke_form_approaches_full_form() {
        // the a† coupling agrees to first order in η once the term rotating
        // at ω_I + ω (dropped by the Lamb-Dicke form) is added back
        let eta = 1e-4;
        let ld = tensor(&[&[eta]], &[1.0]);
        let d = DriveSpec::z_branch_at(vec![1.0], vec![0.2], 0.0, 1.0, ld, 0.9).unwrap();
        let space = SpaceSpec::new(1, vec![ModeSpec::new("m", 1.0, 3)]).unwrap();
        let t = 0.6;
        let full = build_branch_hamiltonian(&space, &d, Form::Full, t).unwrap();
        let ldr = build_branch_hamiltonian(&space, &d, Form::LambDicke, t).unwrap();
        let r = space.index(1, &[1]);
        let c = space.index(1, &[0]);
        let counter = C64::new(0.0, -eta) * C64::from_polar(1.0, -0.2 + (0.9 + 1.0) * t);
        assert!((full[(r, c)] - ldr[(r, c)] - counter).norm() < 1e-7);
    }
}
