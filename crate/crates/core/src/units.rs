//! Physical constants (CODATA 2018, SI) and the scaled unit system used by the
//! crystal solver.

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Coulomb constant 1/(4πε₀).
pub fn coulomb_constant() -> f64 {
    1.0 / (4.0 * std::f64::consts::PI * EPSILON_0)
}

/// Length and frequency scales that make the crystal problem dimensionless.
///
/// With `ℓ = (Q²/(4πε₀ M ω_ref²))^(1/3)` the potential in units of `M ω_ref² ℓ²`
/// reads `½ Σ (ω/ω_ref)² |r − p|² + Σ_{i<j} 1/|r_i − r_j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalScale {
    pub length: f64,
    pub frequency: f64,
}

impl CrystalScale {
    pub fn new(mass: f64, charge: f64, frequency: f64) -> Self {
        let length = (coulomb_constant() * charge * charge / (mass * frequency * frequency)).cbrt();
        CrystalScale { length, frequency }
    }

    /// Energy unit `M ω_ref² ℓ²`.
    pub fn energy(&self, mass: f64) -> f64 {
        mass * self.frequency * self.frequency * self.length * self.length
    }
}
