use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ions {0} and {1} coincide")]
    CoincidentIons(usize, usize),

    #[error("invalid trap configuration: {0}")]
    InvalidTrap(String),

    #[error("equilibrium search did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    EquilibriumNotConverged { iterations: usize, gradient_norm: f64 },

    #[error("unstable crystal: mode {mode} has Hessian eigenvalue {eigenvalue:e} rad²/s²")]
    UnstableCrystal { mode: usize, eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Hilbert space of {dim} amplitudes exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("generator is not Hermitian at t = {time:e} (residual {residual:e})")]
    NonHermitian { time: f64, residual: f64 },

    #[error("Fock truncation leakage {leakage:e} in mode {mode} exceeds threshold {threshold:e}")]
    Leakage { mode: usize, leakage: f64, threshold: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("drive/branch mismatch: {0}")]
    Branch(String),

    #[error("zero detuning for mode {0}")]
    ZeroDetuning(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
