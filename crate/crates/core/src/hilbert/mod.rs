//! Truncated spin ⊗ Fock Hilbert space.

pub mod identities;
pub mod linalg;
pub mod measure;
pub mod operator;
pub mod propagate;
pub mod space;
pub mod special;

pub use identities::{verify_identities, IdentityReport};
pub use measure::{measure_populations, reduced_spin_state, sample_shots};
pub use operator::{build_operator, Coefficient, Generator, MatrixFunction, ModeOp, OperatorSpec, ProductOp, SiteFactor, SpinOp, TermHamiltonian};
pub use propagate::{magnus4_step, propagate, propagate_magnus, PropagateOptions, Propagation};
pub use space::{default_truncation, spin_label, ModeSpec, SimState, SpaceSpec, SpinAmplitudes, DEFAULT_DIMENSION_CAP, DOWN, UP};
pub use special::{displacement_matrix, displacement_matrix_element, laguerre};
