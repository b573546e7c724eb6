//! Trapped-ion many-body simulation toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`crystal`] solves ion-crystal statics and normal modes for arbitrary
//!   collections of harmonic wells and produces Lamb-Dicke parameters.
//! * [`hilbert`] is the truncated spin ⊗ Fock engine: basis bookkeeping,
//!   operators, displacement matrix elements, time propagation.
//! * [`drive`] models laser–ion coupling in the interaction picture
//!   (sideband Rabi rates, closed-form Rabi solution, rotations).
//! * [`gate`] implements geometric phase gates: the closed-form displaced
//!   propagator, pulse programs and parity analysis.
//! * [`ising`] derives the effective quantum Ising model from drive
//!   parameters and runs adiabatic ramps against it.
//!
//! Frequencies are angular (rad/s) throughout and Hamiltonians are stored
//! divided by ħ, so a "Hamiltonian" has units of rad/s.

pub mod crystal;
pub mod drive;
pub mod error;
pub mod gate;
pub mod hilbert;
pub mod ising;
pub mod units;

pub use error::{Error, Result};

/// Complex amplitude type used everywhere.
pub type C64 = num_complex::Complex64;
