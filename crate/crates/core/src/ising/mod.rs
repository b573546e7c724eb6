//! Effective quantum Ising model of spins coupled through driven modes.

pub mod adiabatic;
pub mod effective;
pub mod exact;

pub use adiabatic::{adiabatic_run, all_right, crossover_curve, ground_state_crossover, steepness, AdiabaticRun, Profile, RampSchedule, Snapshot, SNAPSHOT_INTERVAL};
pub use effective::{bias_field, coupling_kernel, coupling_matrix, effective_hamiltonian, ising_model, BiasMode, IsingModel, Order};
pub use exact::{dressing_parameter, exact_vs_effective, weaker_dressing, ComparisonPoint, ExactComparison};
