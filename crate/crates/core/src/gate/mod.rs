//! Geometric phase gates driven by spin-dependent forces.

pub mod analytic;
pub mod parity;
pub mod program;
pub mod schmitz;

pub use analytic::{analytic_propagator, echo_dynamic_residual, spin_z, ModeLedger, PhaseLedger};
pub use parity::{bell_fidelity_estimate, fit_fringe, pair_density, parity_scan, parity_scan_density, FringeFit};
pub use program::{run_program, run_thermal, scan_durations, Engine, ProgramRun, PulseProgram, RunOptions, Segment, SegmentLedger, ThermalRun};
pub use schmitz::{schmitz_phase_check, SchmitzReport};
