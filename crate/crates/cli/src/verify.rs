//! Self-check suite: operator identities plus closed-form and invariant checks.

use std::f64::consts::PI;

use anyhow::Result;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trapsim::crystal::{solve, IonSpecies, TrapConfiguration};
use trapsim::drive::{rabi_solution, rotation, RabiProblem, TwoLevel};
use trapsim::hilbert::linalg::expm;
use trapsim::hilbert::{displacement_matrix_element, propagate_magnus, verify_identities, ModeOp};
use trapsim::ising::{effective_hamiltonian, BiasMode, IsingModel};
use trapsim::C64;

use crate::output::{num, Outcome, Table};

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn axial_ratios(n: usize) -> Result<Vec<f64>> {
    let wz = 2.0 * PI * 1e6;
    let sol = solve(&TrapConfiguration::linear(IonSpecies::from_atomic(40.0, 1)?, n, [10.0 * wz, 11.0 * wz, wz])?)?;
    let mut along = sol.modes_along(2);
    along.sort_by(|&a, &b| sol.mode_frequencies[a].total_cmp(&sol.mode_frequencies[b]));
    Ok(along.iter().map(|&m| sol.mode_frequencies[m] / sol.mode_frequencies[along[0]]).collect())
}

fn displacement_error(rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    let truncation = 60;
    let a = ModeOp::A.matrix(truncation);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let lambda = C64::from_polar(rng.random_range(0.0..0.5), rng.random_range(-PI..PI));
        let d = expm(&(a.adjoint() * lambda - &a * lambda.conj()));
        for n in 0..=12 {
            for m in 0..=12 {
                worst = worst.max((displacement_matrix_element(n, m, lambda) - d[(n, m)]).norm());
            }
        }
    }
    worst
}

fn rabi_error(rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let delta = rng.random_range(-2.0..2.0);
        let y = C64::from_polar(rng.random_range(0.0..2.0), rng.random_range(-PI..PI));
        let t = rng.random_range(0.0..5.0);
        // (↑, ↓) ordering: H_{↑↓} = iY e^{−iδt}
        let h = |s: f64| {
            let c = C64::new(0.0, 1.0) * y * C64::from_polar(1.0, -delta * s);
            DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), c, c.conj(), C64::new(0.0, 0.0)])
        };
        let start = [C64::new(0.3, 0.1), C64::new(0.5, -0.8)];
        let norm = (start[0].norm_sqr() + start[1].norm_sqr()).sqrt();
        let start = [start[0] / norm, start[1] / norm];
        let numeric = propagate_magnus(&h, &start, 0.0, t, 4000);
        let closed = rabi_solution(&RabiProblem { delta, y, t }, TwoLevel { up: start[0], down: start[1] });
        worst = worst.max((numeric[0] - closed.up).norm()).max((numeric[1] - closed.down).norm());
    }
    worst
}

fn unitarity(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs every check; failures are recorded as breaches.
pub fn verify(samples: usize, seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let identities = verify_identities(samples, seed);
    let two = axial_ratios(2)?;
    let three = axial_ratios(3)?;
    let mut rotation_error: f64 = 0.0;
    for _ in 0..samples {
        rotation_error = rotation_error.max(unitarity(&rotation(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))));
    }
    let h = effective_hamiltonian(&IsingModel::uniform(3, 0.7, -0.4), BiasMode::Included);
    let checks = [
        Check { name: "identity_pauli_rotation", value: identities.pauli_rotation, tolerance: 1e-8 },
        Check { name: "identity_displacement_rotation", value: identities.displacement_rotation, tolerance: 1e-8 },
        Check { name: "identity_canonical_transformation", value: identities.canonical_transformation, tolerance: 1e-8 },
        Check { name: "two_ion_stretch_ratio", value: (two[1] - 3f64.sqrt()).abs(), tolerance: 1e-10 },
        Check { name: "three_ion_ratios", value: (three[1] - 3f64.sqrt()).abs().max((three[2] - (29.0f64 / 5.0).sqrt()).abs()), tolerance: 1e-8 },
        Check { name: "displacement_elements", value: displacement_error(&mut rng, 20), tolerance: 1e-10 },
        Check { name: "rabi_closed_form", value: rabi_error(&mut rng, samples), tolerance: 1e-8 },
        Check { name: "rotation_unitarity", value: rotation_error, tolerance: 1e-13 },
        Check { name: "ising_hermiticity", value: (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max), tolerance: 0.0 },
    ];
    let mut out = Outcome::default();
    let mut t = Table::new("verify", &["check", "value", "tolerance", "pass"]);
    for c in &checks {
        let pass = c.value <= c.tolerance;
        t.push(vec![c.name.to_string(), num(c.value), num(c.tolerance), pass.to_string()]);
        out.summary(c.name, c.value);
        if !pass {
            out.breach(format!("{}: {:e} exceeds {:e}", c.name, c.value, c.tolerance));
        }
    }
    out.tables.push(t);
    Ok(out)
}
