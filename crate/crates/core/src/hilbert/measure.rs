//! Spin-basis measurements.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::SimState;
use crate::{Error, Result, C64};

/// Probabilities of every spin configuration (index as in
/// [`SpaceSpec::index`](super::space::SpaceSpec::index)) with the modes traced out.
pub fn measure_populations(state: &SimState) -> Vec<f64> {
    let spin_dim = state.space.spin_dim();
    let mut p = vec![0.0; spin_dim];
    for (idx, a) in state.amplitudes.iter().enumerate() {
        p[idx % spin_dim] += a.norm_sqr();
    }
    p
}

/// Reduced spin density matrix `Tr_modes |ψ⟩⟨ψ|`.
pub fn reduced_spin_state(state: &SimState) -> DMatrix<C64> {
    let sd = state.space.spin_dim();
    let md = state.space.mode_dim();
    DMatrix::from_fn(sd, sd, |r, c| (0..md).map(|m| state.amplitudes[r + m * sd] * state.amplitudes[c + m * sd].conj()).sum())
}

/// Multinomial sample of `shots` projective measurements of all spins.
pub fn sample_shots(state: &SimState, shots: usize, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("at least one shot is required".into()));
    }
    let p = measure_populations(state);
    let total: f64 = p.iter().sum();
    let mut cumulative = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for v in &p {
        acc += v / total;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; p.len()];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let k = cumulative.partition_point(|&c| c <= u).min(p.len() - 1);
        counts[k] += 1;
    }
    Ok(counts)
}
