//! Spin-only Ising model obtained by eliminating the driven modes.

use nalgebra::DMatrix;

use crate::drive::{Branch, DriveSpec};
use crate::{Error, Result, C64};

/// `H = Σᵢ Bᵢ σxᵢ + Σ_{i≠j} J_ij σzᵢσzⱼ (+ Σᵢ biasᵢ σzᵢ)`, all in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub j: DMatrix<f64>,
    pub bx: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// The σz bias is cancelled by an equal and opposite compensation term.
    Compensated,
    Included,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Ferromagnetic,
    Antiferromagnetic,
    None,
}

impl IsingModel {
    pub fn new(j: DMatrix<f64>, bx: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        let n = bx.len();
        if j.nrows() != n || j.ncols() != n || bias.len() != n {
            return Err(Error::DimensionMismatch(format!("J is {}×{}, {} fields, {} biases", j.nrows(), j.ncols(), n, bias.len())));
        }
        if (0..n).any(|i| (0..n).any(|k| j[(i, k)] != j[(k, i)])) {
            return Err(Error::InvalidArgument("J must be symmetric".into()));
        }
        Ok(Self { j, bx, bias })
    }

    /// Uniform all-to-all coupling `J_ij = j` with field `bx` on every spin.
    pub fn uniform(n: usize, j: f64, bx: f64) -> Self {
        let j = DMatrix::from_fn(n, n, |r, c| if r == c { 0.0 } else { j });
        Self { j, bx: vec![bx; n], bias: vec![0.0; n] }
    }

    pub fn n_spins(&self) -> usize {
        self.bx.len()
    }

    /// Copy with `J` multiplied by `j_scale` and the field by `b_scale`.
    pub fn scaled(&self, j_scale: f64, b_scale: f64) -> Self {
        Self { j: &self.j * j_scale, bx: self.bx.iter().map(|b| b * b_scale).collect(), bias: self.bias.iter().map(|b| b * j_scale).collect() }
    }

    /// Label of the pair `(i, j)`: negative `J` favours aligned spins.
    pub fn order(&self, i: usize, k: usize) -> Order {
        let v = self.j[(i, k)];
        if v < 0.0 {
            Order::Ferromagnetic
        } else if v > 0.0 {
            Order::Antiferromagnetic
        } else {
            Order::None
        }
    }
}

/// `K_ij = Σ_m Ω_iΩ_jη_miη_mj cos(φ_i − φ_j)/δ_m`, including the diagonal.
pub fn coupling_kernel(drive: &DriveSpec) -> Result<DMatrix<f64>> {
    drive.validate()?;
    if drive.branch != Branch::Z {
        return Err(Error::Branch("spin-spin couplings need a z-branch drive".into()));
    }
    if let Some(m) = drive.detunings.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDetuning(m));
    }
    let n = drive.n_ions();
    let eta = &drive.lamb_dicke.eta;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let pair = drive.rabi[i] * drive.rabi[j] * (drive.phases[i] - drive.phases[j]).cos();
        (0..drive.n_modes()).map(|m| pair * eta[(m, i)] * eta[(m, j)] / drive.detunings[m]).sum()
    }))
}

/// `J_ij = α₃² K_ij` for `i ≠ j`, zero on the diagonal.
pub fn coupling_matrix(drive: &DriveSpec) -> Result<DMatrix<f64>> {
    let k = coupling_kernel(drive)?;
    let a3 = drive.alpha[3];
    Ok(DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| if i == j { 0.0 } else { a3 * a3 * k[(i, j)] }))
}

/// `biasᵢ = 2α₀α₃ Σ_j K_ij`, the σz term left by the state-independent part of the force.
pub fn bias_field(drive: &DriveSpec) -> Result<Vec<f64>> {
    let k = coupling_kernel(drive)?;
    let [a0, _, _, a3] = drive.alpha;
    Ok((0..k.nrows()).map(|i| 2.0 * a0 * a3 * k.row(i).sum()).collect())
}

/// Ising model of a z-branch drive with transverse field `bx`.
pub fn ising_model(drive: &DriveSpec, bx: Vec<f64>) -> Result<IsingModel> {
    IsingModel::new(coupling_matrix(drive)?, bx, bias_field(drive)?)
}

/// `2^N × 2^N` matrix of the model; spin `i` is bit `i` of the basis index, ↑ = 1.
pub fn effective_hamiltonian(model: &IsingModel, bias: BiasMode) -> DMatrix<C64> {
    let n = model.n_spins();
    let dim = 1usize << n;
    let z = |s: usize, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    diag += model.j[(i, k)] * z(s, i) * z(s, k);
                }
            }
            if bias == BiasMode::Included {
                diag += model.bias[i] * z(s, i);
            }
            h[(s ^ (1 << i), s)] += C64::from(model.bx[i]);
        }
        h[(s, s)] += C64::from(diag);
    }
    h
}
