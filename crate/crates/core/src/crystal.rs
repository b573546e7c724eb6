//! Ion-crystal statics and normal modes.
//!
//! Each ion sits in its own harmonic well (three frequencies, principal axes and
//! a minimum); a common linear Paul trap is the special case where all wells
//! coincide. Positions are stored in the flat layout
//! `[x_1..x_N, y_1..y_N, z_1..z_N]`, which is also the column layout of the mode
//! matrix `B` (rows are modes, `q = B x`).
//!
//! All heavy lifting happens in the dimensionless system of [`CrystalScale`];
//! the public functions take and return SI values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::units::{self, CrystalScale};
use crate::{Error, Result};

/// Minimum allowed ion separation in metres.
const MIN_SEPARATION: f64 = 1e-12;
/// Gradient norm (scaled units) at which the equilibrium search stops.
const GRADIENT_TOLERANCE: f64 = 1e-12;
const MAX_NEWTON_ITERATIONS: usize = 500;
/// Relative eigenvalue window treated as degenerate.
const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// Relative eigenvalue window clamped to zero instead of raising an instability.
const MARGINAL_TOLERANCE: f64 = 1e-9;
const SIGN_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidTrap(format!("ion mass must be positive, got {mass}")));
        }
        if charge == 0.0 || !charge.is_finite() {
            return Err(Error::InvalidTrap("ion charge must be non-zero".into()));
        }
        Ok(IonSpecies { mass, charge })
    }

    /// Species from a mass in atomic mass units and a charge in units of `e`.
    pub fn from_atomic(mass_u: f64, charge_e: i32) -> Result<Self> {
        Self::new(mass_u * units::ATOMIC_MASS_UNIT, charge_e as f64 * units::ELEMENTARY_CHARGE)
    }
}

/// Harmonic well confining a single ion.
#[derive(Debug, Clone, PartialEq)]
pub struct Well {
    /// Angular frequencies along the principal axes (rad/s).
    pub frequencies: [f64; 3],
    /// Orthonormal principal axes, `axes[j]` belongs to `frequencies[j]`.
    pub axes: [[f64; 3]; 3],
    /// Position of the well minimum (m).
    pub minimum: [f64; 3],
}

impl Well {
    /// Well with principal axes along the laboratory x, y, z directions.
    pub fn aligned(frequencies: [f64; 3], minimum: [f64; 3]) -> Self {
        Well {
            frequencies,
            axes: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            minimum,
        }
    }

    fn validate(&self, ion: usize) -> Result<()> {
        for (j, w) in self.frequencies.iter().enumerate() {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidTrap(format!("ion {ion}: frequency {j} must be positive, got {w}")));
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let dot = dot3(&self.axes[a], &self.axes[b]);
                let expected = if a == b { 1.0 } else { 0.0 };
                if (dot - expected).abs() > 1e-12 {
                    return Err(Error::InvalidTrap(format!("ion {ion}: principal axes are not orthonormal")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfiguration {
    pub species: IonSpecies,
    pub wells: Vec<Well>,
}

impl TrapConfiguration {
    pub fn new(species: IonSpecies, wells: Vec<Well>) -> Result<Self> {
        if wells.is_empty() {
            return Err(Error::InvalidTrap("at least one ion is required".into()));
        }
        for (i, w) in wells.iter().enumerate() {
            w.validate(i)?;
        }
        Ok(TrapConfiguration { species, wells })
    }

    /// `n` ions in one linear trap with frequencies `[ω_x, ω_y, ω_z]` and its
    /// minimum at the origin.
    pub fn linear(species: IonSpecies, n: usize, frequencies: [f64; 3]) -> Result<Self> {
        Self::new(species, vec![Well::aligned(frequencies, [0.0; 3]); n])
    }

    pub fn n_ions(&self) -> usize {
        self.wells.len()
    }

    /// Scale with the weakest well frequency as reference.
    pub fn scale(&self) -> CrystalScale {
        let reference = self
            .wells
            .iter()
            .flat_map(|w| w.frequencies.iter().copied())
            .fold(f64::INFINITY, f64::min);
        CrystalScale::new(self.species.mass, self.species.charge, reference)
    }

    fn scaled(&self) -> ScaledTrap {
        let scale = self.scale();
        let wells = self
            .wells
            .iter()
            .map(|w| ScaledWell {
                stiffness: w.frequencies.map(|f| (f / scale.frequency).powi(2)),
                axes: w.axes,
                minimum: w.minimum.map(|p| p / scale.length),
            })
            .collect();
        ScaledTrap { wells, scale }
    }
}

struct ScaledWell {
    stiffness: [f64; 3],
    axes: [[f64; 3]; 3],
    minimum: [f64; 3],
}

struct ScaledTrap {
    wells: Vec<ScaledWell>,
    scale: CrystalScale,
}

impl ScaledTrap {
    fn n(&self) -> usize {
        self.wells.len()
    }

    fn ion(&self, x: &[f64], i: usize) -> [f64; 3] {
        let n = self.n();
        [x[i], x[i + n], x[i + 2 * n]]
    }

    fn check_separations(&self, x: &[f64]) -> Result<()> {
        let min = MIN_SEPARATION / self.scale.length;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                let d = sub3(&self.ion(x, i), &self.ion(x, j));
                if norm3(&d) <= min {
                    return Err(Error::CoincidentIons(i, j));
                }
            }
        }
        Ok(())
    }

    fn potential(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for (i, w) in self.wells.iter().enumerate() {
            let r = sub3(&self.ion(x, i), &w.minimum);
            for j in 0..3 {
                let proj = dot3(&r, &w.axes[j]);
                v += 0.5 * w.stiffness[j] * proj * proj;
            }
        }
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                v += 1.0 / norm3(&sub3(&self.ion(x, i), &self.ion(x, j)));
            }
        }
        v
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let n = self.n();
        let mut g = DVector::zeros(3 * n);
        for (i, w) in self.wells.iter().enumerate() {
            let r = sub3(&self.ion(x, i), &w.minimum);
            for j in 0..3 {
                let proj = dot3(&r, &w.axes[j]);
                for a in 0..3 {
                    g[i + a * n] += w.stiffness[j] * proj * w.axes[j][a];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let r = sub3(&self.ion(x, i), &self.ion(x, j));
                let d = norm3(&r);
                let d3 = d * d * d;
                for a in 0..3 {
                    let f = -r[a] / d3;
                    g[i + a * n] += f;
                    g[j + a * n] -= f;
                }
            }
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut h = DMatrix::zeros(3 * n, 3 * n);
        for (i, w) in self.wells.iter().enumerate() {
            for j in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        h[(i + a * n, i + b * n)] += w.stiffness[j] * w.axes[j][a] * w.axes[j][b];
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let r = sub3(&self.ion(x, i), &self.ion(x, j));
                let d = norm3(&r);
                let d2 = d * d;
                let d5 = d2 * d2 * d;
                for a in 0..3 {
                    for b in 0..3 {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        let c = (3.0 * r[a] * r[b] - d2 * delta) / d5;
                        h[(i + a * n, i + b * n)] += c;
                        h[(j + a * n, j + b * n)] += c;
                        h[(i + a * n, j + b * n)] -= c;
                        h[(j + a * n, i + b * n)] -= c;
                    }
                }
            }
        }
        h
    }

    /// Ions sharing a well minimum are spread at 1.1 ℓ along that well's
    /// weakest axis; everybody else starts at their own minimum.
    fn initial_guess(&self) -> Vec<f64> {
        let n = self.n();
        let mut x = vec![0.0; 3 * n];
        let mut assigned = vec![false; n];
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let group: Vec<usize> = (i..n)
                .filter(|&j| !assigned[j] && norm3(&sub3(&self.wells[j].minimum, &self.wells[i].minimum)) < 1e-9)
                .collect();
            let well = &self.wells[i];
            let weakest = (0..3)
                .min_by(|&a, &b| well.stiffness[a].total_cmp(&well.stiffness[b]))
                .unwrap_or(0);
            let axis = well.axes[weakest];
            let centre = (group.len() as f64 - 1.0) / 2.0;
            for (k, &j) in group.iter().enumerate() {
                let offset = 1.1 * (k as f64 - centre);
                for a in 0..3 {
                    x[j + a * n] = self.wells[j].minimum[a] + offset * axis[a];
                }
                assigned[j] = true;
            }
        }
        x
    }
}

/// Total potential energy (J): harmonic wells plus pairwise Coulomb repulsion.
pub fn total_potential(config: &TrapConfiguration, positions: &[f64]) -> Result<f64> {
    let trap = config.scaled();
    let x = to_scaled(&trap, positions)?;
    trap.check_separations(&x)?;
    Ok(trap.potential(&x) * trap.scale.energy(config.species.mass))
}

/// Gradient of [`total_potential`] (N).
pub fn potential_gradient(config: &TrapConfiguration, positions: &[f64]) -> Result<Vec<f64>> {
    let trap = config.scaled();
    let x = to_scaled(&trap, positions)?;
    trap.check_separations(&x)?;
    let factor = trap.scale.energy(config.species.mass) / trap.scale.length;
    Ok(trap.gradient(&x).iter().map(|g| g * factor).collect())
}

/// Equilibrium positions (m) by damped Newton iteration on the analytic
/// gradient and Hessian, falling back to gradient descent where the Hessian is
/// not positive definite.
pub fn find_equilibrium(config: &TrapConfiguration, initial_guess: Option<&[f64]>) -> Result<Vec<f64>> {
    let trap = config.scaled();
    let mut x = match initial_guess {
        Some(guess) => to_scaled(&trap, guess)?,
        None => trap.initial_guess(),
    };
    trap.check_separations(&x)?;

    let mut value = trap.potential(&x);
    let mut grad = trap.gradient(&x);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let gnorm = grad.norm();
        if gnorm < GRADIENT_TOLERANCE {
            return Ok(x.iter().map(|u| u * trap.scale.length).collect());
        }
        let h = trap.hessian(&x);
        let direction = match h.clone().cholesky() {
            Some(chol) => -chol.solve(&grad),
            None => -&grad,
        };
        let slope = grad.dot(&direction);

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = x.iter().zip(direction.iter()).map(|(a, d)| a + step * d).collect();
            if trap.check_separations(&candidate).is_ok() {
                let v = trap.potential(&candidate);
                let g = trap.gradient(&candidate);
                let armijo = v <= value + 1e-4 * step * slope;
                // Close to the minimum the energy stops resolving the step.
                let flat = (v - value).abs() <= 1e-14 * value.abs().max(1.0) && g.norm() < gnorm;
                if armijo || flat {
                    x = candidate;
                    value = v;
                    grad = g;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::EquilibriumNotConverged {
        iterations: MAX_NEWTON_ITERATIONS,
        gradient_norm: grad.norm(),
    })
}

/// Mass-weighted Hessian `a_kl = (1/M) ∂²V/∂r_k∂r_l` (1/s²).
pub fn hessian(config: &TrapConfiguration, positions: &[f64]) -> Result<DMatrix<f64>> {
    let trap = config.scaled();
    let x = to_scaled(&trap, positions)?;
    trap.check_separations(&x)?;
    let w2 = trap.scale.frequency * trap.scale.frequency;
    Ok(trap.hessian(&x) * w2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    /// rad/s, ascending.
    pub frequencies: Vec<f64>,
    /// Rows are the orthonormal mode vectors.
    pub matrix: DMatrix<f64>,
    /// rad²/s², ascending, after marginal clamping.
    pub eigenvalues: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Diagonalise the mass-weighted Hessian.
///
/// Rows of the returned matrix follow a reproducible convention: the first
/// entry with magnitude above 1e-9 is positive, and degenerate eigenspaces get
/// a canonical basis (pivoted Gram–Schmidt of the projected unit vectors)
/// ordered by descending lexicographic comparison of rows.
pub fn normal_modes(a: &DMatrix<f64>) -> Result<NormalModes> {
    let dim = a.nrows();
    if dim == 0 || a.ncols() != dim {
        return Err(Error::DimensionMismatch("Hessian must be a non-empty square matrix".into()));
    }
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let sym = (a + a.transpose()) * (0.5 / scale);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let mut warnings = Vec::new();
    let mut eigenvalues = Vec::with_capacity(dim);
    for (m, &v) in values.iter().enumerate() {
        if v < -MARGINAL_TOLERANCE * max_abs {
            return Err(Error::UnstableCrystal { mode: m, eigenvalue: v * scale });
        }
        if v <= 0.0 {
            warnings.push(format!("mode {m} is marginal (eigenvalue {:e} clamped to 0)", v * scale));
            eigenvalues.push(0.0);
        } else {
            eigenvalues.push(v * scale);
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && (values[end] - values[start]).abs() <= DEGENERACY_TOLERANCE * max_abs {
            end += 1;
        }
        let block: Vec<Vec<f64>> = order[start..end]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        let mut canonical = if block.len() == 1 { block } else { canonical_basis(&block) };
        for row in canonical.iter_mut() {
            fix_sign(row);
        }
        if canonical.len() > 1 {
            canonical.sort_by(|p, q| lexicographic(q, p));
        }
        rows.extend(canonical);
        start = end;
    }

    let matrix = DMatrix::from_fn(dim, dim, |m, k| rows[m][k]);
    let frequencies = eigenvalues.iter().map(|v| v.sqrt()).collect();
    Ok(NormalModes { frequencies, matrix, eigenvalues, warnings })
}

fn canonical_basis(block: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = block[0].len();
    let project = |e: usize| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for v in block {
            let c = v[e];
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    let mut used = vec![false; dim];
    while basis.len() < block.len() {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for e in (0..dim).filter(|&e| !used[e]) {
            let mut v = project(e);
            for b in &basis {
                let c: f64 = b.iter().zip(&v).map(|(p, q)| p * q).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let better = match &best {
                None => true,
                Some((_, _, n)) => norm > n + 1e-9,
            };
            if better {
                best = Some((e, v, norm));
            }
        }
        match best {
            Some((e, v, norm)) if norm > 1e-12 => {
                used[e] = true;
                basis.push(v.iter().map(|x| x / norm).collect());
            }
            // Numerically exhausted; keep the solver's vectors.
            _ => return block.to_vec(),
        }
    }
    basis
}

fn fix_sign(row: &mut [f64]) {
    if let Some(first) = row.iter().find(|v| v.abs() > SIGN_THRESHOLD) {
        if *first < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn lexicographic(p: &[f64], q: &[f64]) -> std::cmp::Ordering {
    for (a, b) in p.iter().zip(q) {
        if (a - b).abs() > SIGN_THRESHOLD {
            return a.total_cmp(b);
        }
    }
    std::cmp::Ordering::Equal
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSolution {
    /// Equilibrium positions (m), flat layout.
    pub positions: Vec<f64>,
    /// rad/s, ascending.
    pub mode_frequencies: Vec<f64>,
    /// 3N×3N orthogonal, rows are modes.
    pub mode_matrix: DMatrix<f64>,
    pub hessian_eigenvalues: Vec<f64>,
    pub warnings: Vec<String>,
}

impl CrystalSolution {
    pub fn n_ions(&self) -> usize {
        self.positions.len() / 3
    }

    /// Position of ion `i` (m).
    pub fn position(&self, i: usize) -> [f64; 3] {
        let n = self.n_ions();
        [self.positions[i], self.positions[i + n], self.positions[i + 2 * n]]
    }

    /// Cartesian axis (0 = x, 1 = y, 2 = z) carrying most of mode `m`.
    pub fn mode_axis(&self, m: usize) -> usize {
        let n = self.n_ions();
        let weight = |a: usize| (0..n).map(|i| self.mode_matrix[(m, i + a * n)].powi(2)).sum::<f64>();
        (0..3).max_by(|&a, &b| weight(a).total_cmp(&weight(b))).unwrap_or(0)
    }

    /// Indices of the modes polarised mainly along `axis`, ascending in frequency.
    pub fn modes_along(&self, axis: usize) -> Vec<usize> {
        (0..self.mode_frequencies.len()).filter(|&m| self.mode_axis(m) == axis).collect()
    }
}

/// Equilibrium, Hessian and normal modes in one go.
pub fn solve(config: &TrapConfiguration) -> Result<CrystalSolution> {
    let positions = find_equilibrium(config, None)?;
    let a = hessian(config, &positions)?;
    let modes = normal_modes(&a)?;
    Ok(CrystalSolution {
        positions,
        mode_frequencies: modes.frequencies,
        mode_matrix: modes.matrix,
        hessian_eigenvalues: modes.eigenvalues,
        warnings: modes.warnings,
    })
}

/// Lamb-Dicke parameters `η[m][i]` for one effective wavevector per ion.
#[derive(Debug, Clone, PartialEq)]
pub struct LambDickeTensor {
    /// rows = modes, columns = ions
    pub eta: DMatrix<f64>,
    /// Frequencies of the modes in `eta`, rad/s.
    pub mode_frequencies: Vec<f64>,
}

impl LambDickeTensor {
    pub fn n_modes(&self) -> usize {
        self.eta.nrows()
    }

    pub fn n_ions(&self) -> usize {
        self.eta.ncols()
    }

    /// Restrict to a subset of modes, in the given order.
    pub fn select(&self, modes: &[usize]) -> Result<LambDickeTensor> {
        if let Some(&bad) = modes.iter().find(|&&m| m >= self.n_modes()) {
            return Err(Error::InvalidArgument(format!("mode index {bad} out of range")));
        }
        Ok(LambDickeTensor {
            eta: DMatrix::from_fn(modes.len(), self.n_ions(), |r, c| self.eta[(modes[r], c)]),
            mode_frequencies: modes.iter().map(|&m| self.mode_frequencies[m]).collect(),
        })
    }
}

/// `η_{m,i} = sqrt(ħ/(2Mω_m)) (b_{m,i} k_x + b_{m,i+N} k_y + b_{m,i+2N} k_z)`.
///
/// The phase `k·x₀` is not part of η; callers absorb it into the drive phases.
pub fn lamb_dicke(solution: &CrystalSolution, species: &IonSpecies, wavevectors: &[[f64; 3]]) -> Result<LambDickeTensor> {
    let n = solution.n_ions();
    if wavevectors.len() != n {
        return Err(Error::DimensionMismatch(format!("{} wavevectors for {} ions", wavevectors.len(), n)));
    }
    let modes = solution.mode_frequencies.len();
    let mut eta = DMatrix::zeros(modes, n);
    for m in 0..modes {
        let omega = solution.mode_frequencies[m];
        if omega <= 0.0 {
            return Err(Error::InvalidArgument(format!("mode {m} has zero frequency")));
        }
        let q0 = (units::HBAR / (2.0 * species.mass * omega)).sqrt();
        for (i, k) in wavevectors.iter().enumerate() {
            let b = &solution.mode_matrix;
            eta[(m, i)] = q0 * (b[(m, i)] * k[0] + b[(m, i + n)] * k[1] + b[(m, i + 2 * n)] * k[2]);
        }
    }
    Ok(LambDickeTensor { eta, mode_frequencies: solution.mode_frequencies.clone() })
}

fn to_scaled(trap: &ScaledTrap, positions: &[f64]) -> Result<Vec<f64>> {
    if positions.len() != 3 * trap.n() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} coordinates, got {}",
            3 * trap.n(),
            positions.len()
        )));
    }
    Ok(positions.iter().map(|p| p / trap.scale.length).collect())
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
