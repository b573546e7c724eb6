use std::fmt::Write as _;

use crate::{Error, Result, C64};

/// Default cap on the number of amplitudes in a state vector.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub label: String,
    /// rad/s
    pub frequency: f64,
    /// Highest retained Fock level.
    pub n_max: usize,
}

impl ModeSpec {
    pub fn new(label: impl Into<String>, frequency: f64, n_max: usize) -> Self {
        ModeSpec { label: label.into(), frequency, n_max }
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }
}

/// Truncation that comfortably holds a coherent state of amplitude `lambda_max`.
pub fn default_truncation(lambda_max: f64) -> usize {
    let l = lambda_max.abs();
    (l * l + 6.0 * l + 10.0).ceil() as usize
}

/// Spins ⊗ truncated modes.
///
/// Basis index = `Σ_i s_i 2^i + 2^N · Σ_m n_m Π_{k<m} (n_max_k + 1)` with
/// `s_i = 0` for ↓ and `1` for ↑: spin 1 runs fastest, then mode 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    pub n_spins: usize,
    pub modes: Vec<ModeSpec>,
    dim: usize,
}

impl SpaceSpec {
    pub fn new(n_spins: usize, modes: Vec<ModeSpec>) -> Result<Self> {
        Self::with_cap(n_spins, modes, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(n_spins: usize, modes: Vec<ModeSpec>, cap: usize) -> Result<Self> {
        if let Some(m) = modes.iter().position(|m| m.n_max < 1) {
            return Err(Error::InvalidArgument(format!("mode {m}: n_max must be at least 1")));
        }
        let mut dim: usize = 1;
        let factors = std::iter::repeat_n(2usize, n_spins).chain(modes.iter().map(ModeSpec::levels));
        for f in factors {
            dim = dim.checked_mul(f).filter(|d| *d <= cap).ok_or(Error::DimensionCap {
                dim: dim.saturating_mul(f),
                cap,
            })?;
        }
        Ok(SpaceSpec { n_spins, modes, dim })
    }

    /// Spin-only space.
    pub fn spins(n_spins: usize) -> Result<Self> {
        Self::new(n_spins, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn mode_dim(&self) -> usize {
        self.dim / self.spin_dim()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Number of tensor factors (spins first, then modes).
    pub fn n_sites(&self) -> usize {
        self.n_spins + self.modes.len()
    }

    /// Local dimension and stride of a tensor factor.
    pub fn site(&self, site: usize) -> (usize, usize) {
        if site < self.n_spins {
            (2, 1 << site)
        } else {
            let m = site - self.n_spins;
            let stride = self.spin_dim() * self.modes[..m].iter().map(ModeSpec::levels).product::<usize>();
            (self.modes[m].levels(), stride)
        }
    }

    pub fn mode_site(&self, mode: usize) -> usize {
        self.n_spins + mode
    }

    pub fn index(&self, spins: usize, fock: &[usize]) -> usize {
        debug_assert!(spins < self.spin_dim() && fock.len() == self.modes.len());
        let mut idx = 0;
        let mut stride = 1;
        for (n, mode) in fock.iter().zip(&self.modes) {
            idx += n * stride;
            stride *= mode.levels();
        }
        spins + self.spin_dim() * idx
    }

    /// Inverse of [`SpaceSpec::index`]: `(spin configuration, Fock tuple)`.
    pub fn decompose(&self, index: usize) -> (usize, Vec<usize>) {
        let spins = index % self.spin_dim();
        let mut rest = index / self.spin_dim();
        let fock = self
            .modes
            .iter()
            .map(|m| {
                let n = rest % m.levels();
                rest /= m.levels();
                n
            })
            .collect();
        (spins, fock)
    }

    pub fn label(&self, index: usize) -> String {
        let (spins, fock) = self.decompose(index);
        let mut s = spin_label(spins, self.n_spins);
        if !fock.is_empty() {
            s.push('|');
            let parts: Vec<String> = fock.iter().map(|n| n.to_string()).collect();
            s.push_str(&parts.join(","));
        }
        s
    }
}

/// `d`/`u` string for a spin configuration, spin 1 first.
pub fn spin_label(config: usize, n_spins: usize) -> String {
    (0..n_spins).map(|i| if config >> i & 1 == 1 { 'u' } else { 'd' }).collect()
}

/// Single-spin state as `(c_down, c_up)`.
pub type SpinAmplitudes = [C64; 2];

pub const DOWN: SpinAmplitudes = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
pub const UP: SpinAmplitudes = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub space: SpaceSpec,
    pub amplitudes: Vec<C64>,
}

impl SimState {
    pub fn new(space: SpaceSpec, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(SimState { space, amplitudes })
    }

    /// Basis state with spin configuration `spins` and Fock numbers `fock`.
    pub fn basis(space: &SpaceSpec, spins: usize, fock: &[usize]) -> Result<Self> {
        if spins >= space.spin_dim() || fock.len() != space.n_modes() {
            return Err(Error::DimensionMismatch("basis label does not fit the space".into()));
        }
        if let Some(m) = fock.iter().zip(&space.modes).position(|(n, mode)| *n > mode.n_max) {
            return Err(Error::InvalidArgument(format!("Fock level exceeds truncation of mode {m}")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); space.dim()];
        amplitudes[space.index(spins, fock)] = C64::new(1.0, 0.0);
        Ok(SimState { space: space.clone(), amplitudes })
    }

    /// All spins down, all modes in the ground state.
    pub fn ground(space: &SpaceSpec) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); space.dim()];
        amplitudes[0] = C64::new(1.0, 0.0);
        SimState { space: space.clone(), amplitudes }
    }

    /// Product of single-spin states with a Fock state of the modes.
    pub fn product(space: &SpaceSpec, spins: &[SpinAmplitudes], fock: &[usize]) -> Result<Self> {
        if spins.len() != space.n_spins {
            return Err(Error::DimensionMismatch(format!("{} spin states for {} spins", spins.len(), space.n_spins)));
        }
        let mut state = Self::basis(space, 0, fock)?;
        let offset = space.index(0, fock);
        for config in 0..space.spin_dim() {
            let amp = (0..space.n_spins).fold(C64::new(1.0, 0.0), |acc, i| acc * spins[i][config >> i & 1]);
            state.amplitudes[offset + config] = amp;
        }
        Ok(state)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &SimState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &SimState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Probability in the top two retained Fock levels of each mode.
    pub fn leakage(&self) -> Vec<f64> {
        let space = &self.space;
        let mut out = vec![0.0; space.n_modes()];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let (_, fock) = space.decompose(idx);
            for (m, (n, mode)) in fock.iter().zip(&space.modes).enumerate() {
                if *n >= mode.n_max.saturating_sub(1).max(1) {
                    out[m] += p;
                }
            }
        }
        out
    }

    /// CSV dump: `index,label,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,label,re,im\n");
        for (i, a) in self.amplitudes.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{:.16e},{:.16e}", self.space.label(i), a.re, a.im);
        }
        s
    }
}
