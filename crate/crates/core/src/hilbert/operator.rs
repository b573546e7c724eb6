//! Operators on the spin ⊗ Fock space.
//!
//! Dense matrices come from [`build_operator`]. Hamiltonians that are
//! propagated are kept as sums of tensor products of small per-site factors
//! ([`TermHamiltonian`]) so that applying them costs a few passes over the
//! state vector instead of a dense matrix–vector product.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::space::SpaceSpec;
use super::special::displacement_matrix;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Single-spin operator. `σ±` carry entries 2 (`σ± = σx ± iσy`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinOp {
    Identity,
    X,
    Y,
    Z,
    Plus,
    Minus,
    /// `α₀𝟙 + α₁σx + α₂σy + α₃σz`
    Kappa([f64; 4]),
}

impl SpinOp {
    /// 2×2 matrix in the (↓, ↑) ordering.
    pub fn matrix(&self) -> DMatrix<C64> {
        let m = |a: C64, b: C64, c: C64, d: C64| DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        match *self {
            SpinOp::Identity => m(ONE, ZERO, ZERO, ONE),
            SpinOp::X => m(ZERO, ONE, ONE, ZERO),
            // ⟨↑|σy|↓⟩ = −i
            SpinOp::Y => m(ZERO, I, -I, ZERO),
            SpinOp::Z => m(-ONE, ZERO, ZERO, ONE),
            SpinOp::Plus => m(ZERO, ZERO, ONE * 2.0, ZERO),
            SpinOp::Minus => m(ZERO, ONE * 2.0, ZERO, ZERO),
            SpinOp::Kappa([a0, a1, a2, a3]) => {
                SpinOp::Identity.matrix() * C64::from(a0)
                    + SpinOp::X.matrix() * C64::from(a1)
                    + SpinOp::Y.matrix() * C64::from(a2)
                    + SpinOp::Z.matrix() * C64::from(a3)
            }
        }
    }
}

/// Single-mode operator on a truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeOp {
    Identity,
    A,
    Adag,
    Number,
    /// Exact matrix elements of `D(λ)`, truncated.
    Displace(C64),
}

impl ModeOp {
    pub fn matrix(&self, n_max: usize) -> DMatrix<C64> {
        let d = n_max + 1;
        match *self {
            ModeOp::Identity => DMatrix::identity(d, d),
            ModeOp::A => DMatrix::from_fn(d, d, |r, c| if c == r + 1 { C64::from((c as f64).sqrt()) } else { ZERO }),
            ModeOp::Adag => DMatrix::from_fn(d, d, |r, c| if r == c + 1 { C64::from((r as f64).sqrt()) } else { ZERO }),
            ModeOp::Number => DMatrix::from_fn(d, d, |r, c| if r == c { C64::from(r as f64) } else { ZERO }),
            ModeOp::Displace(l) => displacement_matrix(n_max, l),
        }
    }
}

/// Tensor product of one factor per spin and per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub spins: Vec<SpinOp>,
    pub modes: Vec<ModeOp>,
}

impl OperatorSpec {
    pub fn identity(space: &SpaceSpec) -> Self {
        OperatorSpec { spins: vec![SpinOp::Identity; space.n_spins], modes: vec![ModeOp::Identity; space.n_modes()] }
    }

    pub fn spin(mut self, i: usize, op: SpinOp) -> Self {
        self.spins[i] = op;
        self
    }

    pub fn mode(mut self, m: usize, op: ModeOp) -> Self {
        self.modes[m] = op;
        self
    }
}

/// Dense matrix of an [`OperatorSpec`] in the basis order of `space`.
pub fn build_operator(space: &SpaceSpec, spec: &OperatorSpec) -> Result<DMatrix<C64>> {
    Ok(ProductOp::from_spec(space, spec)?.to_dense(space, 0.0))
}

/// Sparse operator on one tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteFactor {
    pub site: usize,
    pub dim: usize,
    /// `columns[c]` lists the non-zero `(row, value)` pairs of column `c`.
    pub columns: Vec<Vec<(usize, C64)>>,
    /// Entry `(r, c)` is multiplied by `e^{iω(r−c)t}` at time `t`; this turns
    /// `X` into `e^{iωt n} X e^{−iωt n}` for a mode of frequency `ω`.
    pub rotation: f64,
}

impl SiteFactor {
    pub fn from_dense(site: usize, m: &DMatrix<C64>, rotation: f64) -> Self {
        let dim = m.nrows();
        let columns = (0..dim)
            .map(|c| (0..dim).filter(|&r| m[(r, c)] != ZERO).map(|r| (r, m[(r, c)])).collect())
            .collect();
        SiteFactor { site, dim, columns, rotation }
    }

    pub fn adjoint(&self) -> Self {
        let mut columns = vec![Vec::new(); self.dim];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                columns[r].push((c, v.conj()));
            }
        }
        for col in columns.iter_mut() {
            col.sort_by_key(|&(r, _)| r);
        }
        SiteFactor { site: self.site, dim: self.dim, columns, rotation: self.rotation }
    }

    fn at_time(&self, t: f64) -> Vec<Vec<(isize, C64)>> {
        self.columns
            .iter()
            .enumerate()
            .map(|(c, col)| {
                col.iter()
                    .map(|&(r, v)| {
                        let shift = r as isize - c as isize;
                        let v = if self.rotation != 0.0 && shift != 0 {
                            v * C64::from_polar(1.0, self.rotation * shift as f64 * t)
                        } else {
                            v
                        };
                        (shift, v)
                    })
                    .collect()
            })
            .collect()
    }

    fn apply(&self, space: &SpaceSpec, t: f64, input: &[C64], output: &mut [C64]) {
        let (d, stride) = space.site(self.site);
        let cols = self.at_time(t);
        output.iter_mut().for_each(|v| *v = ZERO);
        for (idx, &v) in input.iter().enumerate() {
            if v == ZERO {
                continue;
            }
            let c = (idx / stride) % d;
            for &(shift, m) in &cols[c] {
                let target = (idx as isize + shift * stride as isize) as usize;
                output[target] += m * v;
            }
        }
    }
}

/// Tensor product of factors on distinct sites (identity elsewhere).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProductOp {
    pub factors: Vec<SiteFactor>,
}

impl ProductOp {
    pub fn identity() -> Self {
        ProductOp::default()
    }

    pub fn from_spec(space: &SpaceSpec, spec: &OperatorSpec) -> Result<Self> {
        if spec.spins.len() != space.n_spins || spec.modes.len() != space.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} spin and {} mode factors, space has {} and {}",
                spec.spins.len(),
                spec.modes.len(),
                space.n_spins,
                space.n_modes()
            )));
        }
        let mut op = ProductOp::identity();
        for (i, s) in spec.spins.iter().enumerate() {
            if *s != SpinOp::Identity {
                op = op.with(SiteFactor::from_dense(i, &s.matrix(), 0.0));
            }
        }
        for (m, f) in spec.modes.iter().enumerate() {
            if *f != ModeOp::Identity {
                op = op.with(SiteFactor::from_dense(space.mode_site(m), &f.matrix(space.modes[m].n_max), 0.0));
            }
        }
        Ok(op)
    }

    /// Adds a factor; a factor already present on the same site is multiplied
    /// on the left by the new one.
    pub fn with(mut self, factor: SiteFactor) -> Self {
        if let Some(existing) = self.factors.iter_mut().find(|f| f.site == factor.site) {
            assert!(
                existing.rotation == factor.rotation,
                "cannot merge site factors with different rotation frequencies"
            );
            let dense = |f: &SiteFactor| {
                let mut m = DMatrix::zeros(f.dim, f.dim);
                for (c, col) in f.columns.iter().enumerate() {
                    for &(r, v) in col {
                        m[(r, c)] = v;
                    }
                }
                m
            };
            let product = dense(&factor) * dense(existing);
            *existing = SiteFactor::from_dense(factor.site, &product, factor.rotation);
        } else {
            self.factors.push(factor);
        }
        self
    }

    pub fn adjoint(&self) -> Self {
        ProductOp { factors: self.factors.iter().map(SiteFactor::adjoint).collect() }
    }

    /// `out = P(t) psi`, using `scratch` as a work buffer.
    pub fn apply(&self, space: &SpaceSpec, t: f64, psi: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        out.copy_from_slice(psi);
        for f in &self.factors {
            f.apply(space, t, out, scratch);
            out.copy_from_slice(scratch);
        }
    }

    pub fn to_dense(&self, space: &SpaceSpec, t: f64) -> DMatrix<C64> {
        let dim = space.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        let mut out = vec![ZERO; dim];
        let mut scratch = vec![ZERO; dim];
        for c in 0..dim {
            e[c] = ONE;
            self.apply(space, t, &e, &mut out, &mut scratch);
            for (r, v) in out.iter().enumerate() {
                m[(r, c)] = *v;
            }
            e[c] = ZERO;
        }
        m
    }
}

/// Scalar time dependence of a Hamiltonian term.
#[derive(Clone)]
pub enum Coefficient {
    Constant(C64),
    /// `amplitude · e^{iωt}`
    Oscillating { amplitude: C64, frequency: f64 },
    Function(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> C64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Oscillating { amplitude, frequency } => amplitude * C64::from_polar(1.0, frequency * t),
            Coefficient::Function(f) => f(t),
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(c.conj()),
            Coefficient::Oscillating { amplitude, frequency } => Coefficient::Oscillating {
                amplitude: amplitude.conj(),
                frequency: -frequency,
            },
            Coefficient::Function(f) => {
                let f = Arc::clone(f);
                Coefficient::Function(Arc::new(move |t| f(t).conj()))
            }
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Oscillating { amplitude, frequency } => write!(f, "Oscillating({amplitude}, {frequency})"),
            Coefficient::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Term {
    pub coefficient: Coefficient,
    pub op: ProductOp,
}

/// `H(t) = Σ_k c_k(t) P_k(t)` in rad/s.
#[derive(Debug, Clone)]
pub struct TermHamiltonian {
    pub space: SpaceSpec,
    pub terms: Vec<Term>,
}

impl TermHamiltonian {
    pub fn new(space: SpaceSpec) -> Self {
        TermHamiltonian { space, terms: Vec::new() }
    }

    pub fn push(&mut self, coefficient: Coefficient, op: ProductOp) {
        self.terms.push(Term { coefficient, op });
    }

    /// Adds `c P + (c P)†`.
    pub fn push_hermitian(&mut self, coefficient: Coefficient, op: ProductOp) {
        let adj = Term { coefficient: coefficient.conj(), op: op.adjoint() };
        self.terms.push(Term { coefficient, op });
        self.terms.push(adj);
    }

    pub fn extend(&mut self, other: TermHamiltonian) {
        self.terms.extend(other.terms);
    }

    pub fn to_dense(&self, t: f64) -> DMatrix<C64> {
        let dim = self.space.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            let c = term.coefficient.eval(t);
            if c != ZERO {
                m += term.op.to_dense(&self.space, t) * c;
            }
        }
        m
    }
}

/// Time-dependent generator `H(t)` (rad/s) acting on state vectors.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    /// `out = H(t) psi`
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);
}

impl Generator for TermHamiltonian {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let dim = psi.len();
        let mut prod = vec![ZERO; dim];
        let mut scratch = vec![ZERO; dim];
        out.iter_mut().for_each(|v| *v = ZERO);
        for term in &self.terms {
            let c = term.coefficient.eval(t);
            if c == ZERO {
                continue;
            }
            term.op.apply(&self.space, t, psi, &mut prod, &mut scratch);
            for (o, p) in out.iter_mut().zip(&prod) {
                *o += c * p;
            }
        }
    }
}

impl Generator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).iter().zip(psi).map(|(a, b)| a * b).sum();
        }
    }
}

/// Dense matrix rebuilt at every time.
pub struct MatrixFunction<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64) -> DMatrix<C64> + Sync> Generator for MatrixFunction<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        (self.f)(t).apply(t, psi, out);
    }
}
