//! Declarative experiment files.
//!
//! A scenario is TOML. Every physical value carries a unit (see
//! [`Quantity`]); dimensionless inputs (α coefficients, counts, indices,
//! ratios) are plain numbers. Unknown keys are rejected.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::quantity::{Dimension, Quantity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<Trap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Modes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Drive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<RabiBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ising: Option<IsingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<RampBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover: Option<CrossoverBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Modes,
    Rabi,
    Gate,
    IsingRamp,
    IsingCrossover,
    Couplings,
    ExactVsEffective,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Modes => "modes",
            Kind::Rabi => "rabi",
            Kind::Gate => "gate",
            Kind::IsingRamp => "ising-ramp",
            Kind::IsingCrossover => "ising-crossover",
            Kind::Couplings => "couplings",
            Kind::ExactVsEffective => "exact-vs-effective",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineName {
    Analytic,
    Integrate,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    /// Projective measurements sampled from the final state; 0 disables sampling.
    #[serde(default)]
    pub shots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trap {
    pub mass: Quantity,
    #[serde(default = "one")]
    pub charge: i32,
    /// Linear-trap shorthand: `ions` identical wells at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<[Quantity; 3]>,
    /// One aligned well per ion.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub well: Vec<WellBlock>,
}

fn one() -> i32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellBlock {
    pub frequencies: [Quantity; 3],
    pub position: [Quantity; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modes {
    pub axis: Axis,
    /// Indices into the modes along `axis`, ascending in frequency. Empty keeps all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub select: Vec<usize>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    15
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchName {
    Z,
    Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detuning {
    /// Index into the selected modes.
    pub mode: usize,
    pub value: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub branch: BranchName,
    /// `[α₀, α₃]` for the z-branch, `[α₁, α₂]` for the xy-branch.
    pub alpha: [f64; 2],
    pub wavevector: [Quantity; 3],
    /// Rabi frequency of every ion.
    pub rabi: Quantity,
    /// Per-ion laser phases; default zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<Quantity>,
    /// z-branch: drive frequency placed `value` away from a selected mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Detuning>,
    /// xy-branch: `ω_I − ω_↑↓`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_detuning: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Points {
    pub start: Quantity,
    pub stop: Quantity,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiBlock {
    /// Initial Fock level of the selected mode.
    #[serde(default)]
    pub fock: usize,
    /// `n′ − n` of the transition compared against the closed form.
    #[serde(default)]
    pub sideband: i64,
    pub times: Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Pulse {
    Rotation {
        theta: Quantity,
        phi: Quantity,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        targets: Vec<usize>,
    },
    Displacement {
        /// Length in loops of the reference mode, `2π/|δ_ref|` each.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        loops: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<Quantity>,
    },
    Idle {
        duration: Quantity,
    },
    Zphase {
        angle: Quantity,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        targets: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commensurate {
    /// Index of the stretch-like mode among the selected modes.
    pub stretch: usize,
    pub com: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateBlock {
    /// Rescale every Rabi frequency so that the summed `Φ(↓↓) − Φ(↓↑)` over
    /// all displacement pulses equals this angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub differential_phase: Option<Quantity>,
    /// Mode whose detuning sets the loop length; defaults to the drive's detuning mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_mode: Option<usize>,
    #[serde(default = "default_parity_points")]
    pub parity_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commensurate: Option<Commensurate>,
    pub pulse: Vec<Pulse>,
}

fn default_parity_points() -> usize {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingSource {
    /// All-to-all `J` given directly.
    Uniform,
    /// `J` and bias from the trap and drive blocks.
    Drive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasName {
    Compensated,
    Included,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingBlock {
    pub source: CouplingSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spins: Option<usize>,
    /// Uniform `J`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Quantity>,
    /// Transverse field `B_x` on every spin.
    pub field: Quantity,
    #[serde(default = "default_bias")]
    pub bias: BiasName,
}

fn default_bias() -> BiasName {
    BiasName::Compensated
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileBlock {
    Constant { value: f64 },
    Linear { from: f64, to: f64 },
    Exponential { from: f64, to: f64, tau: Quantity },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampBlock {
    pub duration: Quantity,
    pub steps: usize,
    #[serde(default = "default_j_profile")]
    pub coupling: ProfileBlock,
    #[serde(default = "default_b_profile")]
    pub field: ProfileBlock,
}

fn default_j_profile() -> ProfileBlock {
    ProfileBlock::Linear { from: 0.0, to: 1.0 }
}

fn default_b_profile() -> ProfileBlock {
    ProfileBlock::Constant { value: 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossoverMethod {
    Ramp,
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossoverBlock {
    pub spins: Vec<usize>,
    /// Log-spaced `|J|/B` values from `ratio_from` to `ratio_to`.
    pub ratio_from: f64,
    pub ratio_to: f64,
    pub points: usize,
    pub method: CrossoverMethod,
    /// `|dJ/dt|` in units of `B²`; used by the ramp method.
    #[serde(default = "default_ramp_rate")]
    pub ramp_rate: f64,
}

fn default_ramp_rate() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactBlock {
    /// `B_x / |J₀₁|`.
    pub field_ratio: f64,
    /// Comparison times in loops of the reference (first) mode.
    pub loops: Vec<f64>,
    /// Also run with `Ωη/δ` divided by this factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weaker_by: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted key path, e.g. `drive.rabi`.
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub axis: Vec<SweepAxis>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid scenario: {e}"))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Semantic checks beyond the schema, run before any computation.
    pub fn validate(&self) -> anyhow::Result<()> {
        let need = |present: bool, block: &str| -> anyhow::Result<()> {
            if present {
                Ok(())
            } else {
                bail!("experiment kind {:?} needs a [{block}] block", self.experiment.kind.name())
            }
        };
        match self.experiment.kind {
            Kind::Modes => need(self.trap.is_some(), "trap")?,
            Kind::Rabi => {
                for (ok, b) in [(self.trap.is_some(), "trap"), (self.modes.is_some(), "modes"), (self.drive.is_some(), "drive"), (self.rabi.is_some(), "rabi")] {
                    need(ok, b)?;
                }
            }
            Kind::Gate => {
                for (ok, b) in [(self.trap.is_some(), "trap"), (self.modes.is_some(), "modes"), (self.drive.is_some(), "drive"), (self.gate.is_some(), "gate")] {
                    need(ok, b)?;
                }
            }
            Kind::IsingRamp => {
                need(self.ising.is_some(), "ising")?;
                need(self.ramp.is_some(), "ramp")?;
            }
            Kind::IsingCrossover => need(self.crossover.is_some(), "crossover")?,
            Kind::Couplings => {
                for (ok, b) in [(self.trap.is_some(), "trap"), (self.modes.is_some(), "modes"), (self.drive.is_some(), "drive")] {
                    need(ok, b)?;
                }
            }
            Kind::ExactVsEffective => {
                for (ok, b) in [(self.trap.is_some(), "trap"), (self.modes.is_some(), "modes"), (self.drive.is_some(), "drive"), (self.exact.is_some(), "exact")] {
                    need(ok, b)?;
                }
            }
        }
        if let Some(trap) = &self.trap {
            trap.mass.to(Dimension::Mass).context("trap.mass")?;
            match (&trap.ions, &trap.frequencies, trap.well.is_empty()) {
                (Some(n), Some(f), true) => {
                    if *n == 0 {
                        bail!("trap.ions must be at least 1");
                    }
                    for q in f {
                        q.to(Dimension::Frequency).context("trap.frequencies")?;
                    }
                }
                (None, None, false) => {
                    for (i, w) in trap.well.iter().enumerate() {
                        for q in &w.frequencies {
                            q.to(Dimension::Frequency).with_context(|| format!("trap.well[{i}].frequencies"))?;
                        }
                        for q in &w.position {
                            q.to(Dimension::Length).with_context(|| format!("trap.well[{i}].position"))?;
                        }
                    }
                }
                _ => bail!("trap needs either `ions` with `frequencies` or a list of [[trap.well]] entries"),
            }
        }
        if let Some(d) = &self.drive {
            d.rabi.to(Dimension::Frequency).context("drive.rabi")?;
            for q in &d.wavevector {
                q.to(Dimension::Wavevector).context("drive.wavevector")?;
            }
            for q in &d.phases {
                q.to(Dimension::Angle).context("drive.phases")?;
            }
            match d.branch {
                BranchName::Z => {
                    let Some(det) = &d.detuning else { bail!("a z-branch drive needs drive.detuning") };
                    det.value.to(Dimension::Frequency).context("drive.detuning.value")?;
                    if d.carrier_detuning.is_some() {
                        bail!("drive.carrier_detuning applies to the xy-branch only");
                    }
                }
                BranchName::Xy => {
                    if d.detuning.is_some() {
                        bail!("drive.detuning applies to the z-branch only; use carrier_detuning");
                    }
                    if let Some(q) = &d.carrier_detuning {
                        q.to(Dimension::Frequency).context("drive.carrier_detuning")?;
                    }
                }
            }
        }
        if let Some(g) = &self.gate {
            if let Some(q) = &g.differential_phase {
                q.to(Dimension::Angle).context("gate.differential_phase")?;
            }
            for (k, p) in g.pulse.iter().enumerate() {
                let ctx = || format!("gate.pulse[{k}]");
                match p {
                    Pulse::Rotation { theta, phi, .. } => {
                        theta.to(Dimension::Angle).with_context(ctx)?;
                        phi.to(Dimension::Angle).with_context(ctx)?;
                    }
                    Pulse::Displacement { loops, duration } => match (loops, duration) {
                        (Some(l), None) if *l >= 0.0 => {}
                        (None, Some(q)) => {
                            q.to(Dimension::Time).with_context(ctx)?;
                        }
                        _ => bail!("{}: a displacement needs exactly one of `loops` (non-negative) or `duration`", ctx()),
                    },
                    Pulse::Idle { duration } => {
                        duration.to(Dimension::Time).with_context(ctx)?;
                    }
                    Pulse::Zphase { angle, .. } => {
                        angle.to(Dimension::Angle).with_context(ctx)?;
                    }
                }
            }
        }
        if let Some(i) = &self.ising {
            i.field.to(Dimension::Frequency).context("ising.field")?;
            match i.source {
                CouplingSource::Uniform => {
                    let (Some(n), Some(j)) = (i.spins, &i.coupling) else { bail!("a uniform ising block needs `spins` and `coupling`") };
                    if n == 0 {
                        bail!("ising.spins must be at least 1");
                    }
                    j.to(Dimension::Frequency).context("ising.coupling")?;
                }
                CouplingSource::Drive => {
                    if i.spins.is_some() || i.coupling.is_some() {
                        bail!("ising.spins and ising.coupling come from the trap when source = \"drive\"");
                    }
                    need(self.trap.is_some() && self.modes.is_some() && self.drive.is_some(), "trap], [modes] and [drive")?;
                }
            }
        }
        if let Some(r) = &self.ramp {
            r.duration.to(Dimension::Time).context("ramp.duration")?;
            for p in [&r.coupling, &r.field] {
                if let ProfileBlock::Exponential { tau, .. } = p {
                    tau.to(Dimension::Time).context("ramp profile tau")?;
                }
            }
        }
        if let Some(c) = &self.crossover {
            if !(c.ratio_from > 0.0 && c.ratio_to > c.ratio_from && c.points >= 2) {
                bail!("crossover needs 0 < ratio_from < ratio_to and at least two points");
            }
        }
        if let Some(r) = &self.rabi {
            r.times.start.to(Dimension::Time).context("rabi.times.start")?;
            r.times.stop.to(Dimension::Time).context("rabi.times.stop")?;
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> anyhow::Result<(Scenario, String)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = Scenario::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
    Ok((scenario, text))
}
