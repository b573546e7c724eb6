//! Scenario-driven front end for the `trapsim` simulation library.
//!
//! A run reads a TOML scenario, dispatches it by experiment kind, and writes
//! CSV tables, `summary.csv` and one `manifest.toml` into the output directory.

pub mod experiments;
pub mod output;
pub mod quantity;
pub mod scenario;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};

pub use experiments::{execute, Settings};
pub use output::{Manifest, Outcome};
pub use scenario::{parse_scenario, Scenario};

use crate::experiments::propagate_options;
use crate::output::{sha256_hex, write_manifest, write_tables, Tolerances};
use crate::scenario::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    /// Dispatch on `experiment.kind`; sweeps when a `[sweep]` block is present.
    Run,
    Modes,
    Rabi,
    Gate,
    /// Any of the Ising kinds.
    Ising,
    Sweep,
}

impl Verb {
    fn accepts(self, kind: Kind) -> bool {
        match self {
            Verb::Run | Verb::Sweep => true,
            Verb::Modes => kind == Kind::Modes,
            Verb::Rabi => kind == Kind::Rabi,
            Verb::Gate => kind == Kind::Gate,
            Verb::Ising => matches!(kind, Kind::IsingRamp | Kind::IsingCrossover | Kind::Couplings | Kind::ExactVsEffective),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: Manifest,
}

fn with_seed(text: &str, seed: Option<u64>) -> Result<String> {
    let Some(seed) = seed else { return Ok(text.to_string()) };
    let mut root: toml::Table = toml::from_str(text).context("invalid scenario")?;
    let experiment = root.get_mut("experiment").and_then(|e| e.as_table_mut()).context("scenario has no [experiment] table")?;
    experiment.insert("seed".into(), toml::Value::Integer(i64::try_from(seed).context("seed out of range")?));
    Ok(toml::to_string(&root)?)
}

fn tolerances(settings: &Settings) -> Tolerances {
    let p = propagate_options();
    Tolerances { check: settings.tol, integrator: p.tol, leakage: p.leakage_threshold, dimension_cap: settings.dim_cap }
}

fn finish(dir: &Path, mut outcome: Outcome, experiment: &str, scenario_sha256: String, seed: u64, start: Instant, settings: &Settings) -> Result<RunReport> {
    let mut seen = std::collections::HashSet::new();
    outcome.warnings.retain(|w| seen.insert(w.clone()));
    let output = write_tables(dir, &outcome)?;
    let manifest = Manifest {
        tool: "trapsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.into(),
        scenario_sha256,
        seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        warnings: outcome.warnings.clone(),
        breaches: outcome.breaches.clone(),
        tolerances: tolerances(settings),
        output,
    };
    write_manifest(dir, &manifest)?;
    Ok(RunReport { dir: dir.to_path_buf(), outcome, manifest })
}

/// Runs a scenario file and writes its outputs into `out`.
pub fn run_file(path: &Path, out: &Path, verb: Verb, settings: &Settings, seed: Option<u64>) -> Result<RunReport> {
    let start = Instant::now();
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let text = with_seed(&raw, seed)?;
    let scenario = Scenario::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
    let kind = scenario.experiment.kind;
    if !verb.accepts(kind) {
        bail!("{verb:?} cannot run a {:?} scenario", kind.name());
    }
    let sweeping = verb == Verb::Sweep || (verb == Verb::Run && scenario.sweep.is_some());
    let outcome = if sweeping { sweep::sweep(&text, settings)? } else { execute(&scenario, settings)? };
    let label = if sweeping { format!("sweep:{}", kind.name()) } else { kind.name().to_string() };
    finish(out, outcome, &label, sha256_hex(raw.as_bytes()), scenario.experiment.seed, start, settings)
}

/// Runs the self-check suite and writes `verify.csv`.
pub fn run_verify(out: &Path, samples: usize, seed: u64, settings: &Settings) -> Result<RunReport> {
    let start = Instant::now();
    let outcome = verify::verify(samples, seed)?;
    finish(out, outcome, "verify", sha256_hex(format!("verify samples={samples}").as_bytes()), seed, start, settings)
}
