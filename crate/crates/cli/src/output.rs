//! CSV tables and run manifests.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Fixed 17-significant-digit float formatting shared by every CSV.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Result of one experiment before it is written out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Scalar results in insertion order; written as `summary.csv`.
    pub summary: Vec<(String, f64)>,
    pub warnings: Vec<String>,
    /// Invariant violations; any entry makes the run fail.
    pub breaches: Vec<String>,
}

impl Outcome {
    pub fn summary(&mut self, key: &str, value: f64) {
        self.summary.push((key.to_string(), value));
    }

    pub fn breach(&mut self, message: String) {
        self.breaches.push(message);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", &["key", "value"]);
        for (k, v) in &self.summary {
            t.push(vec![k.clone(), num(*v)]);
        }
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub check: f64,
    pub integrator: f64,
    pub leakage: f64,
    pub dimension_cap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub warnings: Vec<String>,
    pub breaches: Vec<String>,
    pub tolerances: Tolerances,
    pub output: Vec<OutputFile>,
}

pub const MANIFEST: &str = "manifest.toml";

/// Writes every table plus `summary.csv` and returns the file hashes.
pub fn write_tables(dir: &Path, outcome: &Outcome) -> Result<Vec<OutputFile>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for table in outcome.tables.iter().chain(std::iter::once(&outcome.summary_table())) {
        let name = format!("{}.csv", table.name);
        let bytes = table.to_csv()?;
        fs::write(dir.join(&name), &bytes).with_context(|| format!("writing {name}"))?;
        files.push(OutputFile { file: name, sha256: sha256_hex(&bytes) });
    }
    Ok(files)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let text = toml::to_string(manifest).context("serializing manifest")?;
    fs::write(dir.join(MANIFEST), text).context("writing manifest")
}
