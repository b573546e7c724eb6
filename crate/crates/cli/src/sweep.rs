//! Cartesian parameter sweeps over scenario keys.

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;

use crate::experiments::{execute, Settings};
use crate::output::{num, Outcome, Table};
use crate::scenario::{Scenario, SweepBlock};

fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let next = match node {
            toml::Value::Table(t) => t.get_mut(*part),
            toml::Value::Array(a) => part.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        };
        let Some(next) = next else { bail!("sweep path {path:?}: no key {:?}", parts[..=k].join(".")) };
        node = next;
    }
    *node = value;
    Ok(())
}

fn cell(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Every combination of the axis values, first axis slowest.
fn grid(block: &SweepBlock) -> Vec<Vec<toml::Value>> {
    let mut points = vec![Vec::new()];
    for axis in &block.axis {
        points = points.into_iter().flat_map(|p| axis.values.iter().map(move |v| [p.clone(), vec![v.clone()]].concat())).collect();
    }
    points
}

/// Runs the scenario once per sweep point and tabulates each point's summary.
pub fn sweep(text: &str, settings: &Settings) -> Result<Outcome> {
    let mut root: toml::Value = toml::from_str(text).context("invalid scenario")?;
    let block: SweepBlock = match root.as_table_mut().and_then(|t| t.remove("sweep")) {
        Some(v) => v.try_into().context("invalid [sweep] block")?,
        None => bail!("the scenario has no [sweep] block"),
    };
    for axis in &block.axis {
        ensure!(!axis.values.is_empty(), "sweep axis {:?} has no values", axis.path);
        set_path(&mut root.clone(), &axis.path, axis.values[0].clone())?;
    }
    let points = grid(&block);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(settings.jobs.max(1)).build()?;
    let results: Vec<Result<Outcome>> = pool.install(|| {
        points
            .par_iter()
            .map(|values| {
                let mut point = root.clone();
                for (axis, v) in block.axis.iter().zip(values) {
                    set_path(&mut point, &axis.path, v.clone())?;
                }
                let scenario: Scenario = point.try_into().context("invalid sweep point")?;
                scenario.validate()?;
                execute(&scenario, settings)
            })
            .collect()
    });

    let mut keys: Vec<String> = Vec::new();
    let mut outcomes = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        let o = r.with_context(|| format!("sweep point {k}"))?;
        for (key, _) in &o.summary {
            if !keys.contains(key) {
                keys.push(key.clone());
            }
        }
        outcomes.push(o);
    }
    let mut header = vec!["point".to_string()];
    header.extend(block.axis.iter().map(|a| a.path.clone()));
    header.extend(keys.iter().cloned());
    let mut table = Table { name: "sweep".into(), header, rows: Vec::new() };
    let mut out = Outcome::default();
    for (k, (values, o)) in points.iter().zip(&outcomes).enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(values.iter().map(cell));
        row.extend(keys.iter().map(|key| o.get(key).map(num).unwrap_or_default()));
        table.push(row);
        out.warnings.extend(o.warnings.iter().map(|w| format!("point {k}: {w}")));
        out.breaches.extend(o.breaches.iter().map(|b| format!("point {k}: {b}")));
    }
    out.tables.push(table);
    out.summary("points", points.len() as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian_and_ordered() {
        let block: SweepBlock = toml::from_str("[[axis]]\npath = \"a\"\nvalues = [1, 2]\n[[axis]]\npath = \"b\"\nvalues = [\"x\", \"y\", \"z\"]").unwrap();
        let g = grid(&block);
        assert_eq!(g.len(), 6);
        assert_eq!(cell(&g[1][1]), "y");
        assert_eq!(cell(&g[3][0]), "2");
        assert_eq!(grid(&SweepBlock { axis: vec![] }).len(), 1);
    }

    #[test]
    fn paths_must_exist() {
        let mut v: toml::Value = toml::from_str("[drive]\nrabi = \"1 kHz\"\n[[gate.pulse]]\nkind = \"idle\"").unwrap();
        set_path(&mut v, "drive.rabi", toml::Value::String("2 kHz".into())).unwrap();
        assert_eq!(v["drive"]["rabi"].as_str(), Some("2 kHz"));
        set_path(&mut v, "gate.pulse.0.kind", toml::Value::String("zphase".into())).unwrap();
        assert!(set_path(&mut v, "drive.rabbi", toml::Value::Integer(1)).is_err());
        assert!(set_path(&mut v, "gate.pulse.3.kind", toml::Value::Integer(1)).is_err());
    }
}
