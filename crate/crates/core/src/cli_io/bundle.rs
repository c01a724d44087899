//! Result bundles: a manifest, named numeric tables and a scalar summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;

/// A numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub experiment: String,
    pub version: String,
    pub elapsed_seconds: f64,
}

/// Configuration echo plus provenance of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub manifest: Manifest,
    pub tables: BTreeMap<String, Table>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl ResultBundle {
    pub fn new(experiment: &str, config: RunConfig) -> Self {
        Self {
            manifest: Manifest {
                run: RunInfo {
                    experiment: experiment.to_string(),
                    version: env!("CARGO_PKG_VERSION").to_string(),
                    elapsed_seconds: 0.0,
                },
                config,
            },
            tables: BTreeMap::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Numeric summary value, if present.
    pub fn number(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(|v| v.as_f64())
    }

    /// Canonical `summary.json` text.
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary is valid JSON");
        s.push('\n');
        s
    }
}

#[derive(Debug)]
pub struct EmitError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

impl std::fmt::Display for EmitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for EmitError {}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, EmitError> {
    std::fs::write(&path, bytes).map_err(|source| EmitError {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// CSV text with a header row and `{:.14e}` numbers.
pub fn table_csv(table: &Table) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format!("{v:.14e}")))
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Write `manifest.toml`, one CSV per table and `summary.json` (when there
/// is anything to summarize). Returns the written paths.
pub fn emit_bundle(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>, EmitError> {
    std::fs::create_dir_all(dir).map_err(|source| EmitError {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let manifest = toml::to_string(&bundle.manifest).expect("manifest is representable");
    written.push(write_file(dir.join("manifest.toml"), manifest.as_bytes())?);
    for (name, table) in &bundle.tables {
        written.push(write_file(
            dir.join(format!("{name}.csv")),
            &table_csv(table),
        )?);
    }
    if !bundle.summary.is_empty() {
        written.push(write_file(
            dir.join("summary.json"),
            bundle.summary_json().as_bytes(),
        )?);
    }
    Ok(written)
}

/// Parse a `manifest.toml` written by [`emit_bundle`].
pub fn read_manifest(text: &str) -> Result<Manifest, toml::de::Error> {
    toml::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::config::parse_config_str;

    fn config() -> RunConfig {
        parse_config_str(
            "[model]\nkind = \"constant\"\na0 = 1.0\nperiod = 1.0\n[solver]\neps = 0.1\n",
            &[],
        )
        .unwrap()
    }

    #[test]
    fn empty_bundle_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let b = ResultBundle::new("periodic-orbit", config());
        let written = emit_bundle(&b, dir.path()).unwrap();
        assert_eq!(written, vec![dir.path().join("manifest.toml")]);
        let text = std::fs::read_to_string(&written[0]).unwrap();
        assert_eq!(read_manifest(&text).unwrap().config, config());
    }

    #[test]
    fn orbit_table_schema_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ResultBundle::new("periodic-orbit", config());
        let mut t = Table::new(&["t", "rho"]);
        t.push(vec![0.0, 0.123456789012345]);
        t.push(vec![0.5, 1.0 / 3.0]);
        b.tables.insert("orbit_rho".into(), t);
        b.put("rho_mean", 0.25);
        emit_bundle(&b, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("orbit_rho.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,rho"));
        assert_eq!(lines.next(), Some("0.00000000000000e0,1.23456789012345e-1"));
        let first: Vec<Vec<u8>> = ["manifest.toml", "orbit_rho.csv", "summary.json"]
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).unwrap())
            .collect();
        emit_bundle(&b, dir.path()).unwrap();
        for (f, before) in ["manifest.toml", "orbit_rho.csv", "summary.json"]
            .iter()
            .zip(first)
        {
            assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), before);
        }
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = emit_bundle(&ResultBundle::new("x", config()), &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
