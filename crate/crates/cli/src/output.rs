//! Deterministic file emission: CSV tables, JSON documents, and the run
//! manifest. All numeric formatting goes through `fmt_f64` (shortest
//! round-trip representation) so identical configs and seeds yield
//! byte-identical data files.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Shortest round-trip decimal form of a float; stable across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// A CSV table under construction.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width mismatch");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn number_row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.row(&cells);
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// One produced artifact, kept in memory until the single-threaded collector
/// writes everything at the end of the run.
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        OutputFile { name: name.into(), contents: contents.into() }
    }
}

/// Write all artifacts plus the manifest into `dir`, creating it if needed.
/// Returns the paths written. This is the only place that touches the
/// filesystem for results, so concurrent experiment execution can never
/// interleave file contents.
pub fn write_all(
    dir: &Path,
    config: &ExperimentConfig,
    effective_seed: u64,
    warnings: &[String],
    files: &[OutputFile],
    wall_time_s: f64,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::with_capacity(files.len() + 1);
    for file in files {
        let path = dir.join(&file.name);
        std::fs::write(&path, &file.contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }

    let manifest = json!({
        "experiment": config.experiment.as_str(),
        "config": config,
        "seed": effective_seed,
        "versions": {
            "tcrystal-cli": env!("CARGO_PKG_VERSION"),
            "tcrystal-core": tcrystal_core::VERSION,
        },
        "warnings": warnings,
        "outputs": files.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(),
        "wall_time_s": wall_time_s,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("manifest serialization failed: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}
