use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::csvio::to_csv;
use crate::error::{CliError, CliResult};

/// Everything a task produces.
#[derive(Default)]
pub struct Artifacts {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metrics: Map<String, Value>,
    pub svg: Option<String>,
    /// Additional files (name, bytes), e.g. a denoised image.
    pub extra: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn metric(&mut self, name: &str, v: impl Into<Value>) {
        self.metrics.insert(name.to_string(), v.into());
    }

    pub fn table(&mut self, header: &[&str], rows: Vec<Vec<String>>) {
        self.header = header.iter().map(|s| s.to_string()).collect();
        self.rows = rows;
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, a: &Artifacts) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    if !a.header.is_empty() {
        write_atomic(dir, "results.csv", &to_csv(&a.header, &a.rows)?)?;
    }
    let mut json = serde_json::to_string_pretty(&a.metrics).map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    write_atomic(dir, "metrics.json", json.as_bytes())?;
    if let Some(svg) = &a.svg {
        write_atomic(dir, "plot.svg", svg.as_bytes())?;
    }
    for (name, bytes) in &a.extra {
        write_atomic(dir, name, bytes)?;
    }
    Ok(())
}
