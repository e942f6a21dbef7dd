//! CSV emission with a stable layout: `#`-prefixed metadata lines, one
//! header row, then data rows. Floats use Rust's shortest round-trip
//! formatting and rows are fully determined by the run configuration, so
//! repeated runs produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub struct CsvTable {
    schema: &'static str,
    meta: Vec<(String, String)>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &'static str, header: Vec<&'static str>) -> Self {
        Self {
            schema,
            meta: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn write_to(&self, path: &Path) -> CliResult<()> {
        let mut out = Vec::new();
        writeln!(out, "# schema={}", self.schema).expect("vec write");
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}").expect("vec write");
        }
        writeln!(out, "{}", self.header.join(",")).expect("vec write");
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).expect("vec write");
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Shortest round-trip decimal for a float cell.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Optional float cell; absent values are empty fields.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}
