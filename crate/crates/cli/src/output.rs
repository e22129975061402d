use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Fractions are written with six decimals.
pub fn frac(x: f64) -> String {
    format!("{x:.6}")
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path).map_err(|e| out_err(&path, e))?;
        writer.write_record(header).map_err(|e| out_err(&path, e))?;
        Ok(Table { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| out_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| out_err(&self.path, e))?;
        Ok(self.path)
    }
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))
}

/// Writes `run.json` next to the tables.
pub fn write_manifest(dir: &Path, manifest: &impl Serialize) -> Result<(), CliError> {
    let path = dir.join("run.json");
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| out_err(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| out_err(&path, e))
}
