//! CSV and JSON emitters.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which round-trips f64
//! exactly, so cross-route diffs of emitted CSVs are meaningful at machine precision.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Full-precision float formatting for CSV cells.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvWriter {
    writer: BufWriter<fs::File>,
    pub path: PathBuf,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, header: &str) -> anyhow::Result<CsvWriter> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let path = dir.join(name);
        let file = fs::File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "{header}")?;
        Ok(CsvWriter { writer, path })
    }

    pub fn row(&mut self, cells: &[String]) -> anyhow::Result<()> {
        writeln!(self.writer, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

/// Machine-readable run summary printed to stdout at the end of every command.
pub fn print_summary(summary: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(summary).expect("summary serializes"));
}
