//! Run directory: CSV, JSON and SVG artifacts plus the event log that ends
//! up in the manifest.

use crate::svg::{line_chart, Chart};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = concat!("starlab ", env!("CARGO_PKG_VERSION"));

/// Shortest round-trip decimal form, switching to exponent notation for
/// very small or very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Info,
    Warning,
    /// Fails the run when `--verify` is given.
    Failure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogEvent {
    pub source: String,
    pub kind: String,
    pub severity: Severity,
    pub clock: Option<f64>,
    pub detail: String,
}

/// Output directory of one run. Paths recorded in `files` are relative to
/// the top-level run directory.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    prefix: String,
    pub files: Vec<String>,
    pub events: Vec<LogEvent>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            prefix: String::new(),
            files: vec![],
            events: vec![],
        })
    }

    /// Subdirectory whose files and events are merged back with [`RunDir::absorb`].
    pub fn child(&self, name: &str) -> Result<Self> {
        let mut c = Self::create(&self.root.join(name))?;
        c.prefix = format!("{}{name}/", self.prefix);
        Ok(c)
    }

    pub fn absorb(&mut self, child: RunDir) {
        self.files.extend(child.files);
        self.events.extend(child.events);
    }

    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        self.files.push(format!("{}{rel}", self.prefix));
        Ok(p)
    }

    /// Writes a numeric table formatted with [`num`].
    pub fn csv<I>(&mut self, rel: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let p = self.path(rel)?;
        let mut w =
            csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|&v| num(v)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes a table whose cells are already formatted.
    pub fn csv_text(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let p = self.path(rel)?;
        let mut w =
            csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let p = self.path(rel)?;
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))
    }

    pub fn svg(&mut self, rel: &str, chart: &Chart) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(&p, line_chart(chart)).with_context(|| format!("writing {}", p.display()))
    }

    pub fn event(
        &mut self,
        source: &str,
        kind: &str,
        severity: Severity,
        clock: Option<f64>,
        detail: impl Into<String>,
    ) {
        self.events.push(LogEvent {
            source: source.into(),
            kind: kind.into(),
            severity,
            clock,
            detail: detail.into(),
        });
    }

    pub fn has_failure(&self) -> bool {
        self.events.iter().any(|e| e.severity == Severity::Failure)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub events: Vec<LogEvent>,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}
