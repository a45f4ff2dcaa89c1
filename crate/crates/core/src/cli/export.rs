//! Result bundles and their on-disk form: `summary.json`, one CSV per table,
//! grid-function dumps and `plot.txt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::config::ValidConfig;
use super::gridio::{fmt_f64, write_grid_function};
use crate::nonlocal::GridFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; written as `<name>.csv`.
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSlope {
    pub label: String,
    pub slope: f64,
    /// Point the line passes through.
    pub anchor: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub table: String,
    pub x: &'static str,
    pub y: Vec<&'static str>,
    pub log_log: bool,
    pub reference_slopes: Vec<ReferenceSlope>,
}

/// Everything an experiment produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub results: Map<String, Value>,
    pub checks: BTreeMap<String, bool>,
    pub tables: Vec<Table>,
    pub dumps: Vec<(String, GridFunction)>,
    pub plots: Vec<Plot>,
    /// Solver runs that stopped without meeting the tolerance.
    pub unconverged: Vec<String>,
    pub aborted: Option<String>,
}

impl Report {
    pub fn set(&mut self, key: &str, value: impl serde::Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn plot_description(plots: &[Plot]) -> String {
    let mut out = String::from("# plot description: one block per figure, columns refer to CSV headers\n");
    for p in plots {
        let _ = writeln!(out, "\n[plot]");
        let _ = writeln!(out, "title = {}", p.title);
        let _ = writeln!(out, "data = {}.csv", p.table);
        let _ = writeln!(out, "x = {}", p.x);
        let _ = writeln!(out, "y = {}", p.y.join(","));
        let _ = writeln!(out, "log_log = {}", p.log_log);
        for r in &p.reference_slopes {
            let _ = writeln!(
                out,
                "reference = {}; slope {}; through ({}, {})",
                r.label,
                fmt_f64(r.slope),
                fmt_f64(r.anchor.0),
                fmt_f64(r.anchor.1)
            );
        }
    }
    out
}

/// Writes the bundle into `dir` and returns the files written.
pub fn export(report: &Report, cfg: &ValidConfig, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        std::fs::write(&path, t.to_csv())?;
        written.push(path);
    }
    for (name, u) in &report.dumps {
        let path = dir.join(format!("{name}.csv"));
        write_grid_function(&path, u)?;
        written.push(path);
    }
    let plot = dir.join("plot.txt");
    std::fs::write(&plot, plot_description(&report.plots))?;
    written.push(plot);

    let summary = json!({
        "experiment": cfg.experiment.name(),
        "provenance": {
            "config_sha256": cfg.sha256,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": chrono::Utc::now().to_rfc3339(),
            "seed": cfg.seed,
        },
        "kernel": cfg.kernel,
        "grid": cfg.grid,
        "results": report.results,
        "checks": report.checks,
        "unconverged": report.unconverged,
        "aborted": report.aborted,
        "files": written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy()).collect::<Vec<_>>(),
    });
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary).map_err(io::Error::other)? + "\n")?;
    written.push(path);
    Ok(written)
}
