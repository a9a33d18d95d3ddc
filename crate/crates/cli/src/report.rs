//! Result tables with CSV and aligned-text renderings.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Value {
    /// Shortest round-trip decimal for floats.
    fn csv(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => v.to_string(),
            Value::Text(v) => v.clone(),
            Value::Bool(v) => v.to_string(),
        }
    }

    fn text(&self) -> String {
        match self {
            Value::Float(v) if v.is_finite() && *v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) => format!("{v:.4e}"),
            Value::Float(v) => format!("{v:.5}"),
            other => other.csv(),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

/// A named table with a fixed column order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Value::csv)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(std::io::Error::other(e)))
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Value::text).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |r: &[String]| {
            r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
        };
        let mut out = format!("# {}\n{}\n", self.name, line(&self.columns));
        for r in &cells {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Txt => Ok(self.to_text()),
        }
    }

    /// Numeric column by name.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .map(|r| match &r[j] {
                Value::Float(v) => Some(*v),
                Value::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect()
    }
}

/// A named pass/fail flag attached to one design cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFlag {
    pub cell: String,
    pub check: String,
    pub pass: bool,
}

/// Tables and flags produced by one experiment run.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct McSummary {
    pub tables: Vec<Table>,
    pub flags: Vec<CellFlag>,
}

impl McSummary {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn flag_table(&self) -> Table {
        let mut t = Table::new("flags", &["cell", "check", "pass"]);
        for f in &self.flags {
            t.push(vec![f.cell.clone().into(), f.check.clone().into(), f.pass.into()]);
        }
        t
    }

    /// Writes `<name>.csv` and `<name>.txt` for every table plus the flags.
    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in self.tables.iter().chain(std::iter::once(&self.flag_table())) {
            let csv = dir.join(format!("{}.csv", t.name));
            fs::write(&csv, t.to_csv()?)?;
            let txt = dir.join(format!("{}.txt", t.name));
            fs::write(&txt, t.to_text())?;
            written.extend([csv, txt]);
        }
        Ok(written)
    }
}
