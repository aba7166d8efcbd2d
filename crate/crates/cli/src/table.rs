//! CSV tables with a `#` header block.
//!
//! ```text
//! # qedlab table v1
//! # run: <kind>
//! # config-hash: <sha256>
//! # units: <unit per column>
//! # <free-form note lines>
//! <column names>
//! <rows>
//! ```
//!
//! Reals are rendered with 17 significant digits (`{:.16e}`), so identical
//! runs produce identical bodies.

use std::fmt::Write as _;

use qedlab_core::io::fmt_real;

pub const TABLE_MAGIC: &str = "# qedlab table v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) if x.is_nan() => "nan".into(),
            Cell::Real(x) if x.is_infinite() => (if *x > 0.0 { "inf" } else { "-inf" }).into(),
            Cell::Real(x) => fmt_real(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => quote(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name inside the output directory.
    pub name: String,
    pub columns: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `columns` as (name, unit) pairs.
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn render(&self, kind: &str, config_hash: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{TABLE_MAGIC}");
        let _ = writeln!(s, "# run: {kind}");
        let _ = writeln!(s, "# config-hash: {config_hash}");
        let units: Vec<&str> = self.columns.iter().map(|c| c.1.as_str()).collect();
        let _ = writeln!(s, "# units: {}", units.join(","));
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Column names and rows of a rendered table (header lines skipped).
pub fn parse_body(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().map(|l| l.split(',').map(str::to_string).collect()).unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}
