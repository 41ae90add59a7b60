//! Plot-ready CSV reports.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    /// Numbers carry 17 significant digits so they parse back exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Table with a fixed column order.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Series {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    /// Stable sort by a numeric column.
    pub fn sort_by_column(&mut self, column: &str) {
        let Some(c) = self.columns.iter().position(|n| n == column) else {
            return;
        };
        let key = |r: &Vec<Cell>| match r[c] {
            Cell::Num(v) => v,
            Cell::Text(_) => f64::NAN,
        };
        self.rows.sort_by(|a, b| key(a).total_cmp(&key(b)));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[c] {
                    Cell::Num(v) => v,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

pub fn emit_report(series: &Series, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(&series.columns)?;
    for row in &series.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a report back; cells that parse as numbers become numbers.
pub fn read_report(path: &Path) -> Result<Series> {
    let mut r = csv::Reader::from_path(path)?;
    let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != columns.len() {
            return Err(Error::Config(format!("{}: ragged row", path.display())));
        }
        rows.push(
            rec.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map(Cell::Num)
                        .unwrap_or_else(|_| Cell::Text(s.to_string()))
                })
                .collect(),
        );
    }
    Ok(Series { columns, rows })
}
