//! Rectangular result tables written as comma-separated values.
//!
//! Layout: a mandatory header row, the data rows, then trailer rows whose
//! first cell starts with `#` (summary values and metadata such as the tool
//! version, the seed and the scenario hash), padded to the header width.
//! Floats are written with 17 significant digits, lines end in LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// 17 significant digits in scientific notation; non-finite values spelled out.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub tool_version: String,
    pub seed: Option<u64>,
    pub scenario_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(String, Cell)>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            metadata: Metadata::default(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.headers.len() {
            return Err(Error::diagnostic(format!(
                "row has {} cells but the table has {} columns",
                row.len(),
                self.headers.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_summary(&mut self, key: impl Into<String>, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn summary(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_csv(&self) -> String {
        let width = self.headers.len().max(2);
        let mut out = String::new();
        let mut line = |cells: Vec<String>| {
            let mut cells = cells;
            cells.resize(width, String::new());
            let _ = writeln!(out, "{}", cells.join(","));
        };
        line(self.headers.iter().map(|h| quote(h)).collect());
        for row in &self.rows {
            line(row.iter().map(Cell::render).collect());
        }
        for (k, v) in &self.summary {
            line(vec![quote(&format!("#{k}")), v.render()]);
        }
        line(vec!["#tool".into(), quote(&self.metadata.tool_version)]);
        line(vec![
            "#seed".into(),
            self.metadata
                .seed
                .map(|s| s.to_string())
                .unwrap_or_default(),
        ]);
        line(vec![
            "#scenario_sha256".into(),
            self.metadata.scenario_hash.clone(),
        ]);
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
