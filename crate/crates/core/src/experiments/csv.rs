use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Numeric table with a `#key: value` metadata header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest decimal that parses back to the same f64.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || (1e-4..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl CsvTable {
    pub fn new(columns: Vec<String>) -> Self {
        CsvTable {
            columns,
            ..Default::default()
        }
    }

    pub fn from_columns(names: &[&str], data: &[&[f64]]) -> Result<Self> {
        if names.len() != data.len() {
            return Err(Error::invalid("one data column per name is required"));
        }
        let n = data.first().map_or(0, |c| c.len());
        if data.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns have different lengths"));
        }
        let mut t = CsvTable::new(names.iter().map(|s| s.to_string()).collect());
        t.rows = (0..n).map(|i| data.iter().map(|c| c[i]).collect()).collect();
        Ok(t)
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let v = v.replace('\n', " ");
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|x| format_float(*x)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = CsvTable::default();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("line {}: metadata without ':'", lineno + 1)))?;
                t.metadata.insert(k.trim().to_string(), v.trim().to_string());
            } else if !header {
                t.columns = line.split(',').map(str::to_string).collect();
                header = true;
            } else if !line.is_empty() {
                let row = line
                    .split(',')
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
                if row.len() != t.columns.len() {
                    return Err(Error::Config(format!("line {}: expected {} fields", lineno + 1, t.columns.len())));
                }
                t.rows.push(row);
            }
        }
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
