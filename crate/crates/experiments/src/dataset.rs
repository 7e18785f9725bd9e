//! Row-oriented CSV datasets with pinned, versioned headers.

use std::cmp::Ordering;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// A row with its numeric sort key.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub key: Vec<f64>,
    pub fields: Vec<String>,
}

impl Row {
    pub fn new(key: Vec<f64>, fields: Vec<String>) -> Self {
        Row { key, fields }
    }
}

fn compare_keys(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// File stem, e.g. `size_sweep`.
    pub name: &'static str,
    pub version: u32,
    pub header: Vec<String>,
    pub rows: Vec<Row>,
    /// Rows whose status is not `ok`.
    pub failures: usize,
}

impl Dataset {
    pub fn new(name: &'static str, version: u32, header: &[&str]) -> Self {
        Dataset {
            name,
            version,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            failures: 0,
        }
    }

    pub fn push(&mut self, row: Row) {
        debug_assert_eq!(row.fields.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_failure(&mut self, row: Row) {
        self.failures += 1;
        self.push(row);
    }

    /// Stable sort by key so the bytes never depend on scheduling.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| compare_keys(&a.key, &b.key));
    }

    pub fn file_name(&self) -> String {
        format!("{}.v{}.csv", self.name, self.version)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_to<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(&row.fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(self.file_name());
        self.write_to(fs::File::create(&path)?)?;
        Ok(path)
    }
}

/// A CSV file read back as header and string rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        Table {
            header: ds.header.clone(),
            rows: ds.rows.iter().map(|r| r.fields.clone()).collect(),
        }
    }
}

/// Formats an optional float, empty when absent.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const OK: &str = "ok";

pub fn error_status(msg: impl std::fmt::Display) -> String {
    format!("error: {msg}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_is_by_numeric_key() {
        let mut ds = Dataset::new("t", 1, &["a"]);
        for k in [10.0, 2.0, 1.0] {
            ds.push(Row::new(vec![k], vec![k.to_string()]));
        }
        ds.push(Row::new(vec![2.0, -1.0], vec!["x".into()]));
        ds.sort();
        let order: Vec<&str> = ds.rows.iter().map(|r| r.fields[0].as_str()).collect();
        assert_eq!(order, ["1", "2", "x", "10"]);
    }

    #[test]
    fn csv_round_trip() {
        let mut ds = Dataset::new("t", 2, &["a", "b"]);
        ds.push(Row::new(vec![0.0], vec!["1".into(), "two, three".into()]));
        let mut bytes = Vec::new();
        ds.write_to(&mut bytes).unwrap();
        let table = Table::read(bytes.as_slice()).unwrap();
        assert_eq!(table, Table::from_dataset(&ds));
        assert_eq!(ds.file_name(), "t.v2.csv");
    }

    #[test]
    fn empty_dataset_has_header() {
        let mut bytes = Vec::new();
        Dataset::new("t", 1, &["x", "y"]).write_to(&mut bytes).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "x,y\n");
    }
}
