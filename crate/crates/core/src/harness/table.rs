use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

/// A named table of string cells, written as `<name>.csv`. Numbers are
/// stored in their shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell `name` of `row`, parsed as a number.
    pub fn number(&self, row: usize, name: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column(name)?)?.parse().ok()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
    }

    pub fn read_csv(path: &Path) -> Result<Self, HarnessError> {
        let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(csv_err)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self { name, header, rows })
    }

    /// Fixed-width text rendering with numbers rounded for reading.
    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = std::iter::once(self.header.clone())
            .chain(self.rows.iter().map(|r| r.iter().map(|c| pretty(c)).collect()))
            .collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}

fn pretty(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) if cell.contains('.') || cell.contains('e') => {
            if v != 0.0 && v.abs() < 0.01 {
                format!("{v:.2e}")
            } else {
                format!("{v:.3}")
            }
        }
        _ => cell.to_string(),
    }
}

/// Write every table as CSV into `dir`, plus `summary.txt` with one section
/// per table. Returns the written paths.
pub fn emit_report(tables: &[ReportTable], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let mut summary = String::new();
    for t in tables {
        let path = dir.join(t.file_name());
        t.write_csv(&path)?;
        written.push(path);
        let _ = writeln!(summary, "== {} ==\n{}", t.name, t.render());
    }
    let path = dir.join("summary.txt");
    fs::write(&path, summary).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_match_hand_values() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stats::of(&[7.0]).std, 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ReportTable::new("comparison", &["agent", "value"]);
        t.push(vec!["ppo".into(), format!("{}", 0.1 + 0.2)]);
        t.push(vec!["a,b \"q\"".into(), "-3".into()]);
        let path = dir.path().join(t.file_name());
        t.write_csv(&path).unwrap();
        let back = ReportTable::read_csv(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.number(0, "value"), Some(0.1 + 0.2));
    }

    #[test]
    fn empty_report_has_empty_summary() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&[], dir.path()).unwrap();
        assert_eq!(paths, vec![dir.path().join("summary.txt")]);
        assert_eq!(fs::read_to_string(&paths[0]).unwrap(), "");
    }
}
