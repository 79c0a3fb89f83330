//! CSV artifacts. Each file starts with `# key = value` lines echoing the
//! full configuration, then a header row; it is written to a temporary file
//! in the target directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;
use crate::error::BenchResult;

/// A table with a fixed column order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of column `name` parsed as `f64`.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> BenchResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Renders a table with the config echo on top.
pub fn render_csv(cfg: &ExperimentConfig, table: &Table) -> BenchResult<Vec<u8>> {
    let mut out = Vec::new();
    for line in cfg.to_kv().lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

pub fn write_csv(path: &Path, cfg: &ExperimentConfig, table: &Table) -> BenchResult<()> {
    write_atomic(path, &render_csv(cfg, table)?)
}

/// Reads a file written by [`write_csv`]: the echoed config and the table.
pub fn read_csv(path: &Path) -> BenchResult<(ExperimentConfig, Table)> {
    let text = std::fs::read_to_string(path)?;
    let echo: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{}\n", l.trim_start_matches('#')))
        .collect();
    let mut cfg = ExperimentConfig::default();
    cfg.apply_kv(&echo, path)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
    Ok((cfg, Table { header, rows }))
}

/// Shortest round-trip text for a float.
pub fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_with_config_echo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/t.csv");
        let mut cfg = ExperimentConfig::default();
        cfg.set("leaf_size", "42").unwrap();
        let mut t = Table::new(&["n", "value"]);
        t.push(vec!["1".into(), fmt_f(0.1)]);
        t.push(vec!["2".into(), fmt_f(-3.5e-9)]);
        write_csv(&path, &cfg, &t).unwrap();
        let (c, back) = read_csv(&path).unwrap();
        assert_eq!(c, cfg);
        assert_eq!(back, t);
        assert_eq!(back.floats("value").unwrap(), vec![0.1, -3.5e-9]);
        let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1, "no temporary file left behind");
    }

    #[test]
    #[should_panic]
    fn ragged_rows_are_a_bug() {
        Table::new(&["a", "b"]).push(vec!["1".into()]);
    }
}
