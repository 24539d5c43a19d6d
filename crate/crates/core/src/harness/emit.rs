//! CSV and JSON emission with fixed column order and 12 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::sha256_hex;
use crate::error::Result;
use crate::numeric::fmt12;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt12(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
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

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// Builds a row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::harness::emit::Cell::from($x)),*]
    };
}

/// A named table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let fields: Vec<String> = r.iter().map(Cell::render).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// A file written during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes files under one output directory and indexes them.
#[derive(Debug)]
pub struct Emitter {
    root: PathBuf,
    pub files: Vec<FileEntry>,
}

impl Emitter {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Emitter { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry { path: rel.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn table(&mut self, t: &Table) -> Result<()> {
        self.write_bytes(&format!("{}.csv", t.name), t.to_csv().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(&format!("{name}.json"), text.as_bytes())
    }
}

/// Headers of the long-format plot files.
pub const PLOT_HEADERS: [(&str, &[&str]); 5] = [
    ("plot_acceleration", &["energy", "eps", "lyapunov", "segment"]),
    ("plot_zero_cloud", &["n", "energy", "re", "im", "modulus", "pair_index"]),
    ("plot_zero_ratio", &["n", "energy", "eps", "ratio"]),
    ("plot_ids", &["energy", "ids"]),
    ("plot_decay", &["eigen_index", "energy", "site", "log_abs_phi"]),
];

/// Plot-ready data collected from a run; every file is written, with only
/// its header when nothing fed it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub tables: Vec<Table>,
}

impl Default for PlotData {
    fn default() -> Self {
        PlotData { tables: PLOT_HEADERS.iter().map(|(n, h)| Table::new(n, h)).collect() }
    }
}

impl PlotData {
    pub fn get_mut(&mut self, name: &str) -> &mut Table {
        self.tables.iter_mut().find(|t| t.name == name).expect("known plot table")
    }
}

pub fn emit_plotdata(plot: &PlotData, out: &mut Emitter) -> Result<()> {
    for t in &plot.tables {
        out.table(t)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut t = Table::new("x", &["a", "b", "c", "d"]);
        t.push(row![0.1, 3usize, "p,q", true]);
        assert_eq!(t.to_csv(), "a,b,c,d\n1.00000000000e-1,3,\"p,q\",true\n");
    }

    #[test]
    fn empty_plotdata_has_headers() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Emitter::new(dir.path()).unwrap();
        emit_plotdata(&PlotData::default(), &mut e).unwrap();
        assert_eq!(e.files.len(), 5);
        let text = fs::read_to_string(dir.path().join("plot_zero_cloud.csv")).unwrap();
        assert_eq!(text, "n,energy,re,im,modulus,pair_index\n");
    }
}
