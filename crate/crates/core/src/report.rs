//! Tabular reports: CSV as the primary format with a JSON mirror that
//! regenerates the identical CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Bool(b) => b.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => Value::from(*x),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Bool(b) => Ok(Cell::Bool(*b)),
            Value::Number(n) if n.is_i64() => Ok(Cell::Int(n.as_i64().unwrap())),
            Value::Number(n) => Ok(Cell::Float(n.as_f64().unwrap())),
            Value::String(s) => Ok(Cell::Text(s.clone())),
            other => Err(Error::invalid(format!("unsupported report cell {other}"))),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
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

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Free-form report metadata, mirrored only in JSON.
    pub meta: Map<String, Value>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable metadata"));
        self
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect(),
                )
            })
            .collect();
        let doc = serde_json::json!({
            "name": self.name,
            "columns": self.columns,
            "rows": rows,
            "meta": self.meta,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::invalid(format!("report json: {what}"));
        let doc: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
        let name = doc["name"].as_str().ok_or_else(|| bad("missing name"))?.to_string();
        let columns: Vec<String> = doc["columns"]
            .as_array()
            .ok_or_else(|| bad("missing columns"))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| bad("column names must be strings")))
            .collect::<Result<_>>()?;
        let rows = doc["rows"]
            .as_array()
            .ok_or_else(|| bad("missing rows"))?
            .iter()
            .map(|r| {
                columns
                    .iter()
                    .map(|c| Cell::from_json(r.get(c).ok_or_else(|| bad(&format!("row lacks {c}")))?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let meta = doc["meta"].as_object().cloned().unwrap_or_default();
        Ok(Self {
            name,
            columns,
            rows,
            meta,
        })
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.json` atomically.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{}.csv", self.name));
        let json_path = dir.join(format!("{}.json", self.name));
        write_atomic(&csv_path, self.to_csv().as_bytes())?;
        write_atomic(&json_path, self.to_json().as_bytes())?;
        Ok((csv_path, json_path))
    }
}

/// Write to a temporary file in the target directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid(format!("out: cannot write {}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
