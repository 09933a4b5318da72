//! Run manifests and CSV / JSON rendering.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use impulse_core::ProblemSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::args::Command;

pub const TOOL: &str = "impulse";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub command: Command,
    pub spec: Option<ProblemSpec>,
    pub seeds: Vec<u64>,
    /// Only in sidecars: the embedded copy must not depend on where or how
    /// fast the run happened.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outputs: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub duration_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(command: Command, spec: Option<ProblemSpec>, seeds: Vec<u64>) -> Self {
        RunManifest { tool: TOOL.into(), version: env!("CARGO_PKG_VERSION").into(), command, spec, seeds, outputs: None, duration_seconds: None }
    }

    /// Reads the manifest embedded in a CSV header, a JSON output or a sidecar.
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let bad = |e: serde_json::Error| format!("{}: malformed manifest: {e}", path.display());
        if let Some(line) = text.lines().next().and_then(|l| l.strip_prefix("# ")) {
            return serde_json::from_str(line).map_err(bad);
        }
        let v: Value = serde_json::from_str(&text).map_err(bad)?;
        match v.get("manifest") {
            Some(m) => serde_json::from_value(m.clone()).map_err(bad),
            None => serde_json::from_value(v).map_err(bad),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => fmt_float(*v),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::Empty => String::new(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => json!(v),
            Cell::F(_) | Cell::Empty => Value::Null,
            Cell::U(v) => json!(v),
            Cell::B(v) => json!(v),
            Cell::S(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// What a command produced: a table plus optional structured detail.
#[derive(Debug, Clone)]
pub struct Output {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub detail: Option<Value>,
    pub preferred: Format,
    pub summary: String,
}

impl Output {
    pub fn table(columns: Vec<&'static str>) -> Self {
        Output { columns, rows: vec![], detail: None, preferred: Format::Csv, summary: String::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, manifest: &RunManifest, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = format!("# {}\n", serde_json::to_string(manifest).expect("manifest serialises"));
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect::<Map<_, _>>()))
                    .collect();
                let mut obj = Map::new();
                obj.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serialises"));
                obj.insert("rows".into(), Value::Array(rows));
                if let Some(d) = &self.detail {
                    obj.insert("detail".into(), d.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json serialises");
                s.push('\n');
                s
            }
        }
    }
}

/// Where `--out` points.
#[derive(Debug, Clone, PartialEq)]
pub enum Destination {
    Stdout(Option<Format>),
    File(PathBuf, Format),
}

impl Destination {
    pub fn parse(out: Option<&str>) -> Self {
        match out {
            None | Some("-") => Destination::Stdout(None),
            Some("csv") => Destination::Stdout(Some(Format::Csv)),
            Some("json") => Destination::Stdout(Some(Format::Json)),
            Some(p) => {
                let path = PathBuf::from(p);
                let fmt = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) { Format::Json } else { Format::Csv };
                Destination::File(path, fmt)
            }
        }
    }

    /// Writes the output; file outputs also get a `<file>.manifest.json` sidecar.
    pub fn write(&self, output: &Output, manifest: &RunManifest, duration: f64) -> Result<(), String> {
        match self {
            Destination::Stdout(fmt) => {
                let text = output.render(manifest, fmt.unwrap_or(output.preferred));
                std::io::stdout().write_all(text.as_bytes()).map_err(|e| format!("cannot write to stdout: {e}"))
            }
            Destination::File(path, fmt) => {
                write_file(path, &output.render(manifest, *fmt))?;
                let mut full = manifest.clone();
                full.outputs = Some(vec![path.display().to_string()]);
                full.duration_seconds = Some(duration);
                let mut side = serde_json::to_string_pretty(&full).expect("manifest serialises");
                side.push('\n');
                write_file(&sidecar(path), &side)
            }
        }
    }
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
