use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};

/// One scalar in a report row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Float)
    }
}

/// A row keeps its insertion order, which becomes the CSV column order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row(pub Vec<(String, Cell)>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.0.push((key.to_owned(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.to_owned(), value, threshold, pass: value <= threshold }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.to_owned(), value, threshold, pass: value >= threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    pub version: String,
    pub items: Vec<Row>,
    /// Structured results; JSON output only.
    pub details: Value,
    pub checks: Vec<Check>,
    /// Not part of the reproducible payload.
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            items: Vec::new(),
            details: Value::Null,
            checks: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The reproducible part of the report as one JSON value.
    pub fn payload(&self) -> Value {
        let mut top = BTreeMap::new();
        top.insert("command".to_owned(), Value::String(self.config.command.name().to_owned()));
        top.insert("config".to_owned(), serde_json::to_value(&self.config).expect("config serializes"));
        top.insert("version".to_owned(), Value::String(self.version.clone()));
        if !self.items.is_empty() {
            top.insert("items".to_owned(), Value::Array(self.items.iter().map(row_value).collect()));
        }
        if !self.details.is_null() {
            top.insert("details".to_owned(), self.details.clone());
        }
        if !self.checks.is_empty() {
            top.insert(
                "checks".to_owned(),
                serde_json::to_value(&self.checks).expect("checks serialize"),
            );
            top.insert("pass".to_owned(), Value::Bool(self.all_pass()));
        }
        Value::Object(top.into_iter().collect())
    }

    pub fn payload_json(&self) -> String {
        let mut out = String::new();
        write_json(&mut out, &self.payload());
        out
    }

    /// The payload followed by the wall-clock line, one JSON object.
    pub fn to_json(&self) -> String {
        let payload = self.payload_json();
        let body = payload.strip_suffix("\n}").expect("payload is a non-empty object");
        format!("{body},\n\"wall_clock_seconds\":{}\n}}\n", fmt_float(self.wall_clock_seconds))
    }

    /// One CSV row per item. A report without items echoes the config as a
    /// single row instead.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.items.is_empty() {
            let Value::Object(cfg) = serde_json::to_value(&self.config).expect("config serializes") else {
                unreachable!("config is a struct")
            };
            w.write_record(cfg.keys())?;
            w.write_record(cfg.values().map(csv_value))?;
        } else {
            let header: Vec<&str> = self.items[0].0.iter().map(|(k, _)| k.as_str()).collect();
            w.write_record(&header)?;
            for row in &self.items {
                w.write_record(header.iter().map(|k| row.get(k).map_or_else(String::new, csv_cell)))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: Format) -> Result<String, csv::Error> {
        match format {
            Format::Json => Ok(self.to_json()),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn emit(&self, out: &mut dyn Write, format: Format) -> std::io::Result<()> {
        let text = self.render(format).map_err(std::io::Error::other)?;
        out.write_all(text.as_bytes())
    }
}

fn row_value(row: &Row) -> Value {
    Value::Object(row.0.iter().map(|(k, c)| (k.clone(), cell_value(c))).collect())
}

fn cell_value(c: &Cell) -> Value {
    match c {
        Cell::Int(v) => Value::from(*v),
        Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
        Cell::Bool(v) => Value::Bool(*v),
        Cell::Text(v) => Value::String(v.clone()),
        Cell::Null => Value::Null,
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => fmt_float(*v),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(v) => v.clone(),
        Cell::Null => String::new(),
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => fmt_float(n.as_f64().unwrap_or(f64::NAN)),
        other => other.to_string(),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_owned()
    }
}

/// Compact JSON with keys sorted, one top-level entry per line, and floats
/// in [`fmt_float`] form.
pub fn write_json(out: &mut String, v: &Value) {
    write_value(out, v, true);
}

fn write_value(out: &mut String, v: &Value, top: bool) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) if !n.is_f64() => write!(out, "{i}").unwrap(),
            (_, Some(u)) if !n.is_f64() => write!(out, "{u}").unwrap(),
            _ => out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item, false);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if top {
                    out.push('\n');
                }
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push(':');
                write_value(out, &map[*k], false);
            }
            if top && !keys.is_empty() {
                out.push('\n');
            }
            out.push('}');
        }
    }
}
