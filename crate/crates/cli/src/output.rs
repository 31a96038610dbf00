//! Tabular experiment output: a metadata block echoing the configuration
//! plus plot-ready rows, rendered as CSV (metadata in `#` comment lines,
//! then a header row) or JSON matching `schemas/output.schema.json`.
//!
//! Data sections are byte-identical across reruns of the same config; the
//! only run-dependent field is `timestamp_unix`, which lives in metadata.

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(text: &str) -> Option<Format> {
        match text.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn num(x: f64) -> Value {
    Value::Number(Number::from_f64(x).expect("finite value"))
}

pub fn int(x: usize) -> Value {
    Value::Number(Number::from(x as u64))
}

pub fn text(x: impl Into<String>) -> Value {
    Value::String(x.into())
}

#[derive(Debug, Clone)]
pub struct Table {
    metadata: BTreeMap<String, Value>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            metadata: BTreeMap::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: Value) {
        self.metadata.insert(key.to_string(), value);
    }

    pub fn row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let mut root = Map::new();
        let mut meta = Map::new();
        for (key, value) in &self.metadata {
            meta.insert(key.clone(), value.clone());
        }
        root.insert("metadata".into(), Value::Object(meta));
        root.insert(
            "columns".into(),
            Value::Array(self.columns.iter().map(|c| text(*c)).collect()),
        );
        root.insert(
            "rows".into(),
            Value::Array(self.rows.iter().cloned().map(Value::Array).collect()),
        );
        let mut doc = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
        doc.push('\n');
        doc
    }
}

fn csv_cell(value: &Value) -> String {
    match value {
        // Identifiers only; no quoting layer needed.
        Value::String(s) => {
            debug_assert!(!s.contains(',') && !s.contains('\n'));
            s.clone()
        }
        other => other.to_string(),
    }
}
