//! Artifact rendering. JSON artifacts carry `kind`, `config` and the payload
//! fields; CSV artifacts start with `# kind:`, `# config:` and optional
//! `# summary:` comment lines ahead of a fixed column header.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub kind: &'static str,
    pub config: Value,
    pub body: Map<String, Value>,
    /// Headline numbers repeated in the CSV header.
    pub summary: Option<Value>,
    pub table: Table,
}

pub fn to_object<T: Serialize>(value: &T) -> CliResult<Map<String, Value>> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(other) => Err(CliError::Output(format!("expected an object, got {other}"))),
        Err(e) => Err(CliError::Output(e.to_string())),
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Artifact {
    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => {
                let mut m = Map::new();
                m.insert("kind".into(), Value::String(self.kind.into()));
                m.insert("config".into(), self.config.clone());
                for (k, v) in &self.body {
                    m.insert(k.clone(), v.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(m))
                    .map_err(|e| CliError::Output(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut s = format!("# kind: {}\n# config: {}\n", self.kind, self.config);
                if let Some(summary) = &self.summary {
                    s.push_str(&format!("# summary: {summary}\n"));
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Output(e.to_string());
                w.write_record(&self.table.columns).map_err(io)?;
                for row in &self.table.rows {
                    w.write_record(row).map_err(io)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| CliError::Output(e.to_string()))?;
                s.push_str(&String::from_utf8_lossy(&bytes));
                Ok(s)
            }
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        let text = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display()))),
            None => {
                use std::io::Write;
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Output(e.to_string()))
            }
        }
    }
}
