use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use roqam::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

/// Column-oriented result of a command.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key = value` lines for the header.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    fn to_json(&self) -> Value {
        let mut cols = Map::new();
        for (k, name) in self.columns.iter().enumerate() {
            cols.insert(name.clone(), Value::Array(self.rows.iter().map(|r| r[k].json()).collect()));
        }
        let notes: Map<String, Value> = self.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({ "notes": notes, "columns": cols })
    }
}

/// What a command produced.
pub enum Payload {
    Table(Table),
    /// Structured report with a tabular view for CSV output.
    Report { json: Value, table: Table },
}

fn header_lines(command: &str, cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![format!("roqam-cli {} {command}", env!("CARGO_PKG_VERSION"))];
    lines.extend(cfg.to_toml().lines().map(str::to_string));
    lines
}

pub fn render(command: &str, cfg: &RunConfig, payload: &Payload) -> Result<String> {
    match cfg.format()? {
        Format::Csv => {
            let table = match payload {
                Payload::Table(t) | Payload::Report { table: t, .. } => t,
            };
            let mut out = String::new();
            for line in header_lines(command, cfg) {
                out.push_str(&format!("# {line}\n"));
            }
            for (k, v) in &table.notes {
                out.push_str(&format!("# {k} = {v}\n"));
            }
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
            Ok(out)
        }
        Format::Json => {
            let data = match payload {
                Payload::Table(t) => t.to_json(),
                Payload::Report { json, .. } => json.clone(),
            };
            let config: Value = serde_json::to_value(cfg).expect("config serializes");
            let doc = json!({
                "header": { "tool": "roqam-cli", "version": env!("CARGO_PKG_VERSION"), "command": command, "config": config },
                "data": data,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&doc).expect("json serializes")))
        }
    }
}

/// Write to the configured path, or stdout when none is set.
pub fn emit(text: &str, cfg: &RunConfig) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
