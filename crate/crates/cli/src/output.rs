//! Tables and result documents.
//!
//! Floats are written with 17 significant digits in CSV and as shortest
//! round-trip literals in JSON. Non-finite values never reach the output:
//! the cell is left empty (CSV) or null (JSON) and the row's `flag` names it.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub doc: &'static str,
}

pub const FLAG: Column = Column {
    name: "flag",
    doc: "empty, or why the row is incomplete",
};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => Value::from(*v),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rows in emission order; every table ends with the `flag` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
    flagged: usize,
}

impl Table {
    pub fn new(columns: &[Column]) -> Self {
        let mut columns = columns.to_vec();
        columns.push(FLAG);
        Self {
            columns,
            rows: Vec::new(),
            flagged: 0,
        }
    }

    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.name).collect()
    }

    /// Appends a row, blanking non-finite numbers. Short rows are padded
    /// with empty cells.
    pub fn push(&mut self, mut cells: Vec<Cell>, flag: Option<String>) {
        let width = self.columns.len() - 1;
        assert!(cells.len() <= width, "row wider than header");
        cells.resize(width, Cell::Empty);
        let mut notes: Vec<String> = flag.into_iter().collect();
        for (cell, col) in cells.iter_mut().zip(&self.columns) {
            if matches!(cell, Cell::Num(v) if !v.is_finite()) {
                notes.push(format!("non-finite {}", col.name));
                *cell = Cell::Empty;
            }
        }
        if !notes.is_empty() {
            self.flagged += 1;
        }
        cells.push(Cell::Text(notes.join("; ")));
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn flagged(&self) -> usize {
        self.flagged
    }

    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.name.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Help text listing a table's columns.
pub fn columns_help(columns: &[Column]) -> String {
    let mut all = columns.to_vec();
    all.push(FLAG);
    let width = all.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::from("CSV columns, in order:\n");
    for c in &all {
        s.push_str(&format!("  {:width$}  {}\n", c.name, c.doc));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub id: &'static str,
    pub message: String,
    pub values: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub config: Value,
    pub table: Table,
    pub summary: Map<String, Value>,
    pub findings: Vec<Finding>,
}

/// Any serializable value as JSON with non-finite floats turned into null.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl Document {
    pub fn new<C: Serialize>(config: &C, table: Table) -> Self {
        Self {
            config: to_value(config),
            table,
            summary: Map::new(),
            findings: Vec::new(),
        }
    }

    pub fn summarize<T: Serialize>(&mut self, key: &str, value: T) {
        self.summary.insert(key.to_string(), to_value(&value));
    }

    pub fn finding(&mut self, id: &'static str, message: String, values: Value) {
        self.findings.push(Finding { id, message, values });
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut top = Map::new();
        top.insert("config".into(), self.config.clone());
        top.insert("rows".into(), self.table.json_rows());
        top.insert("summary".into(), Value::Object(self.summary.clone()));
        top.insert("findings".into(), to_value(&self.findings));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).map_err(|e| CliError::Encode(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.table.header()).map_err(|e| CliError::Encode(e.to_string()))?;
        for row in &self.table.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(|e| CliError::Encode(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Encode(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Encode(e.to_string()))
    }

    /// Summary and findings as `#`-prefixed lines, for stderr next to CSV.
    pub fn side_channel(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.summary {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        for f in &self.findings {
            s.push_str(&format!("# finding {}: {}\n", f.id, f.message));
        }
        s
    }

    pub fn write_to(&self, format: crate::config::Format, sink: &mut dyn Write) -> Result<(), CliError> {
        let text = match format {
            crate::config::Format::Csv => self.to_csv()?,
            crate::config::Format::Json => self.to_json()?,
        };
        sink.write_all(text.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COLS: [Column; 2] = [
        Column { name: "u", doc: "separation" },
        Column { name: "w", doc: "root" },
    ];

    #[test]
    fn non_finite_is_blanked_and_flagged() {
        let mut t = Table::new(&COLS);
        t.push(vec![Cell::Num(0.5), Cell::Num(f64::NAN)], None);
        t.push(vec![Cell::Num(1.0), Cell::Num(2.0)], None);
        assert_eq!(t.flagged(), 1);
        let doc = Document::new(&(), t);
        let csv = doc.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "u,w,flag");
        assert_eq!(lines[1], "5.0000000000000000e-1,,non-finite w");
        let json: Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        assert!(json["rows"][0]["w"].is_null());
    }

    #[test]
    fn csv_floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1.3140097247053748, 6.02e23, 5e-324] {
            let s = Cell::Num(v).csv();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_reemits_identically() {
        let mut t = Table::new(&COLS);
        t.push(vec![Cell::Num(0.1), Cell::Num(1.0 / 3.0)], None);
        let mut doc = Document::new(&serde_json::json!({"a": 1e-3}), t);
        doc.summarize("x", 0.7_f64.sqrt());
        let s = doc.to_json().unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        let again = serde_json::to_string_pretty(&back).unwrap() + "\n";
        assert_eq!(s, again);
    }

    #[test]
    fn help_lists_header() {
        let help = columns_help(&COLS);
        let t = Table::new(&COLS);
        let names: Vec<&str> = help.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(names, t.header());
    }
}
