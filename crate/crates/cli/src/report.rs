//! Command results as tables and key/value summaries, rendered either as
//! fixed-width text or as one JSON object per line.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    /// Printed with 12 decimals in tables.
    Fixed(f64),
    /// Printed in scientific notation in tables.
    Sci(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Fixed(v) => format!("{v:.12}"),
            Cell::Sci(v) => format!("{v:.3e}"),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => if *b { "yes" } else { "no" }.into(),
        }
    }

    fn json(&self) -> Value {
        let float = |v: f64| {
            if v.is_finite() {
                json!(v)
            } else {
                json!(v.to_string())
            }
        };
        match self {
            Cell::Int(v) => json!(v),
            Cell::Fixed(v) | Cell::Sci(v) => float(*v),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Table(Table),
    Summary(String, Vec<(String, Cell)>),
}

/// The full output of one command plus its exit code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    blocks: Vec<Block>,
    pub exit_code: u8,
}

impl Report {
    pub fn table(&mut self, table: Table) {
        self.blocks.push(Block::Table(table));
    }

    pub fn summary(&mut self, name: &str, entries: Vec<(&str, Cell)>) {
        self.blocks.push(Block::Summary(
            name.into(),
            entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        ));
    }

    /// Raises the exit code (failures never get downgraded).
    pub fn fail(&mut self, code: u8) {
        self.exit_code = self.exit_code.max(code);
    }

    pub fn render(&self, format: Format, header: &Header) -> String {
        match format {
            Format::Table => self.render_table(header),
            Format::Json => self.render_json(header),
        }
    }

    fn render_table(&self, header: &Header) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# fy {} {}", header.version, header.command);
        let _ = writeln!(out, "# config: {}", header.config);
        for block in &self.blocks {
            out.push('\n');
            match block {
                Block::Table(t) => {
                    let _ = writeln!(out, "[{}]", t.name);
                    let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
                    let widths: Vec<usize> = (0..t.columns.len())
                        .map(|j| cells.iter().map(|r| r[j].len()).fold(t.columns[j].len(), usize::max))
                        .collect();
                    let line = |items: &[String]| {
                        items
                            .iter()
                            .zip(&widths)
                            .map(|(s, w)| format!("{s:>w$}"))
                            .collect::<Vec<_>>()
                            .join("  ")
                    };
                    let _ = writeln!(out, "{}", line(&t.columns));
                    for r in &cells {
                        let _ = writeln!(out, "{}", line(r));
                    }
                }
                Block::Summary(name, entries) => {
                    let _ = writeln!(out, "[{name}]");
                    for (k, v) in entries {
                        let _ = writeln!(out, "{k}: {}", v.text());
                    }
                }
            }
        }
        out
    }

    fn render_json(&self, header: &Header) -> String {
        let mut out = String::new();
        let head = json!({
            "record": "header",
            "version": header.version,
            "command": header.command,
            "config": header.config_value,
        });
        let _ = writeln!(out, "{head}");
        for block in &self.blocks {
            match block {
                Block::Table(t) => {
                    for row in &t.rows {
                        let mut obj = Map::new();
                        obj.insert("record".into(), json!(t.name));
                        for (c, v) in t.columns.iter().zip(row) {
                            obj.insert(c.clone(), v.json());
                        }
                        let _ = writeln!(out, "{}", Value::Object(obj));
                    }
                }
                Block::Summary(name, entries) => {
                    let mut obj = Map::new();
                    obj.insert("record".into(), json!(name));
                    for (k, v) in entries {
                        obj.insert(k.clone(), v.json());
                    }
                    let _ = writeln!(out, "{}", Value::Object(obj));
                }
            }
        }
        let _ = writeln!(out, "{}", json!({"record": "exit", "code": self.exit_code}));
        out
    }
}

/// What every output starts with: toolkit version, command line summary and
/// the fully resolved configuration.
#[derive(Debug, Clone)]
pub struct Header {
    pub version: &'static str,
    pub command: String,
    /// One-line JSON of the resolved config.
    pub config: String,
    pub config_value: Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        Header {
            version: "0.0.0",
            command: "test".into(),
            config: "{}".into(),
            config_value: json!({}),
        }
    }

    #[test]
    fn table_columns_align() {
        let mut r = Report::default();
        let mut t = Table::new("levels", &["k", "energy"]);
        t.push(vec![0usize.into(), Cell::Fixed(-1.5)]);
        t.push(vec![10usize.into(), Cell::Fixed(2.0)]);
        r.table(t);
        let text = r.render(Format::Table, &header());
        assert!(text.contains(" k           energy\n"), "{text}");
        assert!(text.contains(" 0  -1.500000000000\n"));
        assert!(text.contains("10   2.000000000000\n"));
    }

    #[test]
    fn json_lines_parse() {
        let mut r = Report::default();
        r.summary("result", vec![("z", Cell::Sci(f64::NAN)), ("ok", true.into())]);
        r.fail(3);
        r.fail(1);
        let text = r.render(Format::Json, &header());
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["record"], "header");
        assert_eq!(lines[1]["z"], "NaN");
        assert_eq!(lines[2]["code"], 3);
    }
}
