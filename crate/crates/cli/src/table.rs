//! CSV documents with a `#` comment header.

use std::fmt::Write as _;

use hopgame::format::sig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvDoc {
    pub schema: String,
    pub seed: u64,
    pub config: Vec<String>,
    /// Extra `key: value` comment lines written after the config echo.
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new(schema: &str, seed: u64, config: &[String], columns: &[&str]) -> Self {
        Self {
            schema: schema.to_string(),
            seed,
            config: config.to_vec(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push(format!("{key}: {}", value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the {} schema", self.schema);
        self.rows.push(row);
    }

    /// Looks up a note by key.
    pub fn get_note(&self, key: &str) -> Option<&str> {
        let prefix = format!("{key}: ");
        self.notes.iter().find_map(|n| n.strip_prefix(prefix.as_str()))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# hopgame {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "# schema: {} v{SCHEMA_VERSION}", self.schema).unwrap();
        writeln!(out, "# seed: {}", self.seed).unwrap();
        for line in self.config.iter().chain(&self.notes) {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }
}

/// Formats a float cell.
pub fn num(x: f64) -> String {
    sig(x)
}

/// Formats any displayable cell.
pub fn cell(x: impl ToString) -> String {
    x.to_string()
}

/// Parses the data rows of a rendered document, skipping comments.
pub fn parse_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines.next().map(|h| h.split(',').map(str::to_string).collect()).unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}
