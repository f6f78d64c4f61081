//! CSV emission and parsing for harness artifacts.
//!
//! Format contract: `#`-prefixed comment lines first (provenance, footer
//! key=value pairs), one header row, then numeric rows. Floats print via
//! the shortest round-trip form and parse back bit-identically, including
//! NaN cells for columns that do not apply to a scenario. This is what
//! makes byte-identical reproduction across worker counts checkable.

use std::io::{BufRead, Write};

use crate::error::SkgError;

/// Provenance attached to every artifact: config hash plus master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: u64,
    pub seed: u64,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!("# config_hash={:016x} seed={}", self.config_hash, self.seed)
    }
}

/// Render one float cell. `{}` on f64 is the shortest string that parses
/// back to the same bits, and prints NaN/inf as literals `parse` accepts.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

/// Write comments, a header and rows of float cells.
pub fn write_table<W: Write>(
    out: &mut W,
    provenance: Provenance,
    extra_comments: &[String],
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<(), SkgError> {
    writeln!(out, "{}", provenance.comment())?;
    for line in extra_comments {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&cell(*v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// A parsed artifact. Comments keep their text without the `# ` prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    /// Column index by exact header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// All values of a named column.
    pub fn column_values(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column(name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Look up `key=value` inside any comment line and parse the value.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        let needle = format!("{key}=");
        for comment in &self.comments {
            for token in comment.split_whitespace() {
                if let Some(rest) = token.strip_prefix(&needle) {
                    return Some(rest);
                }
            }
        }
        None
    }
}

/// Parse a table written by [`write_table`].
pub fn read_table<R: BufRead>(input: R, path: &str) -> Result<CsvTable, SkgError> {
    let parse_err = |message: String| SkgError::Parse { path: path.to_string(), message };
    let mut comments = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_some() {
                return Err(parse_err(format!("line {}: comment after header", lineno + 1)));
            }
            comments.push(rest.trim_start().to_string());
            continue;
        }
        match &header {
            None => header = Some(line.split(',').map(str::to_string).collect()),
            Some(cols) => {
                let mut row = Vec::with_capacity(cols.len());
                for (c, field) in line.split(',').enumerate() {
                    let v: f64 = field.parse().map_err(|_| {
                        parse_err(format!(
                            "line {}: column {} value {field:?} is not a float",
                            lineno + 1,
                            c + 1
                        ))
                    })?;
                    row.push(v);
                }
                if row.len() != cols.len() {
                    return Err(parse_err(format!(
                        "line {}: expected {} fields, found {}",
                        lineno + 1,
                        cols.len(),
                        row.len()
                    )));
                }
                rows.push(row);
            }
        }
    }
    let header = header.ok_or_else(|| parse_err("no header row".into()))?;
    Ok(CsvTable { comments, header, rows })
}
