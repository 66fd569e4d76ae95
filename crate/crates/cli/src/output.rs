//! File writers. Every file starts with the command name and the resolved
//! config; CSV headers are `#` comment lines, JSON files nest the config.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub struct Output {
    dir: PathBuf,
    command: String,
    config: Value,
    written: Vec<PathBuf>,
}

/// A CSV cell.
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
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

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Shortest round-trip text; exponent form for very small or large magnitudes.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".to_string()
    } else if a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn new(dir: &Path, command: &str, config: &impl Serialize) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self, notes: &[String]) -> String {
        let mut out = format!(
            "# cos2gate {} {}\n",
            self.command,
            env!("CARGO_PKG_VERSION")
        );
        out += &format!("# config: {}\n", self.config);
        for n in notes {
            out += &format!("# {n}\n");
        }
        out
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    /// RFC-4180 CSV with LF line endings after the comment header.
    pub fn csv(
        &mut self,
        name: &str,
        notes: &[String],
        columns: &[String],
        rows: Vec<Vec<Cell>>,
    ) -> Result<(), CliError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(self.header(notes).into_bytes());
        let to_err = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
        writer.write_record(columns).map_err(to_err)?;
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            writer
                .write_record(row.iter().map(Cell::render))
                .map_err(to_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    /// Row-major dense grid: the column axis is the header row, the row
    /// axis the first column.
    pub fn grid(
        &mut self,
        name: &str,
        notes: &[String],
        axes: (&str, &str),
        row_axis: &[f64],
        col_axis: &[f64],
        values: &[Vec<f64>],
    ) -> Result<(), CliError> {
        let mut columns = vec![format!("{}\\{}", axes.0, axes.1)];
        columns.extend(col_axis.iter().map(|v| number(*v)));
        let rows = row_axis
            .iter()
            .zip(values)
            .map(|(r, vals)| {
                std::iter::once(Cell::Num(*r))
                    .chain(vals.iter().map(|v| Cell::Num(*v)))
                    .collect()
            })
            .collect();
        self.csv(name, notes, &columns, rows)
    }

    /// Free-form text after the `#` header block.
    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = self.header(&[]) + body;
        self.write(name, text.as_bytes())
    }

    pub fn json(&mut self, name: &str, result: &impl Serialize) -> Result<(), CliError> {
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("result serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}
