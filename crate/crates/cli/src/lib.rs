//! Command-line front end: a TOML config in, CSV out.
//!
//! Every command returns a [`Csv`] whose first line is a `# key=value`
//! metadata comment and whose second line is the header. Floats are written
//! with 17 significant digits so that they round-trip.

pub mod commands;
pub mod config;
pub mod validate;

use std::fmt::Write as _;

pub use commands::{execute, Command};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(field: &str, detail: impl std::fmt::Display) -> Self {
        Self::Config(format!("`{field}`: {detail}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
            Self::ValidationFailed(_) => 4,
        }
    }
}

impl From<wetsim::Error> for CliError {
    fn from(e: wetsim::Error) -> Self {
        match e {
            wetsim::Error::Convergence { .. } => Self::Numerical(e.to_string()),
            other => Self::Config(other.to_string()),
        }
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::I(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::S(v)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::F(v) => write!(f, "{v:.16e}"),
            Self::I(v) => write!(f, "{v}"),
            Self::S(s) => f.write_str(s),
        }
    }
}

/// A table with a metadata line.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Csv {
    pub fn new(command: &str, header: &[&str]) -> Self {
        Self {
            meta: vec![
                ("command".into(), command.into()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("#");
        for (k, v) in &self.meta {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
