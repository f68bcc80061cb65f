//! Reading and writing the tool's files.

use std::fs;
use std::io::Write;
use std::path::Path;

use polarq::{CodeSpecQ, JointChannel};

use crate::error::CliError;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes to `path`, or to stdout when it is `None`.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

pub fn read_channel(path: &Path) -> Result<JointChannel, CliError> {
    read_text(path)?
        .parse()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn read_spec(path: &Path) -> Result<CodeSpecQ, CliError> {
    read_text(path)?
        .parse()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// One base-10 integer per line; blank lines are skipped.
pub fn parse_values<V: std::str::FromStr>(text: &str, path: &Path) -> Result<Vec<V>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| {
                CliError::Parse(format!(
                    "{}:{}: bad value {:?}",
                    path.display(),
                    i + 1,
                    l.trim()
                ))
            })
        })
        .collect()
}

pub fn format_values<V: std::fmt::Display>(values: &[V]) -> String {
    let mut out = String::with_capacity(values.len() * 2);
    for v in values {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// CSV float with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus rows, comma separated.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}
