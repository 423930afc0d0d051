//! Output files. Every file starts with the tool version, the config hash and
//! the seed; nothing time-dependent is written, so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const TOOL: &str = concat!("unishift ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Header {
    pub fn new(config_bytes: &[u8], seed: u64) -> Self {
        Header { tool: TOOL.to_string(), config_sha256: sha256_hex(config_bytes), seed }
    }

    pub fn csv_line(&self) -> String {
        format!("# {} config_sha256={} seed={}", self.tool, self.config_sha256, self.seed)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_string<T: Serialize>(header: &Header, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Wrapped { header, body })?;
    s.push('\n');
    Ok(s)
}

/// Writes `header` + `body` as JSON; `body` must serialize to an object.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, header: &Header, body: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, json_string(header, body)?)?;
    Ok(path)
}

/// Header comment line, column row, then one line per record.
pub fn write_csv(dir: &Path, name: &str, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut s = header.csv_line();
    s.push('\n');
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, s)?;
    Ok(path)
}

/// Float cell with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
