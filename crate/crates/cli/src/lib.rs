//! Configuration-driven runs of the conelab estimators and the verification
//! suite behind the `conelab` binary.

pub mod commands;
pub mod config;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

pub use config::{LoadedConfig, Method, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the CSV and JSON-lines layouts written by the commands.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] conelab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    /// 0 success, 1 usage, 2 config invalid, 3 verification FAIL.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io(_) => 1,
            Self::Config(_) | Self::Core(_) => 2,
            Self::VerificationFailed(_) => 3,
        }
    }
}

/// Identifies the tool build and the configuration bytes behind an output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stamp {
    pub config_sha256: String,
    pub command: &'static str,
    /// Effective master seed (after any `--seed` override).
    pub seed: u64,
}

impl Stamp {
    pub fn csv_comment(&self) -> String {
        format!(
            "# conelab {VERSION} schema {SCHEMA_VERSION} command {} config_sha256 {} seed {}",
            self.command, self.config_sha256, self.seed
        )
    }

    /// The stamp fields merged with `fields` into one JSON object (keys sorted).
    pub fn json_line(&self, fields: Value) -> String {
        let mut obj = Map::new();
        obj.insert("tool".into(), "conelab".into());
        obj.insert("version".into(), VERSION.into());
        obj.insert("schema".into(), SCHEMA_VERSION.into());
        obj.insert("command".into(), self.command.into());
        obj.insert("config_sha256".into(), self.config_sha256.clone().into());
        obj.insert("seed".into(), self.seed.into());
        if let Value::Object(m) = fields {
            obj.extend(m);
        }
        Value::Object(obj).to_string()
    }
}

impl LoadedConfig {
    pub fn stamp(&self, command: &'static str) -> Stamp {
        Stamp { config_sha256: self.sha256.clone(), command, seed: self.config.seed }
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub(crate) fn write_lines(path: &Path, lines: &[String]) -> Result<(), CliError> {
    let mut f = create(path)?;
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}
