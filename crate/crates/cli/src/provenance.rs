//! Input hashing and the metadata block embedded in every output.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha1::{Digest, Sha1};

use crate::config::RunConfig;

/// SHA-1 of `bytes` as git hashes a blob (`"blob <len>\0"` prefix).
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    format!("{:x}", h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha1: String,
    pub bytes: u64,
}

pub fn hash_input(path: &Path) -> Result<InputFile> {
    let data = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(InputFile {
        path: path.display().to_string(),
        sha1: git_blob_sha1(&data),
        bytes: data.len() as u64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: &'static str,
    pub run_config: RunConfig,
    pub inputs: Vec<InputFile>,
}

impl Provenance {
    pub fn new(command: &'static str, cfg: &RunConfig, inputs: Vec<InputFile>) -> Self {
        Provenance {
            tool: format!("fairsched {}", env!("CARGO_PKG_VERSION")),
            command,
            run_config: cfg.clone(),
            inputs,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }

    /// `#`-prefixed lines placed above a CSV header.
    pub fn csv_preamble(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {} {}", self.tool, self.command).unwrap();
        writeln!(out, "# run_config {}", serde_json::to_string(&self.run_config).unwrap()).unwrap();
        for i in &self.inputs {
            writeln!(out, "# input {} sha1={} bytes={}", i.path, i.sha1, i.bytes).unwrap();
        }
        out
    }
}

/// Writes `contents`, creating parent directories.
pub fn write_output(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(path, text.as_bytes())
}
