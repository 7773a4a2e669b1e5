//! Atomic file writes and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.toml";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes to a temporary sibling, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct OutputRecord {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    seed: u64,
    config_file: &'a str,
    config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    codebook_sha256: Option<String>,
    output: Vec<OutputRecord>,
}

/// Collects named outputs and writes them with a manifest.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Writes every file, the resolved config and the manifest. Returns the
    /// written paths in order.
    pub fn commit(
        self,
        command: &str,
        seed: u64,
        resolved_config: &str,
        codebook_input: Option<&[u8]>,
    ) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))?;
        let mut written = Vec::with_capacity(self.files.len() + 2);
        let mut output = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            write_atomic(&path, bytes)?;
            output.push(OutputRecord {
                file: name.clone(),
                sha256: sha256_hex(bytes),
            });
            written.push(path);
        }
        let cfg_path = self.dir.join(RESOLVED_CONFIG);
        write_atomic(&cfg_path, resolved_config.as_bytes())?;
        written.push(cfg_path);

        let manifest = Manifest {
            tool: "risim",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config_file: RESOLVED_CONFIG,
            config_sha256: sha256_hex(resolved_config.as_bytes()),
            codebook_sha256: codebook_input.map(sha256_hex),
            output,
        };
        let text = toml::to_string(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        let path = self.dir.join(MANIFEST);
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
        Ok(written)
    }
}
