//! Machine-readable run manifests: the exact configuration, input file
//! digests, and output artifact list of each invocation, so every numeric
//! cell in the reports can be re-derived from the manifest plus inputs.
//! No timestamps: identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::run::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, Value>,
    /// Input path -> sha256 of its bytes (directories digest their sorted
    /// file digests).
    pub inputs: BTreeMap<String, String>,
    /// Artifacts written, relative to the output directory.
    pub outputs: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_path(path: &Path) -> Result<String, CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::Internal(format!("reading {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        let mut hasher = Sha256::new();
        for entry in entries {
            hasher.update(entry.file_name().unwrap_or_default().as_encoded_bytes());
            let bytes = fs::read(&entry)
                .map_err(|e| CliError::Internal(format!("reading {}: {e}", entry.display())))?;
            hasher.update(Sha256::digest(&bytes));
        }
        Ok(hex(&hasher.finalize()))
    } else {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Internal(format!("reading {}: {e}", path.display())))?;
        Ok(hex(&Sha256::digest(&bytes)))
    }
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs
            .insert(path.display().to_string(), digest_path(path)?);
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let name = format!("{}.manifest.json", self.command);
        let path = out_dir.join(&name);
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("serializing manifest: {e}")))?;
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        Ok(path)
    }
}
