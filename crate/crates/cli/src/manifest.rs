//! Run manifests: everything needed to bit-reproduce a CLI run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// FNV-1a 64-bit checksum of a byte stream.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

pub fn checksum_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.to_path_buf(), e))?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileStamp {
    pub path: PathBuf,
    pub fnv1a64: String,
}

/// Written next to every command's primary output. Re-running `command`
/// with the recorded inputs must reproduce the recorded output checksums.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub command: Vec<String>,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<FileStamp>,
    pub outputs: Vec<FileStamp>,
}

impl RunManifest {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        Self {
            artifact: format!("zvl {}", env!("CARGO_PKG_VERSION")),
            command,
            seed,
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn config_entry(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn add_input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(FileStamp {
            path: path.to_path_buf(),
            fnv1a64: checksum_file(path)?,
        });
        Ok(self)
    }

    pub fn add_output(&mut self, path: &Path) -> Result<&mut Self> {
        self.outputs.push(FileStamp {
            path: path.to_path_buf(),
            fnv1a64: checksum_file(path)?,
        });
        Ok(self)
    }

    /// Writes `<primary_output>.manifest.json`.
    pub fn write_next_to(&self, primary_output: &Path) -> Result<PathBuf> {
        let mut name = primary_output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::file(path.clone(), format!("manifest encoding: {}", e)))?;
        fs::write(&path, json).map_err(|e| CliError::io(path.clone(), e))?;
        Ok(path)
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.to_path_buf(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::file(path.to_path_buf(), format!("manifest decoding: {}", e)))
}
