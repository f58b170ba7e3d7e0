use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

/// Record written next to every output file. Keys serialize in sorted order and nothing
/// time-dependent is stored, so the manifest of a deterministic run is itself reproducible.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved arguments; `replay` feeds them back to the same command.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// Output path to lowercase hex SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub passed: bool,
    /// Command-specific results (fits, flags, ladders).
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Canonical JSON: object keys sorted at every depth, two-space indent, trailing newline.
pub fn to_sorted_json<S: Serialize>(value: &S) -> Result<String, Failure> {
    // serde_json's default map is a BTreeMap, so a round-trip through Value sorts keys.
    let v = serde_json::to_value(value).map_err(|e| Failure::Io(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Failure::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_output(path: &Path, bytes: &[u8]) -> Result<String, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(bytes))
}

impl RunManifest {
    pub fn write(&self, out: &Path) -> Result<PathBuf, Failure> {
        let path = manifest_path(out);
        write_output(&path, to_sorted_json(self)?.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: not a run manifest: {e}", path.display())))
    }
}
