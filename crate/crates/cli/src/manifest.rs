//! Run manifests: the config echo plus a content hash that every artifact of
//! the run carries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// SHA-256 of `blob <len>\0<bytes>`, hex encoded.
pub fn git_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

/// The 32 raw bytes of a hex hash; zeros if it does not parse.
pub fn hash_bytes(hash: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    if hash.len() == 64 {
        for (i, o) in out.iter_mut().enumerate() {
            *o = u8::from_str_radix(&hash[2 * i..2 * i + 2], 16).unwrap_or(0);
        }
    }
    out
}

pub fn hash_hex(bytes: &[u8; 32]) -> String {
    hex(bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub hash: String,
    pub tool_version: String,
    /// Canonical TOML echo of the configuration that produced the run.
    pub config: String,
    /// Content hashes of input files, by role.
    pub inputs: BTreeMap<String, String>,
    /// Manifest hash of the run this one was derived from.
    pub source: Option<String>,
    /// Hash of the initial condition, shared by runs that start from the same data.
    pub initial: Option<String>,
}

impl Manifest {
    pub fn new(
        kind: &str,
        config: String,
        inputs: BTreeMap<String, String>,
        source: Option<String>,
        initial: Option<String>,
    ) -> Self {
        let mut text = format!("kind {kind}\n{config}\n");
        for (k, v) in &inputs {
            text.push_str(&format!("input {k} {v}\n"));
        }
        if let Some(s) = &source {
            text.push_str(&format!("source {s}\n"));
        }
        if let Some(s) = &initial {
            text.push_str(&format!("initial {s}\n"));
        }
        Manifest {
            kind: kind.to_string(),
            hash: git_hash(text.as_bytes()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            source,
            initial,
        }
    }

    pub fn bytes(&self) -> [u8; 32] {
        hash_bytes(&self.hash)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        crate::commands::write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let p = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn git_style_blob_hash() {
        // sha256 of "blob 0\0"
        assert_eq!(git_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
        let h = git_hash(b"abc");
        assert_eq!(hash_hex(&hash_bytes(&h)), h);
    }
}
