//! Run manifest: what an invocation produced and under which configuration.
//!
//! Two runs are reproductions of each other when their manifests agree on
//! `config_hash`, `root_seed`, and every file digest; `created_utc` and the
//! stage timings are expected to differ.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    /// Subcommand that produced this manifest.
    pub command: String,
    pub config_hash: String,
    pub root_seed: u64,
    /// Wall-clock creation time; excluded from reproducibility comparisons.
    pub created_utc: String,
    /// Stage name → wall seconds; excluded from reproducibility comparisons.
    pub stages: BTreeMap<String, f64>,
    /// Output file name → size and digest.
    pub files: BTreeMap<String, FileEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: &str, root_seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            root_seed,
            created_utc: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            stages: BTreeMap::new(),
            files: BTreeMap::new(),
        }
    }

    /// Records a file already written to `dir`, hashing its bytes.
    pub fn record_file(&mut self, dir: &Path, name: &str) -> CliResult<()> {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("hex");
        }
        self.files.insert(
            name.to_string(),
            FileEntry {
                bytes: bytes.len() as u64,
                sha256: hex,
            },
        );
        Ok(())
    }

    pub fn record_stage(&mut self, name: &str, started: Instant) {
        self.stages
            .insert(name.to_string(), started.elapsed().as_secs_f64());
    }

    /// Writes the manifest itself into `dir`.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self)
            .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| CliError::FileFormat {
            path,
            message: e.to_string(),
        })
    }

    /// True when the two manifests describe byte-identical outputs from the
    /// same configuration and seed.
    pub fn reproduces(&self, other: &RunManifest) -> bool {
        self.config_hash == other.config_hash
            && self.root_seed == other.root_seed
            && self.files == other.files
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_reproduction() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x,y\n1,2\n").unwrap();

        let mut m1 = RunManifest::new("generate", "deadbeef", 42);
        m1.record_file(dir.path(), "a.csv").unwrap();
        m1.record_stage("weather", Instant::now());
        m1.write(dir.path()).unwrap();

        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back.files["a.csv"].bytes, 8);
        assert_eq!(back.files, m1.files);
        assert!(back.reproduces(&m1));

        // Same outputs, different timings → still a reproduction.
        let mut m2 = RunManifest::new("generate", "deadbeef", 42);
        m2.record_file(dir.path(), "a.csv").unwrap();
        assert!(m2.reproduces(&m1));

        // Different content → not a reproduction.
        std::fs::write(dir.path().join("a.csv"), "x,y\n1,3\n").unwrap();
        let mut m3 = RunManifest::new("generate", "deadbeef", 42);
        m3.record_file(dir.path(), "a.csv").unwrap();
        assert!(!m3.reproduces(&m1));
    }

    #[test]
    fn digests_are_stable_hex() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.txt"), "abc").unwrap();
        let mut m = RunManifest::new("estimate", "h", 1);
        m.record_file(dir.path(), "f.txt").unwrap();
        // SHA-256 of "abc" is a fixed published value.
        assert_eq!(
            m.files["f.txt"].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
