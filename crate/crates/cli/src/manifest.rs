//! Run manifests written next to every output as `<out>.manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_error, CliResult};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DISTRIBUTION_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub versions: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> CliResult<Self> {
        let config = serde_json::to_value(config)?;
        let config_hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        let versions = BTreeMap::from([
            ("fulcal".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("model_format".to_string(), MODEL_FORMAT_VERSION.to_string()),
            ("distribution_format".to_string(), DISTRIBUTION_FORMAT_VERSION.to_string()),
            ("manifest_format".to_string(), MANIFEST_FORMAT_VERSION.to_string()),
        ]);
        Ok(Self {
            manifest_version: MANIFEST_FORMAT_VERSION,
            command: command.to_string(),
            config_hash,
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            versions,
        })
    }

    pub fn input(mut self, path: &Path) -> CliResult<Self> {
        self.inputs.push(digest(path)?);
        Ok(self)
    }

    /// Records `out` and writes the manifest beside it.
    pub fn finish(mut self, out: &Path) -> CliResult<()> {
        self.outputs.push(digest(out)?);
        let target = manifest_path(out);
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        fs::write(&target, text).map_err(|e| io_error(&target, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("out/report.json")), PathBuf::from("out/report.json.manifest.json"));
    }

    #[test]
    fn config_hash_tracks_config() {
        let a = RunManifest::new("tune", &serde_json::json!({"beta": 0.5}), None).unwrap();
        let b = RunManifest::new("tune", &serde_json::json!({"beta": 0.5}), None).unwrap();
        let c = RunManifest::new("tune", &serde_json::json!({"beta": 1.0}), None).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
    }
}
