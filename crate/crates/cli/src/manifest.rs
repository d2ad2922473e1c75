use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything that determines a command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub seed: u64,
    pub out: String,
    pub version: String,
    /// Path to SHA-256 of every file read.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&Path>, seed: u64, out: &Path) -> Self {
        Self {
            command: command.to_string(),
            config: config.map(|p| p.display().to_string()),
            seed,
            out: out.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn write(&self, out: &Path) -> Result<String, CliError> {
        #[derive(Serialize)]
        struct Stamped<'a> {
            hash: String,
            #[serde(flatten)]
            manifest: &'a RunManifest,
        }
        let hash = self.hash();
        let text = serde_json::to_string_pretty(&Stamped { hash: hash.clone(), manifest: self })
            .expect("manifest serializes");
        write_file(&out.join("manifest.json"), text.as_bytes())?;
        Ok(hash)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// A text output whose first line cites the manifest.
pub fn write_cited(path: &Path, hash: &str, body: &[u8]) -> Result<(), CliError> {
    let mut bytes = format!("# manifest {hash}\n").into_bytes();
    bytes.extend_from_slice(body);
    write_file(path, &bytes)
}

/// A JSON output with the manifest hash next to the payload.
pub fn write_json<T: Serialize>(path: &Path, hash: &str, key: &str, value: &T) -> Result<(), CliError> {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), hash.into());
    map.insert(key.into(), serde_json::to_value(value).map_err(|e| CliError::usage(e.to_string()))?);
    let text = serde_json::to_string_pretty(&map).expect("value serializes");
    write_file(path, text.as_bytes())
}
