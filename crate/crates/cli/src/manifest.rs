use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Failure;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a subcommand. `created_at` is the only field
/// that changes between identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub created_at: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: impl Serialize, seed: Option<u64>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            inputs: Vec::new(),
            seed,
            created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }

    pub fn input(mut self, path: &Path, bytes: &[u8]) -> Self {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        self
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        crate::commands::write_json(&dir.join("manifest.json"), self)
    }
}
