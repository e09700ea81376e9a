//! Run manifests: everything needed to replay a command and check that
//! its outputs come back byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{format, Error, Result};
use crate::pipeline::ExtractorKind;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileDigest {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<ExtractorKind>,
    /// The command's arguments with paths replaced by the digested files.
    #[serde(default)]
    pub args: toml::Table,
    #[serde(default)]
    pub counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(default)]
    pub inputs: Vec<FileDigest>,
    #[serde(default)]
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            format_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seeds: Vec::new(),
            extractor: None,
            args: toml::Table::new(),
            counts: BTreeMap::new(),
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_config(mut self, cfg: &RunConfig) -> Self {
        self.seeds = cfg.seeds();
        self.config = Some(cfg.clone());
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.format_version != MANIFEST_VERSION {
            return format(format!("unsupported manifest version {}", m.format_version));
        }
        for d in m.inputs.iter().chain(&m.outputs) {
            if d.sha256.len() != 64 || hex::decode(&d.sha256).is_err() {
                return format(format!("digest of {} is not a SHA-256 hex string", d.path));
            }
        }
        if let Some(cfg) = &m.config {
            cfg.validate()?;
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Streams `path` through SHA-256; `label` is what the manifest records.
pub fn digest_file(path: &Path, label: &str) -> Result<FileDigest> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok(FileDigest {
        path: label.to_string(),
        bytes: total,
        sha256: hex::encode(hasher.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_answer() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default_channels(2, 5);
        cfg.adc.full_scale = Some(14.8);
        let mut m = RunManifest::new("simulate").with_config(&cfg);
        m.extractor = Some(ExtractorKind::TwoSource);
        m.args.insert("samples".into(), toml::Value::Integer(10));
        m.counts.insert("samples".into(), 20);
        m.outputs.push(FileDigest {
            path: "ch1.codes".into(),
            bytes: 52,
            sha256: sha256_hex(b""),
        });
        let text = m.to_toml().unwrap();
        assert_eq!(RunManifest::parse(&text).unwrap(), m);
        assert_eq!(m.seeds, vec![5, 6]);
    }

    #[test]
    fn rejects_bad_digests_and_versions() {
        let mut m = RunManifest::new("test");
        m.outputs.push(FileDigest {
            path: "x".into(),
            bytes: 0,
            sha256: "zz".into(),
        });
        assert!(RunManifest::parse(&m.to_toml().unwrap()).is_err());
        let mut v = RunManifest::new("test");
        v.format_version = 9;
        assert!(RunManifest::parse(&v.to_toml().unwrap()).is_err());
    }
}
