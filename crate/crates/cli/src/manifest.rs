//! Per-run manifest: config snapshot, seeds, input hashes and tool version.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub jobs: usize,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Every regular file under `path` in sorted order; `path` itself if it is a file.
fn files_under(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("reading directory {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    let mut out = Vec::new();
    for e in entries {
        out.extend(files_under(&e)?);
    }
    Ok(out)
}

pub fn hash_inputs(paths: &[&Path]) -> Result<Vec<InputHash>> {
    let mut out = Vec::new();
    for p in paths {
        for f in files_under(p)? {
            out.push(InputHash { path: f.display().to_string(), sha256: sha256_file(&f)? });
        }
    }
    Ok(out)
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, inputs: &[&Path], outputs: Vec<String>) -> Result<Self> {
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: config.seed,
            seeds: config.seeds().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            jobs: config.jobs,
            inputs: hash_inputs(inputs)?,
            outputs,
            config: config.clone(),
        })
    }

    /// Writes `manifest.json` and `config.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        fs::write(dir.join(CONFIG_FILE), self.config.to_toml()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(sha256_file(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn directories_hash_every_file_in_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b"), b"2").unwrap();
        fs::create_dir(dir.path().join("a")).unwrap();
        fs::write(dir.path().join("a").join("x"), b"1").unwrap();
        let h = hash_inputs(&[dir.path()]).unwrap();
        assert_eq!(h.len(), 2);
        assert!(h[0].path.ends_with("x") && h[1].path.ends_with("b"));
    }
}
