use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_seconds: f64,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

pub struct Run {
    command: &'static str,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl Run {
    pub fn start(command: &'static str, config: impl Serialize, seed: Option<u64>) -> Self {
        Run {
            command,
            config: serde_json::to_value(config).expect("configuration serializes"),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Digests every listed file and writes the manifest to `path`.
    pub fn finish(self, path: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config: self.config,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            duration_seconds: self.start.elapsed().as_secs_f64(),
        };
        write_json(path, &manifest)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `dir/stem.suffix` next to `path`, e.g. `out.csv` → `out.manifest.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("a/b/out.csv"), "manifest.json"), Path::new("a/b/out.manifest.json"));
        assert_eq!(sibling(Path::new("model.json"), "epochs.jsonl"), Path::new("model.epochs.jsonl"));
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
