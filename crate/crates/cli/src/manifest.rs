use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

/// Everything that determines a run, plus a digest of every file it wrote.
/// The worker count is deliberately absent: it never changes the output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config_sha256: String,
    pub subcommand: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub n_paths: usize,
    pub epsilon_ladder: Vec<f64>,
    pub kappa_ladder: Vec<f64>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.files.push(FileDigest {
            file,
            sha256: digest_file(path)?,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
