use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Resolved parameters, including anything drawn from defaults.
    pub parameters: serde_json::Value,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    /// Arguments that reproduce the run.
    pub command: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, parameters: serde_json::Value) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            command: std::env::args().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    #[cfg(test)]
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).context("invalid manifest")
    }
}

/// Files written by a command. Unless [`Outputs::commit`] is called, every
/// registered file and every directory created along the way is removed
/// on drop.
#[derive(Default)]
pub struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        // innermost first, so removal works bottom-up
        self.dirs.extend(missing);
        Ok(())
    }

    /// Register `path` and make sure its directory exists.
    pub fn file(&mut self, path: &Path) -> Result<PathBuf> {
        if let Some(parent) = path.parent() {
            self.dir(parent)?;
        }
        self.files.push(path.to_path_buf());
        Ok(path.to_path_buf())
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.file(path)?;
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in &self.dirs {
            let _ = fs::remove_dir(d);
        }
    }
}
