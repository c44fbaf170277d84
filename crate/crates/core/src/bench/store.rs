//! On-disk stage cache. Artifacts live under `<output_dir>/<config hash>/`,
//! so a re-run with the same config reuses every finished stage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{PaseError, Result};

#[derive(Debug, Clone)]
pub struct ArtifactStore {
    root: PathBuf,
}

impl ArtifactStore {
    pub fn open(output_dir: impl AsRef<Path>, config_hash: &str) -> Result<Self> {
        let root = output_dir.as_ref().join(config_hash);
        fs::create_dir_all(&root).map_err(|e| PaseError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn put_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| PaseError::io(parent, e))?;
        }
        // Write-then-rename so an interrupted run never leaves a half file.
        let tmp = path.with_extension("partial");
        fs::write(&tmp, serde_json::to_string(value)?).map_err(|e| PaseError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| PaseError::io(&path, e))
    }

    pub fn get_json<T: DeserializeOwned>(&self, name: &str) -> Result<Option<T>> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| PaseError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| PaseError::format(&path, None, e.to_string()))
    }

    pub fn put_text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| PaseError::io(&path, e))
    }
}
