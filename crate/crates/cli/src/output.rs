//! Output directory bookkeeping.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const MARKER: &str = ".incomplete";
pub const CONFIG_FILE: &str = "config.json";
pub const VERSION_FILE: &str = "VERSION";

/// A run directory. Holds an `.incomplete` marker from creation until
/// [`OutDir::finish`], so interrupted or failed runs are recognizable.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Create the directory and record the resolved config and tool version.
    pub fn create(root: &Path, config: &impl Serialize) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let dir = Self {
            root: root.to_path_buf(),
        };
        dir.write(MARKER, "")?;
        dir.write(CONFIG_FILE, &(serde_json::to_string_pretty(config)? + "\n"))?;
        dir.write(
            VERSION_FILE,
            &format!("gaussnet {}\n", gaussnet_core::VERSION),
        )?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn finish(self) -> Result<()> {
        let marker = self.path(MARKER);
        fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))
    }
}
