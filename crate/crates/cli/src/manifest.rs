use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where a run came from and where its artifacts went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub version: String,
    pub started: DateTime<Utc>,
    pub finished: Option<DateTime<Utc>>,
}

/// Creates `root/<label>-<timestamp>-seed<seed>`, adding a counter suffix if
/// that directory already exists.
pub fn create_run_dir(root: &Path, label: &str, seed: u64, at: DateTime<Utc>) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let stamp = at.format("%Y%m%dT%H%M%S%.6fZ");
    let base = format!("{label}-{stamp}-seed{seed}");
    for n in 0.. {
        let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

impl RunManifest {
    /// Opens a fresh run directory under `root`.
    pub fn start(root: &Path, label: &str, config_path: Option<&Path>, seed: u64) -> Result<Self> {
        let started = Utc::now();
        let output_dir = create_run_dir(root, label, seed, started)?;
        Ok(Self {
            config_path: config_path.map(Path::to_path_buf),
            output_dir,
            seed,
            version: ARTIFACT_VERSION.to_string(),
            started,
            finished: None,
        })
    }

    /// Stamps the end time and writes `manifest.json` plus the resolved
    /// `config.json` into the run directory.
    pub fn finish(&mut self, config: &ExperimentConfig) -> Result<()> {
        self.finished = Some(Utc::now());
        let manifest = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(self.output_dir.join("manifest.json"), manifest)?;
        let echo = serde_json::to_string_pretty(&config.to_json()).expect("config serializes");
        fs::write(self.output_dir.join("config.json"), echo)?;
        Ok(())
    }
}
