//! Run directories: `<output_dir>/<kind>-<hash prefix>/` holding the config
//! snapshot, its hash, CSV results and a timing note. Wall-clock numbers only
//! ever go to `timing.txt` so that every CSV is a pure function of the
//! config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const SNAPSHOT_NAME: &str = "config.snapshot";
pub const HASH_NAME: &str = "config.sha256";
pub const RESULTS_NAME: &str = "results.csv";
pub const TIMING_NAME: &str = "timing.txt";

#[derive(Debug)]
pub struct RunDir {
    pub path: PathBuf,
    pub config_hash: String,
    timing: String,
}

impl RunDir {
    pub fn create(cfg: &ExperimentConfig) -> Result<Self> {
        let config_hash = cfg.hash()?;
        let path = cfg
            .output_dir
            .join(format!("{}-{}", cfg.kind.name(), &config_hash[..12]));
        std::fs::create_dir_all(&path).map_err(|e| HarnessError::io(&path, e))?;
        let run = RunDir {
            path,
            config_hash,
            timing: String::new(),
        };
        run.write_text(SNAPSHOT_NAME, &cfg.to_toml()?)?;
        run.write_text(HASH_NAME, &format!("{}\n", run.config_hash))?;
        Ok(run)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn subdir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.path.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
        Ok(dir)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let p = self.file(name);
        std::fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))
    }

    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        write_csv(&self.file(name), rows)
    }

    pub fn note_timing(&mut self, label: &str, seconds: f64) {
        let _ = writeln!(self.timing, "{label}\t{seconds:.3} s");
    }

    pub fn finish(&self) -> Result<()> {
        self.write_text(TIMING_NAME, &self.timing)
    }
}

/// Header comes from the row type's field names, so it is fixed per type.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
