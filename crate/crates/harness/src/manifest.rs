//! Labeled datasets on disk: one PGM per sample plus a `filename,tilt_deg`
//! manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tactile_aif::image::LabeledSample;

use crate::error::{HarnessError, Result};
use crate::pgm;

pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub filename: String,
    pub tilt_deg: f64,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["filename", "tilt_deg"] {
        return Err(HarnessError::Config(format!(
            "{}: expected header filename,tilt_deg",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

/// Writes `samples` as `sample_NNNN.pgm` files and a manifest into `dir`.
pub fn write_dataset(dir: &Path, samples: &[LabeledSample]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut rows = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let filename = format!("sample_{i:04}.pgm");
        pgm::write(&dir.join(&filename), &s.image)?;
        rows.push(ManifestRow {
            filename,
            tilt_deg: s.tilt_deg,
        });
    }
    write_manifest(&dir.join(MANIFEST_NAME), &rows)
}

/// Reads a dataset written by [`write_dataset`]; every image must match
/// `dims` when given.
pub fn read_dataset(dir: &Path, dims: Option<(usize, usize)>) -> Result<Vec<LabeledSample>> {
    read_manifest(&dir.join(MANIFEST_NAME))?
        .into_iter()
        .map(|row| {
            Ok(LabeledSample {
                image: pgm::read(&dir.join(&row.filename), dims)?,
                tilt_deg: row.tilt_deg,
            })
        })
        .collect()
}
