//! JSON Lines sample manifests.
//!
//! One JSON object per line, UTF-8, with exactly these fields:
//! `sample_id`, `depth_obs`, `depth_gt`, `mask_amodal`, `mask_visible`,
//! `visible_ratio`, `bucket`, `provenance`. Raster paths are relative to
//! the manifest's directory. Manifests are written atomically (temp file
//! + rename) and always after the rasters they reference.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_depth, read_mask};
use crate::raster::{DepthMap, Mask};
use crate::sample::{AmodalSample, Bucket};

/// One manifest line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub sample_id: String,
    pub depth_obs: String,
    pub depth_gt: String,
    pub mask_amodal: String,
    pub mask_visible: String,
    pub visible_ratio: f64,
    pub bucket: Bucket,
    pub provenance: String,
}

/// An ordered manifest plus the directory its relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct Manifest {
    records: Vec<ManifestRecord>,
    base_dir: PathBuf,
}

impl Manifest {
    /// Wraps records, enforcing unique sample ids.
    pub fn new(records: Vec<ManifestRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if !seen.insert(r.sample_id.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate sample_id {:?}",
                    r.sample_id
                )));
            }
        }
        Ok(Self {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ManifestRecord = serde_json::from_str(line).map_err(|e| {
                Error::Manifest(format!("{}:{}: {}", path.display(), lineno + 1, e))
            })?;
            records.push(record);
        }
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::new(records, base_dir)
    }

    /// Writes the manifest atomically: serialize to `<path>.tmp`, then
    /// rename over `path`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("jsonl.tmp");
        {
            let file =
                fs::File::create(&tmp).map_err(|e| Error::io(tmp.display().to_string(), e))?;
            let mut out = std::io::BufWriter::new(file);
            for r in &self.records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")
                    .map_err(|e| Error::io(tmp.display().to_string(), e))?;
            }
            out.flush()
                .map_err(|e| Error::io(tmp.display().to_string(), e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn load_depth(&self, relative: &str) -> Result<DepthMap> {
        read_depth(self.resolve(relative))
    }

    pub fn load_mask(&self, relative: &str) -> Result<Mask> {
        read_mask(self.resolve(relative))
    }

    /// Loads every raster of a record and rebuilds the full sample,
    /// re-validating the cross-field invariants.
    pub fn load_sample(&self, record: &ManifestRecord) -> Result<AmodalSample> {
        let obs = self.load_depth(&record.depth_obs)?;
        let gt = self.load_depth(&record.depth_gt)?;
        let amodal = self.load_mask(&record.mask_amodal)?;
        let visible = self.load_mask(&record.mask_visible)?;
        AmodalSample::new(record.sample_id.clone(), obs, gt, amodal, visible)
    }
}
