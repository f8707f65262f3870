//! JSON Lines dataset manifest and run summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Resolution, Split};
use crate::error::{Error, Result};
use crate::hdr_io::{read_bytes, write_bytes};
use crate::spad::Sampler;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const PARTIAL_SUFFIX: &str = ".partial";
pub const RUN_FILE: &str = "run.json";

/// Paths relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub mono_png: String,
    pub mono_hdr: String,
    pub color_ldr_png: String,
    pub color_hdr: String,
}

impl SampleFiles {
    pub fn all(&self) -> [&str; 4] {
        [
            &self.mono_png,
            &self.mono_hdr,
            &self.color_ldr_png,
            &self.color_hdr,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Source file name within the input directory.
    pub source: String,
    pub resolution: Resolution,
    pub frames_averaged: usize,
    pub exposure_time_s: f64,
    pub flux_scale: f64,
    pub median_flux: f64,
    pub seed: u64,
    pub saturated_fraction: f64,
    pub split: Split,
    pub files: SampleFiles,
    pub sampler: Sampler,
    /// What the mono tone curve was applied to.
    pub tonemap_input: String,
    /// Digest of every setting that affects this sample's outputs.
    pub config_digest: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Manifest(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = read_bytes(path.as_ref())?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Manifest(format!("{} is not UTF-8", path.as_ref().display())))?;
        Self::from_jsonl(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), self.to_jsonl().as_bytes())
    }

    /// Checks id uniqueness and that every referenced file exists under `root`.
    pub fn validate(&self, root: &Path) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate id {}", e.id)));
            }
            for f in e.files.all() {
                if !root.join(f).is_file() {
                    return Err(Error::Manifest(format!("{}: missing file {f}", e.id)));
                }
            }
        }
        Ok(())
    }

    /// Every distinct file referenced, relative to the manifest directory.
    pub fn referenced_files(&self) -> std::collections::BTreeSet<PathBuf> {
        self.entries
            .iter()
            .flat_map(|e| e.files.all().map(PathBuf::from))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSource {
    pub source: String,
    pub reason: String,
}

/// Run-level record written next to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// False when the run aborted; the manifest is then left as `manifest.jsonl.partial`.
    pub complete: bool,
    pub entries: usize,
    pub reused: usize,
    pub skipped: Vec<SkippedSource>,
    pub split: super::SplitRule,
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
