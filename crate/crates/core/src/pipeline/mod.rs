//! Dataset generation, export and scoring.

mod config;
mod export;
mod generate;
mod manifest;
mod score;
mod split;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radiometry::ExposureTargets;
use crate::spad::SpadConfig;
use crate::tonemap::TonemapParams;

pub use config::ConfigFile;
pub use export::{export_for_model, ExportSummary, Stage};
pub use generate::{generate_dataset, simulate_single, DatasetRun, TONEMAP_INPUT};
pub use manifest::{
    DatasetManifest, ManifestEntry, RunSummary, SampleFiles, SkippedSource, MANIFEST_FILE,
    PARTIAL_SUFFIX, RUN_FILE,
};
pub use score::{score_predictions, Which};
pub use split::{stable_hash, Split, SplitRule};

/// Output size in pixels, written `WxH`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl Resolution {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("resolution {s:?} (expected WxH)"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        let height: usize = h.trim().parse().map_err(|_| bad())?;
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Self { width, height })
    }
}

impl TryFrom<String> for Resolution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Resolution> for String {
    fn from(r: Resolution) -> String {
        r.to_string()
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

pub const DEFAULT_RESOLUTIONS: [Resolution; 2] =
    [Resolution::new(1024, 512), Resolution::new(2048, 1024)];
pub const DEFAULT_FRAME_COUNTS: [usize; 2] = [1, 4];

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub resolutions: Vec<Resolution>,
    pub frame_counts: Vec<usize>,
    pub split: SplitRule,
    /// Exposure time is replaced per image by the exposure plan.
    pub spad: SpadConfig,
    pub tonemap: TonemapParams,
    pub exposure: ExposureTargets,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("."),
            output_dir: PathBuf::from("out"),
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            frame_counts: DEFAULT_FRAME_COUNTS.to_vec(),
            split: SplitRule::default(),
            spad: SpadConfig::default(),
            tonemap: TonemapParams::default(),
            exposure: ExposureTargets::default(),
            threads: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::InvalidParameter("no output resolutions".into()));
        }
        if self.frame_counts.is_empty() || self.frame_counts.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "frame counts {:?} must be non-empty and >= 1",
                self.frame_counts
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        self.split.validate()?;
        self.spad.validate()?;
        self.tonemap.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_parsing() {
        assert_eq!(
            "1024x512".parse::<Resolution>().unwrap(),
            Resolution::new(1024, 512)
        );
        assert_eq!("7X3".parse::<Resolution>().unwrap(), Resolution::new(7, 3));
        for bad in ["1024", "0x5", "ax5", "5x", ""] {
            assert!(bad.parse::<Resolution>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&Resolution::new(2048, 1024)).unwrap();
        assert_eq!(json, "\"2048x1024\"");
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig {
            frame_counts: vec![1, 0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
