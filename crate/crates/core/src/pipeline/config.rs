//! TOML configuration file. Every section mirrors a group of CLI flags;
//! values here override defaults and are in turn overridden by flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{PipelineConfig, Resolution, SplitRule};
use crate::error::{Error, Result};
use crate::spad::Sampler;
use crate::tonemap::Operator;

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub spad: SpadSection,
    #[serde(default)]
    pub exposure: ExposureSection,
    #[serde(default)]
    pub tonemap: TonemapSection,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub resolutions: Option<Vec<Resolution>>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub test_fraction: Option<f64>,
    pub test_count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FrameCounts {
    One(usize),
    Many(Vec<usize>),
}

impl FrameCounts {
    fn into_vec(self) -> Vec<usize> {
        match self {
            FrameCounts::One(k) => vec![k],
            FrameCounts::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpadSection {
    pub q: Option<f64>,
    pub dead_time_ns: Option<f64>,
    pub sampler: Option<Sampler>,
    pub seed: Option<u64>,
    pub frames: Option<FrameCounts>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureSection {
    pub target_x: Option<f64>,
    pub target_count: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TonemapSection {
    pub operator: Option<Operator>,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub hdr_scale: Option<f64>,
    pub reinhard_white: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = crate::hdr_io::read_bytes(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Overlays the values present in the file onto `config`.
    pub fn apply(self, config: &mut PipelineConfig) -> Result<()> {
        let p = self.pipeline;
        if let Some(v) = p.input_dir {
            config.input_dir = v;
        }
        if let Some(v) = p.output_dir {
            config.output_dir = v;
        }
        if let Some(v) = p.resolutions {
            config.resolutions = v;
        }
        if p.threads.is_some() {
            config.threads = p.threads;
        }

        match (self.split.test_fraction, self.split.test_count) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "[split] takes test_fraction or test_count, not both".into(),
                ))
            }
            (Some(f), None) => config.split = SplitRule::TestFraction(f),
            (None, Some(n)) => config.split = SplitRule::TestCount(n),
            (None, None) => {}
        }

        let s = self.spad;
        if let Some(v) = s.q {
            config.spad.quantum_efficiency = v;
        }
        if let Some(v) = s.dead_time_ns {
            config.spad.dead_time = v * 1e-9;
        }
        if let Some(v) = s.sampler {
            config.spad.sampler = v;
        }
        if let Some(v) = s.seed {
            config.spad.seed = v;
        }
        if let Some(v) = s.frames {
            config.frame_counts = v.into_vec();
        }

        if let Some(v) = self.exposure.target_x {
            config.exposure.target_x = v;
        }
        if let Some(v) = self.exposure.target_count {
            config.exposure.target_count = v;
        }

        let t = self.tonemap;
        if let Some(v) = t.operator {
            config.tonemap.operator = v;
        }
        if let Some(v) = t.mu {
            config.tonemap.log_mu = v;
        }
        if let Some(v) = t.gamma {
            config.tonemap.gamma = v;
        }
        if let Some(v) = t.hdr_scale {
            config.tonemap.hdr_scale = v;
        }
        if t.reinhard_white.is_some() {
            config.tonemap.reinhard_white = t.reinhard_white;
        }
        Ok(())
    }
}
