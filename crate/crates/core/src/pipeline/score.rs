//! Scoring model predictions against the dataset ground truth.

use std::path::Path;

use super::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_set, EvalMode, EvalSample, MetricReport};

/// Ground truth a prediction set is compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    /// `<pred_dir>/<id>.png` against the color LDR ground truth.
    Ldr,
    /// `<pred_dir>/<id>.hdr` against the color HDR ground truth, with log-PSNR.
    Hdr,
}

impl std::str::FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ldr" => Ok(Which::Ldr),
            "hdr" => Ok(Which::Hdr),
            _ => Err(Error::InvalidParameter(format!(
                "unknown ground truth {s:?} (expected ldr|hdr)"
            ))),
        }
    }
}

/// Scores every manifest entry (optionally one split only) whose prediction is
/// named by its id. Missing predictions are listed in the report.
pub fn score_predictions(
    manifest: &DatasetManifest,
    manifest_dir: &Path,
    pred_dir: &Path,
    which: Which,
    split: Option<Split>,
    peak: f64,
    log_mu: f64,
) -> Result<MetricReport> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidParameter(format!("psnr peak {peak}")));
    }
    let samples: Vec<EvalSample> = manifest
        .entries
        .iter()
        .filter(|e| split.map_or(true, |s| e.split == s))
        .map(|e| {
            let (ext, gt) = match which {
                Which::Ldr => ("png", &e.files.color_ldr_png),
                Which::Hdr => ("hdr", &e.files.color_hdr),
            };
            EvalSample {
                id: e.id.clone(),
                prediction: pred_dir.join(format!("{}.{ext}", e.id)),
                ground_truth: manifest_dir.join(gt),
            }
        })
        .collect();
    let mode = match which {
        Which::Ldr => EvalMode::Ldr,
        Which::Hdr => EvalMode::Hdr { log_mu },
    };
    Ok(evaluate_set(&samples, mode, peak))
}
