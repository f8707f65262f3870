//! Radiance to photon flux, and exposure selection from scene luminance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdr_io::HdrImage;
use crate::spad::SpadConfig;

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major field of non-negative reals.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Photon flux per pixel, photons per second.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxField {
    pub width: usize,
    pub height: usize,
    pub phi: Vec<f64>,
}

pub fn luminance(image: &HdrImage) -> ScalarField {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    ScalarField {
        width: image.width(),
        height: image.height(),
        values: image
            .pixels()
            .iter()
            .map(|p| wr * p[0] as f64 + wg * p[1] as f64 + wb * p[2] as f64)
            .collect(),
    }
}

/// `phi = scale * gray`.
pub fn flux_from_image(gray: &ScalarField, scale: f64) -> Result<FluxField> {
    if !scale.is_finite() || scale < 0.0 {
        return Err(Error::InvalidParameter(format!("flux scale {scale}")));
    }
    Ok(FluxField {
        width: gray.width,
        height: gray.height,
        phi: gray.values.iter().map(|&g| scale * g.max(0.0)).collect(),
    })
}

/// Operating point the planner aims the median pixel at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureTargets {
    /// `q * phi_med * tau`: position of the median on the saturation curve.
    pub target_x: f64,
    /// Expected detections at the median pixel.
    pub target_count: f64,
}

impl Default for ExposureTargets {
    fn default() -> Self {
        Self {
            target_x: 0.15,
            target_count: 870.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposurePlan {
    /// Seconds.
    pub exposure_time: f64,
    /// Photons per second per unit radiance.
    pub flux_scale: f64,
    /// Flux of the median positive pixel after scaling.
    pub median_flux: f64,
}

/// Lower median (the smaller middle value for even counts) of the positive entries.
pub fn lower_median_positive(values: &[f64]) -> Option<f64> {
    let mut pos: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if pos.is_empty() {
        return None;
    }
    let k = (pos.len() - 1) / 2;
    let (_, m, _) = pos.select_nth_unstable_by(k, f64::total_cmp);
    Some(*m)
}

/// Chooses flux scale and exposure so the median positive pixel sits at
/// `q phi tau = target_x` with `E[N] = target_count`.
///
/// The fill fraction `E[N] / (T / tau)` depends only on `q phi tau`, so the
/// flux scale fixes where the median lands on the soft-saturation curve and
/// the exposure time then fixes its shot-noise level.
pub fn plan_exposure(
    gray: &ScalarField,
    config: &SpadConfig,
    targets: ExposureTargets,
) -> Result<ExposurePlan> {
    let q = config.quantum_efficiency;
    let tau = config.dead_time;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(
            "exposure planning needs a positive dead time".into(),
        ));
    }
    if !(targets.target_x > 0.0 && targets.target_x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target_x {} must be positive",
            targets.target_x
        )));
    }
    if !(targets.target_count > 0.0 && targets.target_count.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target_count {} must be positive",
            targets.target_count
        )));
    }
    let gray_median = lower_median_positive(&gray.values).ok_or(Error::NoPositiveLuminance)?;
    let median_flux = targets.target_x / (q * tau);
    let flux_scale = median_flux / gray_median;
    let exposure_time = targets.target_count * (1.0 + targets.target_x) / (q * median_flux);
    Ok(ExposurePlan {
        exposure_time,
        flux_scale,
        median_flux,
    })
}
