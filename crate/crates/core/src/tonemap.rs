//! Global tone operators, 8-bit quantization and gamma expansion.
//!
//! All operators act on flat slices. A scalar field is its value slice; an
//! RGB image is its interleaved channel slice, so per-channel application
//! with one field-wide maximum falls out naturally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdr_io::{HdrImage, LdrImage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    #[default]
    Log,
    Reinhard,
}

impl std::str::FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Operator::Log),
            "reinhard" => Ok(Operator::Reinhard),
            _ => Err(Error::InvalidParameter(format!(
                "unknown tone operator {s:?} (expected log|reinhard)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TonemapParams {
    pub operator: Operator,
    /// Steepness of the normalized log curve.
    pub log_mu: f64,
    /// Reinhard white point; `None` is an infinite white point.
    pub reinhard_white: Option<f64>,
    /// Exponent of the inverse (expansion) map.
    pub gamma: f64,
    /// Radiance assigned to full scale by the inverse map.
    pub hdr_scale: f64,
}

impl Default for TonemapParams {
    fn default() -> Self {
        Self {
            operator: Operator::Log,
            log_mu: 500.0,
            reinhard_white: None,
            gamma: 2.2,
            hdr_scale: 1.0,
        }
    }
}

impl TonemapParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("tonemap {name} = {v}")))
            }
        };
        positive("mu", self.log_mu)?;
        positive("gamma", self.gamma)?;
        positive("hdr_scale", self.hdr_scale)?;
        if let Some(w) = self.reinhard_white {
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!("tonemap white = {w}")));
            }
        }
        Ok(())
    }
}

fn field_max(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// `log(1 + mu x / x_max) / log(1 + mu)` with `x_max` the field maximum.
/// An all-zero field maps to zeros.
pub fn tonemap_log(values: &[f64], mu: f64) -> Vec<f64> {
    tonemap_log_with_max(values, mu, field_max(values))
}

/// Log curve against an explicit normalization; values above `x_max` clip to 1.
pub fn tonemap_log_with_max(values: &[f64], mu: f64, x_max: f64) -> Vec<f64> {
    if !(x_max > 0.0) {
        return vec![0.0; values.len()];
    }
    let denom = mu.ln_1p();
    values
        .iter()
        .map(|&x| {
            let xn = (x.max(0.0) / x_max).min(1.0);
            (mu * xn).ln_1p() / denom
        })
        .collect()
}

/// Global Reinhard: `L (1 + L / Lw^2) / (1 + L)`, or `L / (1 + L)` without a
/// white point. Values at or above the white point map to 1.
pub fn tonemap_reinhard(values: &[f64], white: Option<f64>) -> Vec<f64> {
    values
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            match white {
                None => l / (1.0 + l),
                Some(w) if l >= w => 1.0,
                Some(w) => (l * (1.0 + l / (w * w)) / (1.0 + l)).min(1.0),
            }
        })
        .collect()
}

pub fn tonemap(values: &[f64], params: &TonemapParams) -> Vec<f64> {
    match params.operator {
        Operator::Log => tonemap_log(values, params.log_mu),
        Operator::Reinhard => tonemap_reinhard(values, params.reinhard_white),
    }
}

/// Round-half-up of `255 y` after clamping to `[0, 1]`.
pub fn quantize8_value(y: f64) -> u8 {
    let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, 1.0) };
    (255.0 * y + 0.5).floor() as u8
}

pub fn quantize8(values: &[f64], width: usize, height: usize, channels: u8) -> Result<LdrImage> {
    LdrImage::new(
        width,
        height,
        channels,
        values.iter().map(|&y| quantize8_value(y)).collect(),
    )
}

/// `hdr_scale * x^gamma` per value, inputs clamped to `[0, 1]`.
pub fn inverse_tonemap_gamma(values: &[f64], params: &TonemapParams) -> Vec<f64> {
    values
        .iter()
        .map(|&x| params.hdr_scale * x.clamp(0.0, 1.0).powf(params.gamma))
        .collect()
}

/// Expands an 8-bit image to linear radiance; gray input becomes `r = g = b`.
pub fn inverse_tonemap_ldr(image: &LdrImage, params: &TonemapParams) -> Result<HdrImage> {
    let lin = inverse_tonemap_gamma(&image.to_unit_f64(), params);
    let pixels = match image.channels() {
        1 => lin
            .iter()
            .map(|&v| {
                let v = v as f32;
                [v, v, v]
            })
            .collect(),
        _ => lin
            .chunks_exact(3)
            .map(|c| [c[0] as f32, c[1] as f32, c[2] as f32])
            .collect(),
    };
    HdrImage::new(image.width(), image.height(), pixels)
}
