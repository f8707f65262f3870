//! Photon statistics of a passive-mode SPAD pixel with non-paralyzable dead time.
//!
//! Detected photons arrive as a Poisson process of rate `q * phi`; after each
//! detection the pixel is blind for `dead_time` seconds. Over an exposure `T`
//! the count has mean `q phi T / (1 + q phi tau)` and variance
//! `q phi T / (1 + q phi tau)^3`.

mod frame;
mod rng;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use frame::{
    average_frames, invert_frame, simulate_frame, CountFrame, FrameAccumulator, InvertedFrame,
};
pub use rng::PixelStreams;
pub use sampler::{
    sample_count, sample_count_event_by_event, sample_count_exact, sample_count_gaussian,
};

/// Dead time used throughout the reference experiments, in seconds.
pub const DEFAULT_DEAD_TIME: f64 = 150e-9;
pub const DEFAULT_QUANTUM_EFFICIENCY: f64 = 0.4;
/// Relative margin below the ceiling used when a count cannot be inverted.
pub const SATURATION_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Renewal-process simulation; exact in distribution.
    Exact,
    /// Normal draw matched to the closed-form mean and variance.
    #[default]
    Gaussian,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Sampler::Exact),
            "gaussian" => Ok(Sampler::Gaussian),
            _ => Err(Error::InvalidParameter(format!(
                "unknown sampler {s:?} (expected exact|gaussian)"
            ))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::Exact => "exact",
            Sampler::Gaussian => "gaussian",
        })
    }
}

/// Detector physics and simulation controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpadConfig {
    /// Probability that a photon reaching a live pixel is detected, in `(0, 1]`.
    pub quantum_efficiency: f64,
    /// Non-paralyzable dead time in seconds.
    pub dead_time: f64,
    /// Exposure time in seconds.
    pub exposure_time: f64,
    pub sampler: Sampler,
    pub seed: u64,
    pub frames_to_average: usize,
}

impl Default for SpadConfig {
    fn default() -> Self {
        Self {
            quantum_efficiency: DEFAULT_QUANTUM_EFFICIENCY,
            dead_time: DEFAULT_DEAD_TIME,
            exposure_time: 1e-3,
            sampler: Sampler::default(),
            seed: 0,
            frames_to_average: 1,
        }
    }
}

impl SpadConfig {
    pub fn validate(&self) -> Result<()> {
        let q = self.quantum_efficiency;
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantum efficiency {q} not in (0, 1]"
            )));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dead time {} must be finite and >= 0",
                self.dead_time
            )));
        }
        if !(self.exposure_time > 0.0 && self.exposure_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exposure time {} must be finite and > 0",
                self.exposure_time
            )));
        }
        if self.frames_to_average == 0 {
            return Err(Error::InvalidParameter(
                "frames to average must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn expected_count(&self, phi: f64) -> f64 {
        expected_count(
            phi,
            self.quantum_efficiency,
            self.exposure_time,
            self.dead_time,
        )
    }

    pub fn count_variance(&self, phi: f64) -> f64 {
        count_variance(
            phi,
            self.quantum_efficiency,
            self.exposure_time,
            self.dead_time,
        )
    }

    pub fn invert_count(&self, n: f64) -> Inversion {
        invert_count(
            n,
            self.quantum_efficiency,
            self.exposure_time,
            self.dead_time,
        )
    }

    /// Largest count a single exposure can register, `floor(T / tau) + 1`.
    pub fn max_count(&self) -> Option<u64> {
        max_count(self.exposure_time, self.dead_time)
    }
}

/// Mean detected count: `q phi T / (1 + q phi tau)`.
pub fn expected_count(phi: f64, q: f64, exposure: f64, dead_time: f64) -> f64 {
    let rate = q * phi;
    rate * exposure / (1.0 + rate * dead_time)
}

/// Count variance: `q phi T / (1 + q phi tau)^3`.
pub fn count_variance(phi: f64, q: f64, exposure: f64, dead_time: f64) -> f64 {
    let rate = q * phi;
    let d = 1.0 + rate * dead_time;
    rate * exposure / (d * d * d)
}

/// Asymptotic mean count as flux grows without bound, `T / tau`.
pub fn saturation_ceiling(exposure: f64, dead_time: f64) -> Result<f64> {
    if dead_time > 0.0 {
        Ok(exposure / dead_time)
    } else {
        Err(Error::NoCeiling)
    }
}

/// Hard upper bound on a single-exposure count; `None` without dead time.
pub fn max_count(exposure: f64, dead_time: f64) -> Option<u64> {
    (dead_time > 0.0).then(|| (exposure / dead_time).floor() as u64 + 1)
}

/// Flux estimate recovered from a (possibly averaged) count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inversion {
    /// Photons per second.
    pub flux: f64,
    /// The count was at or above the ceiling and was clamped before inversion.
    pub saturated: bool,
}

/// Inverts the mean-count relation: `phi = n / (q (T - n tau))`.
///
/// Counts at or above `T / tau` have no finite preimage; they are clamped to
/// `(1 - 1e-6) T / tau` and flagged.
pub fn invert_count(n: f64, q: f64, exposure: f64, dead_time: f64) -> Inversion {
    let n = n.max(0.0);
    let mut saturated = false;
    let n = if dead_time > 0.0 && n >= exposure / dead_time {
        saturated = true;
        (1.0 - SATURATION_EPSILON) * exposure / dead_time
    } else {
        n
    };
    Inversion {
        flux: n / (q * (exposure - n * dead_time)),
        saturated,
    }
}

/// Flux SNR to first order, `sqrt(E[N])`; zero at zero flux.
pub fn snr_flux(phi: f64, q: f64, exposure: f64, dead_time: f64) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    expected_count(phi, q, exposure, dead_time).sqrt()
}
