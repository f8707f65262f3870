//! Whole-frame simulation, averaging and inversion.

use rayon::prelude::*;

use super::{sample_count, PixelStreams, SpadConfig};
use crate::error::{Error, Result};
use crate::radiometry::FluxField;

/// Detected photons per pixel, row-major. Integer-valued for a single
/// exposure, fractional after averaging.
#[derive(Clone, Debug, PartialEq)]
pub struct CountFrame {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<f64>,
}

impl CountFrame {
    pub fn new(width: usize, height: usize, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} counts for a {width}x{height} frame",
                counts.len()
            )));
        }
        Ok(Self {
            width,
            height,
            counts,
        })
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Simulates one exposure. Pixel `p` of frame `f` draws from the stream
/// derived from `(config.seed, f, p)`, so the result does not depend on how
/// rows are scheduled across threads.
pub fn simulate_frame(flux: &FluxField, config: &SpadConfig, frame_index: u64) -> CountFrame {
    let streams = PixelStreams::new(config.seed, frame_index);
    let w = flux.width;
    let mut counts = vec![0.0; flux.phi.len()];
    counts
        .par_chunks_mut(w)
        .zip(flux.phi.par_chunks(w))
        .enumerate()
        .for_each(|(y, (out, phi))| {
            for (x, (c, &p)) in out.iter_mut().zip(phi).enumerate() {
                let mut rng = streams.pixel((y * w + x) as u64);
                *c = sample_count(p, config, &mut rng) as f64;
            }
        });
    CountFrame {
        width: flux.width,
        height: flux.height,
        counts,
    }
}

/// Running per-pixel sum of frames.
#[derive(Clone, Debug)]
pub struct FrameAccumulator {
    width: usize,
    height: usize,
    sum: Vec<f64>,
    frames: usize,
}

impl FrameAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            sum: vec![0.0; width * height],
            frames: 0,
        }
    }

    pub fn add(&mut self, frame: &CountFrame) -> Result<()> {
        if frame.dimensions() != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                left: (self.width, self.height),
                right: frame.dimensions(),
            });
        }
        for (s, c) in self.sum.iter_mut().zip(&frame.counts) {
            *s += c;
        }
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Per-pixel mean of the frames added so far.
    pub fn mean(&self) -> Result<CountFrame> {
        if self.frames == 0 {
            return Err(Error::InvalidParameter("no frames to average".into()));
        }
        let k = self.frames as f64;
        CountFrame::new(
            self.width,
            self.height,
            self.sum.iter().map(|s| s / k).collect(),
        )
    }
}

/// Per-pixel arithmetic mean of `K >= 1` equally sized frames.
pub fn average_frames(frames: &[CountFrame]) -> Result<CountFrame> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidParameter("no frames to average".into()))?;
    if frames.len() == 1 {
        return Ok(first.clone());
    }
    let mut acc = FrameAccumulator::new(first.width, first.height);
    for f in frames {
        acc.add(f)?;
    }
    acc.mean()
}

/// Flux estimate of every pixel plus the number of clamped (saturated) pixels.
#[derive(Clone, Debug)]
pub struct InvertedFrame {
    pub flux: FluxField,
    pub saturated: usize,
}

impl InvertedFrame {
    pub fn saturated_fraction(&self) -> f64 {
        self.saturated as f64 / self.flux.phi.len() as f64
    }
}

pub fn invert_frame(frame: &CountFrame, config: &SpadConfig) -> InvertedFrame {
    let mut saturated = 0;
    let phi = frame
        .counts
        .iter()
        .map(|&n| {
            let inv = config.invert_count(n);
            saturated += inv.saturated as usize;
            inv.flux
        })
        .collect();
    InvertedFrame {
        flux: FluxField {
            width: frame.width,
            height: frame.height,
            phi,
        },
        saturated,
    }
}
