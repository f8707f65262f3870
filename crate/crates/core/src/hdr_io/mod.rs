//! Image containers and file I/O.
//!
//! [`HdrImage`] holds linear radiance as `f32` RGB triples; mono content is
//! stored with `r == g == b`. [`LdrImage`] holds 8-bit gray or RGB samples
//! destined for PNG files.

mod ldr;
mod resample;
mod rgbe;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use ldr::{decode_png, encode_png, read_ldr, write_ldr};
pub use resample::downsample;
pub use rgbe::{
    read_hdr_file, read_radiance_hdr, read_radiance_header, write_hdr_file, write_radiance_hdr,
    HdrHeader, RgbePixel,
};

/// Linear-radiance RGB image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HdrImage {
    width: usize,
    height: usize,
    pixels: Vec<[f32; 3]>,
}

impl HdrImage {
    /// Builds an image, checking dimensions and that every channel is finite and non-negative.
    pub fn new(width: usize, height: usize, pixels: Vec<[f32; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(i) = pixels
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite() || *c < 0.0))
        {
            return Err(Error::InvalidImage(format!(
                "pixel {i} has a negative or non-finite channel: {:?}",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Mono image with `r = g = b = values[i]`.
    pub fn from_gray(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|&v| {
                let v = v as f32;
                [v, v, v]
            })
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f32; 3]] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<[f32; 3]> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    /// Interleaved RGB channel values widened to `f64`.
    pub fn to_rgb_f64(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .flat_map(|p| p.iter().map(|&c| c as f64))
            .collect()
    }

    pub fn max_channel(&self) -> f32 {
        self.pixels
            .iter()
            .flat_map(|p| p.iter().copied())
            .fold(0.0, f32::max)
    }
}

/// 8-bit image with one (gray) or three (RGB) interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdrImage {
    width: usize,
    height: usize,
    channels: u8,
    pixels: Vec<u8>,
}

impl LdrImage {
    pub fn new(width: usize, height: usize, channels: u8, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(format!(
                "{channels} (expected 1 or 3)"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height * channels as usize {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height}x{channels} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_unit_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&v| v as f64 / 255.0).collect()
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
