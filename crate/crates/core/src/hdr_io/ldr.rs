//! 8-bit PNG reading and writing.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::{PngDecoder, PngEncoder};
use image::{ColorType, ExtendedColorType, ImageDecoder, ImageEncoder};

use super::{read_bytes, write_bytes, LdrImage};
use crate::error::{Error, Result};

pub fn encode_png(image: &LdrImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let color = match image.channels() {
        1 => ExtendedColorType::L8,
        _ => ExtendedColorType::Rgb8,
    };
    PngEncoder::new(&mut out)
        .write_image(
            image.pixels(),
            image.width() as u32,
            image.height() as u32,
            color,
        )
        .map_err(|e| Error::Png(e.to_string()))?;
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<LdrImage> {
    let decoder = PngDecoder::new(Cursor::new(bytes)).map_err(|e| Error::Png(e.to_string()))?;
    let (w, h) = decoder.dimensions();
    let channels = match decoder.color_type() {
        ColorType::L8 => 1,
        ColorType::Rgb8 => 3,
        ColorType::L16 | ColorType::Rgb16 | ColorType::La16 | ColorType::Rgba16 => {
            return Err(Error::UnsupportedBitDepth(format!(
                "{:?} (expected 8-bit)",
                decoder.color_type()
            )))
        }
        other => {
            return Err(Error::UnsupportedChannels(format!(
                "{other:?} (expected gray or RGB)"
            )))
        }
    };
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder
        .read_image(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    LdrImage::new(w as usize, h as usize, channels, buf)
}

pub fn read_ldr(path: impl AsRef<Path>) -> Result<LdrImage> {
    decode_png(&read_bytes(path.as_ref())?)
}

pub fn write_ldr(path: impl AsRef<Path>, image: &LdrImage) -> Result<()> {
    write_bytes(path.as_ref(), &encode_png(image)?)
}
