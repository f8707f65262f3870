//! Radiance RGBE (`.hdr`) codec.
//!
//! Decoding accepts flat scanlines, old-style `(1,1,1,n)` repeat runs and
//! new-style per-channel RLE. Encoding emits new-style RLE for widths in
//! `[8, 32767]` and flat pixels otherwise.

use std::path::Path;

use super::{read_bytes, write_bytes, HdrImage};
use crate::error::{Error, Result};

const FORMAT_RGBE: &str = "32-bit_rle_rgbe";
const MIN_RLE_WIDTH: usize = 8;
const MAX_RLE_WIDTH: usize = 0x7fff;
const MIN_RUN: usize = 4;
const MAX_RUN: usize = 127;
const MAX_LITERAL: usize = 128;
const MAX_DIMENSION: usize = 1 << 20;

/// One shared-exponent pixel: three 8-bit mantissas and an exponent byte.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RgbePixel {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub e: u8,
}

impl RgbePixel {
    pub const BLACK: RgbePixel = RgbePixel {
        r: 0,
        g: 0,
        b: 0,
        e: 0,
    };

    pub fn from_bytes(b: [u8; 4]) -> Self {
        Self {
            r: b[0],
            g: b[1],
            b: b[2],
            e: b[3],
        }
    }

    pub fn to_bytes(self) -> [u8; 4] {
        [self.r, self.g, self.b, self.e]
    }

    /// `value = mantissa * 2^(e - 136)`; a zero exponent is black.
    pub fn to_rgb(self) -> [f32; 3] {
        if self.e == 0 {
            return [0.0; 3];
        }
        let scale = 2f64.powi(self.e as i32 - 136);
        [
            (self.r as f64 * scale) as f32,
            (self.g as f64 * scale) as f32,
            (self.b as f64 * scale) as f32,
        ]
    }

    /// Shared-exponent encoding with round-half-up mantissas.
    ///
    /// The largest channel always lands in `[128, 255]`, so its relative
    /// error is at most 1/256.
    pub fn from_rgb(rgb: [f32; 3]) -> Self {
        let c = rgb.map(|v| v.max(0.0) as f64);
        let m = c[0].max(c[1]).max(c[2]);
        if !(m >= 1e-32) {
            return Self::BLACK;
        }
        let mut exp = frexp_exponent(m);
        let mut mant = quantize_mantissas(c, exp);
        if mant.iter().any(|&v| v > 255.0) {
            exp += 1;
            mant = quantize_mantissas(c, exp);
        }
        if exp + 128 > 255 {
            // Beyond the representable range: saturate.
            return RgbePixel {
                r: 255,
                g: 255,
                b: 255,
                e: 255,
            };
        }
        RgbePixel {
            r: mant[0] as u8,
            g: mant[1] as u8,
            b: mant[2] as u8,
            e: (exp + 128) as u8,
        }
    }
}

/// Exponent `e` with `m = f * 2^e`, `f` in `[0.5, 1)`, for positive normal `m`.
fn frexp_exponent(m: f64) -> i32 {
    let biased = ((m.to_bits() >> 52) & 0x7ff) as i32;
    biased - 1022
}

fn quantize_mantissas(c: [f64; 3], exp: i32) -> [f64; 3] {
    let scale = 2f64.powi(8 - exp);
    c.map(|v| (v * scale + 0.5).floor())
}

/// Parsed Radiance header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HdrHeader {
    /// `RADIANCE` or `RGBE`, from the `#?` magic line.
    pub program: String,
    pub width: usize,
    pub height: usize,
    /// Header lines other than the magic and `FORMAT=` lines, verbatim.
    pub extra: Vec<String>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Next `\n`-terminated line (without the terminator) and its start offset.
    fn line(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.bytes[start..];
        let end = rest.iter().position(|&b| b == b'\n')?;
        self.pos = start + end + 1;
        let raw = &rest[..end];
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        // Non-UTF-8 header lines are reported as empty-looking garbage.
        Some((start, std::str::from_utf8(raw).unwrap_or("\u{fffd}")))
    }
}

/// Parses the header and resolution line; returns the header and the offset of the first scanline.
pub fn read_radiance_header(bytes: &[u8]) -> Result<(HdrHeader, usize)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let (_, magic) = cur.line().ok_or_else(|| Error::MalformedHeader {
        offset: 0,
        reason: "missing #? magic line".into(),
    })?;
    let program = match magic.strip_prefix("#?") {
        Some(p) if p.starts_with("RADIANCE") || p.starts_with("RGBE") => p.trim().to_string(),
        _ => {
            return Err(Error::MalformedHeader {
                offset: 0,
                reason: format!("expected #?RADIANCE or #?RGBE, found {magic:?}"),
            })
        }
    };

    let mut format_seen = false;
    let mut extra = Vec::new();
    loop {
        let (offset, line) = cur.line().ok_or_else(|| Error::MalformedHeader {
            offset: cur.pos,
            reason: "header not terminated by a blank line".into(),
        })?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != FORMAT_RGBE {
                return Err(Error::MalformedHeader {
                    offset,
                    reason: format!("unsupported format {:?}", fmt.trim()),
                });
            }
            format_seen = true;
        } else {
            extra.push(line.to_string());
        }
    }
    if !format_seen {
        return Err(Error::MalformedHeader {
            offset: cur.pos,
            reason: format!("missing FORMAT={FORMAT_RGBE}"),
        });
    }

    let res_offset = cur.pos;
    let (_, res) = cur.line().ok_or_else(|| Error::MalformedHeader {
        offset: res_offset,
        reason: "missing resolution line".into(),
    })?;
    let (width, height) = parse_resolution(res, res_offset)?;
    Ok((
        HdrHeader {
            program,
            width,
            height,
            extra,
        },
        cur.pos,
    ))
}

fn parse_resolution(line: &str, offset: usize) -> Result<(usize, usize)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let malformed = || Error::MalformedHeader {
        offset,
        reason: format!("bad resolution line {line:?}"),
    };
    if tokens.len() != 4 {
        return Err(malformed());
    }
    let is_axis = |t: &str| matches!(t, "-Y" | "+Y" | "-X" | "+X");
    if !is_axis(tokens[0]) || !is_axis(tokens[2]) {
        return Err(malformed());
    }
    let a: usize = tokens[1].parse().map_err(|_| malformed())?;
    let b: usize = tokens[3].parse().map_err(|_| malformed())?;
    if tokens[0] != "-Y" || tokens[2] != "+X" {
        return Err(Error::UnsupportedOrientation {
            offset,
            line: line.to_string(),
        });
    }
    if a == 0 || b == 0 || a > MAX_DIMENSION || b > MAX_DIMENSION {
        return Err(malformed());
    }
    Ok((b, a))
}

/// Decodes a complete Radiance `.hdr` byte stream.
pub fn read_radiance_hdr(bytes: &[u8]) -> Result<HdrImage> {
    let (header, mut pos) = read_radiance_header(bytes)?;
    let (w, h) = (header.width, header.height);
    // A hostile header must not drive a huge up-front allocation.
    let mut pixels = Vec::with_capacity(w.saturating_mul(h).min(bytes.len()));
    let mut line = vec![RgbePixel::BLACK; w];
    for row in 0..h {
        pos = decode_scanline(bytes, pos, row, &mut line)?;
        pixels.extend(line.iter().map(|p| p.to_rgb()));
    }
    HdrImage::new(w, h, pixels)
}

/// Decodes one scanline starting at `pos` into `out`; returns the offset after it.
fn decode_scanline(bytes: &[u8], pos: usize, row: usize, out: &mut [RgbePixel]) -> Result<usize> {
    let width = out.len();
    let truncated = |offset| Error::TruncatedScanline { row, offset };
    let head = bytes.get(pos..pos + 4).ok_or(truncated(pos))?;
    let is_new_rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width)
        && head[0] == 2
        && head[1] == 2
        && head[2] & 0x80 == 0;
    if !is_new_rle {
        return decode_flat(bytes, pos, row, out);
    }
    let encoded_width = ((head[2] as usize) << 8) | head[3] as usize;
    if encoded_width != width {
        return Err(Error::RunOverrun { row, offset: pos });
    }

    let mut pos = pos + 4;
    let mut channel = vec![0u8; width];
    for c in 0..4 {
        let mut x = 0;
        while x < width {
            let count_at = pos;
            let count = *bytes.get(pos).ok_or(truncated(pos))? as usize;
            pos += 1;
            if count > 128 {
                let run = count - 128;
                if x + run > width {
                    return Err(Error::RunOverrun {
                        row,
                        offset: count_at,
                    });
                }
                let v = *bytes.get(pos).ok_or(truncated(pos))?;
                pos += 1;
                channel[x..x + run].fill(v);
                x += run;
            } else {
                if count == 0 || x + count > width {
                    return Err(Error::RunOverrun {
                        row,
                        offset: count_at,
                    });
                }
                let src = bytes.get(pos..pos + count).ok_or(truncated(bytes.len()))?;
                channel[x..x + count].copy_from_slice(src);
                pos += count;
                x += count;
            }
        }
        for (px, &v) in out.iter_mut().zip(&channel) {
            match c {
                0 => px.r = v,
                1 => px.g = v,
                2 => px.b = v,
                _ => px.e = v,
            }
        }
    }
    Ok(pos)
}

fn decode_flat(bytes: &[u8], mut pos: usize, row: usize, out: &mut [RgbePixel]) -> Result<usize> {
    let width = out.len();
    let mut x = 0;
    let mut shift = 0u32;
    while x < width {
        let at = pos;
        let b = bytes
            .get(pos..pos + 4)
            .ok_or(Error::TruncatedScanline { row, offset: pos })?;
        pos += 4;
        let px = RgbePixel::from_bytes([b[0], b[1], b[2], b[3]]);
        if px.r == 1 && px.g == 1 && px.b == 1 && x > 0 {
            // Old-style repeat of the previous pixel; consecutive runs scale by 256.
            let run = (px.e as usize).checked_shl(shift).unwrap_or(usize::MAX);
            if shift > 24 || run > width - x {
                return Err(Error::RunOverrun { row, offset: at });
            }
            let prev = out[x - 1];
            out[x..x + run].fill(prev);
            x += run;
            shift += 8;
        } else {
            out[x] = px;
            x += 1;
            shift = 0;
        }
    }
    Ok(pos)
}

/// Encodes an image as a Radiance `.hdr` byte stream.
pub fn write_radiance_hdr(image: &HdrImage) -> Vec<u8> {
    let (w, h) = image.dimensions();
    let mut out = format!("#?RADIANCE\nFORMAT={FORMAT_RGBE}\n\n-Y {h} +X {w}\n").into_bytes();
    out.reserve(w * h * 4);
    let use_rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&w);
    let mut channel = vec![0u8; w];
    for row in image.pixels().chunks_exact(w) {
        let encoded: Vec<RgbePixel> = row.iter().map(|&p| RgbePixel::from_rgb(p)).collect();
        if !use_rle {
            for p in &encoded {
                out.extend_from_slice(&p.to_bytes());
            }
            continue;
        }
        out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xff) as u8]);
        for c in 0..4 {
            for (dst, p) in channel.iter_mut().zip(&encoded) {
                *dst = p.to_bytes()[c];
            }
            encode_rle_channel(&channel, &mut out);
        }
    }
    out
}

/// New-style RLE for one channel plane: runs of at least four equal bytes
/// become `(128 + n, value)`, everything else goes out as literal blocks.
pub(crate) fn encode_rle_channel(data: &[u8], out: &mut Vec<u8>) {
    let n = data.len();
    let mut i = 0;
    while i < n {
        // Find the next run long enough to be worth encoding.
        let mut run_start = i;
        let mut run_len = 0;
        while run_start < n {
            run_len = 1;
            while run_start + run_len < n
                && run_len < MAX_RUN
                && data[run_start + run_len] == data[run_start]
            {
                run_len += 1;
            }
            if run_len >= MIN_RUN {
                break;
            }
            run_start += run_len;
        }
        while i < run_start {
            let len = (run_start - i).min(MAX_LITERAL);
            out.push(len as u8);
            out.extend_from_slice(&data[i..i + len]);
            i += len;
        }
        if run_start < n && run_len >= MIN_RUN {
            out.push((128 + run_len) as u8);
            out.push(data[run_start]);
            i = run_start + run_len;
        }
    }
}

pub fn read_hdr_file(path: impl AsRef<Path>) -> Result<HdrImage> {
    read_radiance_hdr(&read_bytes(path.as_ref())?)
}

pub fn write_hdr_file(path: impl AsRef<Path>, image: &HdrImage) -> Result<()> {
    write_bytes(path.as_ref(), &write_radiance_hdr(image))
}
