//! Area-weighted box downsampling in linear radiance.

use super::HdrImage;
use crate::error::{Error, Result};

/// Source taps for one output index: `(source index, overlap length)`.
type Taps = Vec<(usize, f64)>;

/// Overlap of each output cell `[i*r, (i+1)*r)` with source cells, `r = src/dst`.
fn axis_taps(src: usize, dst: usize) -> Vec<Taps> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            // Integer bounds keep the edges exact when the ratio divides evenly.
            let lo = i as f64 * ratio;
            let hi = if i + 1 == dst {
                src as f64
            } else {
                (i + 1) as f64 * ratio
            };
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|j| {
                    let overlap = (hi.min(j as f64 + 1.0) - lo.max(j as f64)).max(0.0);
                    (overlap > 0.0).then_some((j, overlap))
                })
                .collect()
        })
        .collect()
}

/// Box-filter downsample; each output pixel is the overlap-weighted mean of the
/// source pixels it covers, so total flux is conserved.
pub fn downsample(image: &HdrImage, target_w: usize, target_h: usize) -> Result<HdrImage> {
    let (w, h) = image.dimensions();
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidParameter(format!(
            "target size {target_w}x{target_h}"
        )));
    }
    if target_w > w || target_h > h {
        return Err(Error::Upsample {
            from: (w, h),
            to: (target_w, target_h),
        });
    }
    if (target_w, target_h) == (w, h) {
        return Ok(image.clone());
    }
    let xt = axis_taps(w, target_w);
    let yt = axis_taps(h, target_h);
    let area = (w as f64 / target_w as f64) * (h as f64 / target_h as f64);
    let src = image.pixels();

    let mut out = Vec::with_capacity(target_w * target_h);
    let mut row_acc = vec![[0.0f64; 3]; target_w];
    for ytaps in &yt {
        row_acc.iter_mut().for_each(|a| *a = [0.0; 3]);
        for &(sy, wy) in ytaps {
            let srow = &src[sy * w..(sy + 1) * w];
            for (acc, xtaps) in row_acc.iter_mut().zip(&xt) {
                for &(sx, wx) in xtaps {
                    let p = srow[sx];
                    let wgt = wx * wy;
                    acc[0] += p[0] as f64 * wgt;
                    acc[1] += p[1] as f64 * wgt;
                    acc[2] += p[2] as f64 * wgt;
                }
            }
        }
        out.extend(
            row_acc
                .iter()
                .map(|a| a.map(|v| (v / area).max(0.0) as f32)),
        );
    }
    HdrImage::new(target_w, target_h, out)
}
