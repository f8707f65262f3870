#![allow(dead_code)]

use std::path::Path;

use spadsim::hdr_io::{write_hdr_file, HdrImage};

/// Deterministic colored scene with a smooth gradient, a textured band and a
/// bright light source, spanning about four decades of radiance.
pub fn scene(width: usize, height: usize, variant: u32) -> HdrImage {
    let v = variant as f32;
    let mut px = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let u = x as f32 / width as f32;
            let t = y as f32 / height as f32;
            let base = 0.02 + 0.5 * u * (1.0 - 0.5 * t) + 0.01 * v;
            let texture = 0.05 * ((x as f32 * 0.37 + v).sin() * (y as f32 * 0.23).cos()).abs();
            let dx = u - 0.7 - 0.02 * (variant % 8) as f32;
            let dy = t - 0.3;
            let light = 80.0 * (-(dx * dx + dy * dy) / 0.002).exp();
            let l = base + texture + light;
            let tint = (variant % 8) as f32;
            px.push([l * (0.8 + 0.04 * tint), l, l * (1.1 - 0.03 * tint)]);
        }
    }
    HdrImage::new(width, height, px).unwrap()
}

pub fn write_scenes(dir: &Path, count: u32, width: usize, height: usize) {
    for i in 0..count {
        write_hdr_file(
            dir.join(format!("scene{i:02}.hdr")),
            &scene(width, height, i),
        )
        .unwrap();
    }
}

/// All files under `root`, relative paths with contents, sorted.
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

/// Direct SSIM: for every window position, 2-D Gaussian weights computed
/// from scratch and two-pass weighted moments.
#[allow(clippy::needless_range_loop)]
pub fn brute_force_ssim(a: &[f64], b: &[f64], w: usize, h: usize, peak: f64) -> f64 {
    const K: usize = 11;
    let sigma = 1.5f64;
    let mut weights = [[0.0f64; K]; K];
    let mut total = 0.0;
    for (i, row) in weights.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let mut sum = 0.0;
    let mut count = 0;
    for y0 in 0..=h - K {
        for x0 in 0..=w - K {
            let at = |img: &[f64], i: usize, j: usize| img[(y0 + i) * w + x0 + j];
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..K {
                for j in 0..K {
                    let g = weights[i][j] / total;
                    ma += g * at(a, i, j);
                    mb += g * at(b, i, j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..K {
                for j in 0..K {
                    let g = weights[i][j] / total;
                    let (da, db) = (at(a, i, j) - ma, at(b, i, j) - mb);
                    va += g * da * da;
                    vb += g * db * db;
                    cov += g * da * db;
                }
            }
            sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}
