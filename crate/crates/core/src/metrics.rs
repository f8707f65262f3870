//! Full-reference image metrics and per-set aggregation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hdr_io::{read_hdr_file, read_ldr, write_bytes, HdrImage};
use crate::tonemap::tonemap_log_with_max;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Borrowed interleaved image samples.
#[derive(Clone, Copy, Debug)]
pub struct ImageView<'a> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: &'a [f64],
}

impl<'a> ImageView<'a> {
    pub fn new(width: usize, height: usize, channels: usize, data: &'a [f64]) -> Result<Self> {
        if channels == 0 || data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "{} samples for {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    fn check_same(&self, other: &ImageView<'_>) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        if self.channels != other.channels {
            return Err(Error::InvalidImage(format!(
                "channel count {} vs {}",
                self.channels, other.channels
            )));
        }
        Ok(())
    }

    fn plane(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }
}

pub fn mse(a: ImageView<'_>, b: ImageView<'_>) -> Result<f64> {
    a.check_same(&b)?;
    let sum: f64 = a
        .data
        .iter()
        .zip(b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data.len() as f64)
}

/// `10 log10(peak^2 / MSE)` over all channels; identical images give `+inf`.
pub fn psnr(a: ImageView<'_>, b: ImageView<'_>, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("PSNR peak {peak}")));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering: output is `(w - k + 1) x (h - k + 1)`.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(j, t)| t * horiz[(y + j) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM of one plane over all fully contained 11x11 Gaussian windows.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize, peak: f64) -> Result<f64> {
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::WindowTooLarge {
            size: (width, height),
            window: SSIM_WINDOW,
        });
    }
    let taps = gaussian_window(SSIM_WINDOW, SSIM_SIGMA);
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let prod = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
    let mu_a = filter_valid(a, width, height, &taps);
    let mu_b = filter_valid(b, width, height, &taps);
    let aa = filter_valid(&prod(a, a), width, height, &taps);
    let bb = filter_valid(&prod(b, b), width, height, &taps);
    let ab = filter_valid(&prod(a, b), width, height, &taps);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// SSIM with the standard constants; multi-channel images average per-channel scores.
pub fn ssim(a: ImageView<'_>, b: ImageView<'_>, peak: f64) -> Result<f64> {
    a.check_same(&b)?;
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("SSIM peak {peak}")));
    }
    let mut sum = 0.0;
    for c in 0..a.channels {
        sum += ssim_plane(&a.plane(c), &b.plane(c), a.width, a.height, peak)?;
    }
    Ok(sum / a.channels as f64)
}

fn log2_encode(image: &HdrImage) -> Vec<f64> {
    image
        .to_rgb_f64()
        .into_iter()
        .map(|v| v.ln_1p() / std::f64::consts::LN_2)
        .collect()
}

/// PSNR between `log2(1 + x)` encodings, peak `log2(1 + max(b))`.
pub fn log_psnr(a: &HdrImage, b: &HdrImage) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            left: a.dimensions(),
            right: b.dimensions(),
        });
    }
    let (w, h) = a.dimensions();
    let la = log2_encode(a);
    let lb = log2_encode(b);
    let peak = (1.0 + b.max_channel() as f64).log2();
    let va = ImageView::new(w, h, 3, &la)?;
    let vb = ImageView::new(w, h, 3, &lb)?;
    if la == lb {
        return Ok(f64::INFINITY);
    }
    psnr(va, vb, peak)
}

fn ser_score<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&fmt_score(*v))
    }
}

fn ser_opt_score<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_score(v, s),
        None => s.serialize_none(),
    }
}

/// Display form used in CSV and JSON: non-finite values become `inf`, `-inf` or `nan`.
pub fn fmt_score(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageScores {
    pub id: String,
    #[serde(serialize_with = "ser_score")]
    pub psnr_db: f64,
    #[serde(serialize_with = "ser_score")]
    pub ssim: f64,
    #[serde(serialize_with = "ser_opt_score")]
    pub log_psnr_db: Option<f64>,
    /// Scores ingested from external tools, keyed by metric name.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregates {
    #[serde(serialize_with = "ser_score")]
    pub psnr_db: f64,
    /// Images whose PSNR was infinite (identical to ground truth).
    pub psnr_inf_count: usize,
    #[serde(serialize_with = "ser_score")]
    pub ssim: f64,
    #[serde(serialize_with = "ser_opt_score")]
    pub log_psnr_db: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Unscored {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub count: usize,
    pub aggregates: Aggregates,
    pub per_image: Vec<ImageScores>,
    /// Samples that could not be scored and are excluded from the means.
    pub missing: Vec<Unscored>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl MetricReport {
    /// Builds a report with unweighted means; entries are ordered by id.
    pub fn from_scores(mut per_image: Vec<ImageScores>, mut missing: Vec<Unscored>) -> Self {
        per_image.sort_by(|a, b| a.id.cmp(&b.id));
        missing.sort_by(|a, b| a.id.cmp(&b.id));
        let has_log = !per_image.is_empty() && per_image.iter().all(|s| s.log_psnr_db.is_some());
        let aggregates = Aggregates {
            psnr_db: mean(per_image.iter().map(|s| s.psnr_db)),
            psnr_inf_count: per_image
                .iter()
                .filter(|s| s.psnr_db == f64::INFINITY)
                .count(),
            ssim: mean(per_image.iter().map(|s| s.ssim)),
            log_psnr_db: has_log.then(|| mean(per_image.iter().filter_map(|s| s.log_psnr_db))),
            external: BTreeMap::new(),
        };
        let mut report = Self {
            count: per_image.len(),
            aggregates,
            per_image,
            missing,
        };
        report.refresh_external_means();
        report
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    fn refresh_external_means(&mut self) {
        let names: std::collections::BTreeSet<String> = self
            .per_image
            .iter()
            .flat_map(|s| s.external.keys().cloned())
            .collect();
        self.aggregates.external = names
            .into_iter()
            .map(|n| {
                let m = mean(
                    self.per_image
                        .iter()
                        .filter_map(|s| s.external.get(&n).copied()),
                );
                (n, m)
            })
            .collect();
    }

    /// Merges per-image scores from an external tool (CSV `id,value`, header optional).
    pub fn ingest_external(&mut self, name: &str, csv_text: &str) -> Result<usize> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(csv_text.as_bytes());
        let mut scores = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidParameter(format!("{name} scores: {e}")))?;
            if rec.len() < 2 {
                continue;
            }
            match rec[1].parse::<f64>() {
                Ok(v) => {
                    scores.insert(rec[0].to_string(), v);
                }
                // Header row.
                Err(_) if scores.is_empty() => continue,
                Err(e) => {
                    return Err(Error::InvalidParameter(format!(
                        "{name} score for {:?}: {e}",
                        &rec[0]
                    )))
                }
            }
        }
        let mut matched = 0;
        for s in &mut self.per_image {
            if let Some(v) = scores.get(&s.id) {
                s.external.insert(name.to_string(), *v);
                matched += 1;
            }
        }
        self.refresh_external_means();
        Ok(matched)
    }

    /// CSV with columns `id,psnr_db,ssim,log_psnr_db`, then any external metrics.
    pub fn to_csv(&self) -> String {
        let extra: Vec<&String> = self.aggregates.external.keys().collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id", "psnr_db", "ssim", "log_psnr_db"];
        header.extend(extra.iter().map(|s| s.as_str()));
        w.write_record(&header).expect("in-memory write");
        for s in &self.per_image {
            let mut row = vec![
                s.id.clone(),
                fmt_score(s.psnr_db),
                fmt_score(s.ssim),
                s.log_psnr_db.map(fmt_score).unwrap_or_default(),
            ];
            row.extend(extra.iter().map(|n| {
                s.external
                    .get(*n)
                    .map(|v| fmt_score(*v))
                    .unwrap_or_default()
            }));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        write_bytes(&csv_path, self.to_csv().as_bytes())?;
        write_bytes(&json_path, self.to_json().as_bytes())?;
        Ok((csv_path, json_path))
    }
}

/// Which ground truth a prediction is compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvalMode {
    /// 8-bit PNGs normalized by 255.
    Ldr,
    /// Radiance files: PSNR/SSIM on the log tone curve (normalized by the
    /// ground-truth maximum) plus log-PSNR on raw radiance.
    Hdr { log_mu: f64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalSample {
    pub id: String,
    pub prediction: PathBuf,
    pub ground_truth: PathBuf,
}

fn score_ldr(sample: &EvalSample, peak: f64) -> Result<ImageScores> {
    let p = read_ldr(&sample.prediction)?;
    let g = read_ldr(&sample.ground_truth)?;
    let (pu, gu) = (p.to_unit_f64(), g.to_unit_f64());
    let pv = ImageView::new(p.width(), p.height(), p.channels() as usize, &pu)?;
    let gv = ImageView::new(g.width(), g.height(), g.channels() as usize, &gu)?;
    Ok(ImageScores {
        id: sample.id.clone(),
        psnr_db: psnr(pv, gv, peak)?,
        ssim: ssim(pv, gv, 1.0)?,
        log_psnr_db: None,
        external: BTreeMap::new(),
    })
}

fn score_hdr(sample: &EvalSample, log_mu: f64, peak: f64) -> Result<ImageScores> {
    let p = read_hdr_file(&sample.prediction)?;
    let g = read_hdr_file(&sample.ground_truth)?;
    if p.dimensions() != g.dimensions() {
        return Err(Error::DimensionMismatch {
            left: p.dimensions(),
            right: g.dimensions(),
        });
    }
    let (w, h) = g.dimensions();
    let x_max = g.max_channel() as f64;
    let pt = tonemap_log_with_max(&p.to_rgb_f64(), log_mu, x_max);
    let gt = tonemap_log_with_max(&g.to_rgb_f64(), log_mu, x_max);
    let pv = ImageView::new(w, h, 3, &pt)?;
    let gv = ImageView::new(w, h, 3, &gt)?;
    Ok(ImageScores {
        id: sample.id.clone(),
        psnr_db: psnr(pv, gv, peak)?,
        ssim: ssim(pv, gv, 1.0)?,
        log_psnr_db: Some(log_psnr(&p, &g)?),
        external: BTreeMap::new(),
    })
}

/// Scores every sample in parallel; missing or unreadable predictions are
/// listed in the report and excluded from the means.
pub fn evaluate_set(samples: &[EvalSample], mode: EvalMode, peak: f64) -> MetricReport {
    let results: Vec<std::result::Result<ImageScores, Unscored>> = samples
        .par_iter()
        .map(|s| {
            if !s.prediction.is_file() {
                return Err(Unscored {
                    id: s.id.clone(),
                    reason: format!("missing prediction {}", s.prediction.display()),
                });
            }
            let scored = match mode {
                EvalMode::Ldr => score_ldr(s, peak),
                EvalMode::Hdr { log_mu } => score_hdr(s, log_mu, peak),
            };
            scored.map_err(|e| Unscored {
                id: s.id.clone(),
                reason: e.to_string(),
            })
        })
        .collect();
    let (ok, bad): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| r.is_ok());
    MetricReport::from_scores(
        ok.into_iter().map(|r| r.unwrap()).collect(),
        bad.into_iter().map(|r| r.unwrap_err()).collect(),
    )
}
