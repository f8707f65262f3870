//! Per-source simulation and the parallel dataset run.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::manifest::{
    DatasetManifest, ManifestEntry, RunSummary, SampleFiles, SkippedSource, MANIFEST_FILE,
    PARTIAL_SUFFIX, RUN_FILE,
};
use super::{stable_hash, PipelineConfig, Resolution, Split};
use crate::error::{Error, Result};
use crate::hdr_io::{downsample, read_hdr_file, write_bytes, write_hdr_file, write_ldr, HdrImage};
use crate::radiometry::{flux_from_image, luminance, plan_exposure, ExposurePlan};
use crate::spad::{invert_frame, simulate_frame, FrameAccumulator, SpadConfig};
use crate::tonemap::{quantize8, tonemap};

/// Recorded in every entry: the mono tone curve is applied to the inverted
/// flux divided by the flux scale, i.e. the estimated radiance.
pub const TONEMAP_INPUT: &str = "estimated_radiance";

/// Result of [`generate_dataset`].
#[derive(Clone, Debug)]
pub struct DatasetRun {
    pub manifest: DatasetManifest,
    pub summary: RunSummary,
    pub manifest_path: PathBuf,
}

/// Hex digest of every setting that changes the bytes of a sample.
fn config_digest(config: &PipelineConfig) -> String {
    #[derive(Serialize)]
    struct Keyed<'a> {
        quantum_efficiency: f64,
        dead_time: f64,
        sampler: crate::spad::Sampler,
        seed: u64,
        tonemap: &'a crate::tonemap::TonemapParams,
        exposure: &'a crate::radiometry::ExposureTargets,
        tonemap_input: &'a str,
    }
    let keyed = Keyed {
        quantum_efficiency: config.spad.quantum_efficiency,
        dead_time: config.spad.dead_time,
        sampler: config.spad.sampler,
        seed: config.spad.seed,
        tonemap: &config.tonemap,
        exposure: &config.exposure,
        tonemap_input: TONEMAP_INPUT,
    };
    let json = serde_json::to_vec(&keyed).expect("config serializes");
    Sha256::digest(&json)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn sample_seed(seed: u64, source: &str, res: Resolution) -> u64 {
    stable_hash(&format!("{seed}/{source}/{res}"))
}

fn stem_of(source: &str) -> &str {
    Path::new(source)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(source)
}

pub(crate) fn sample_id(stem: &str, res: Resolution, frames: usize) -> String {
    format!("{stem}_{res}_k{frames}")
}

struct Job<'a> {
    out: &'a Path,
    config: &'a PipelineConfig,
    digest: &'a str,
}

/// Renders every frame count for one source at one resolution. GT files are
/// written once and shared by the entries.
fn render(
    job: &Job<'_>,
    source: &str,
    split: Split,
    image: &HdrImage,
    res: Resolution,
) -> Result<(ExposurePlan, Vec<ManifestEntry>)> {
    let config = job.config;
    let stem = stem_of(source);
    let down = downsample(image, res.width, res.height)?;
    let gray = luminance(&down);
    let plan = plan_exposure(&gray, &config.spad, config.exposure)?;
    let flux = flux_from_image(&gray, plan.flux_scale)?;
    let spad = SpadConfig {
        exposure_time: plan.exposure_time,
        seed: sample_seed(config.spad.seed, source, res),
        ..config.spad.clone()
    };
    spad.validate()?;

    let gt_ldr = format!("gt_ldr/{stem}_{res}.png");
    let gt_hdr = format!("gt_hdr/{stem}_{res}.hdr");
    let color = tonemap(&down.to_rgb_f64(), &config.tonemap);
    write_ldr(
        job.out.join(&gt_ldr),
        &quantize8(&color, res.width, res.height, 3)?,
    )?;
    write_hdr_file(job.out.join(&gt_hdr), &down)?;

    let mut wanted = config.frame_counts.clone();
    wanted.sort_unstable();
    wanted.dedup();
    let max_k = *wanted.last().expect("validated non-empty");

    let mut acc = FrameAccumulator::new(res.width, res.height);
    let mut done: BTreeMap<usize, ManifestEntry> = BTreeMap::new();
    for f in 0..max_k {
        acc.add(&simulate_frame(&flux, &spad, f as u64))?;
        let k = f + 1;
        if wanted.binary_search(&k).is_err() {
            continue;
        }
        let inverted = invert_frame(&acc.mean()?, &spad);
        let radiance: Vec<f64> = inverted
            .flux
            .phi
            .iter()
            .map(|&p| p / plan.flux_scale)
            .collect();
        let id = sample_id(stem, res, k);
        let mono_png = format!("mono_png/{id}.png");
        let mono_hdr = format!("mono_hdr/{id}.hdr");
        write_hdr_file(
            job.out.join(&mono_hdr),
            &HdrImage::from_gray(res.width, res.height, &radiance)?,
        )?;
        let mono = tonemap(&radiance, &config.tonemap);
        write_ldr(
            job.out.join(&mono_png),
            &quantize8(&mono, res.width, res.height, 1)?,
        )?;
        done.insert(
            k,
            ManifestEntry {
                id,
                source: source.to_string(),
                resolution: res,
                frames_averaged: k,
                exposure_time_s: plan.exposure_time,
                flux_scale: plan.flux_scale,
                median_flux: plan.median_flux,
                seed: spad.seed,
                saturated_fraction: inverted.saturated_fraction(),
                split,
                files: SampleFiles {
                    mono_png,
                    mono_hdr,
                    color_ldr_png: gt_ldr.clone(),
                    color_hdr: gt_hdr.clone(),
                },
                sampler: spad.sampler,
                tonemap_input: TONEMAP_INPUT.to_string(),
                config_digest: job.digest.to_string(),
            },
        );
    }
    // Manifest order follows the configured frame-count order.
    let mut seen = std::collections::HashSet::new();
    let entries = config
        .frame_counts
        .iter()
        .filter(|k| seen.insert(**k))
        .map(|k| done[k].clone())
        .collect();
    Ok((plan, entries))
}

/// Data problems skip a source (or one of its resolutions); anything else aborts.
fn is_skippable(e: &Error) -> bool {
    matches!(e, Error::NoPositiveLuminance | Error::Upsample { .. })
}

#[derive(Default)]
struct SourceOutcome {
    entries: Vec<ManifestEntry>,
    skipped: Vec<SkippedSource>,
    reused: usize,
}

fn process_source(
    job: &Job<'_>,
    input_dir: &Path,
    source: &str,
    split: Split,
    previous: &HashMap<String, ManifestEntry>,
) -> Result<SourceOutcome> {
    let config = job.config;
    let stem = stem_of(source);
    let mut out = SourceOutcome::default();
    let mut image: Option<HdrImage> = None;
    for &res in &config.resolutions {
        let reusable: Option<Vec<ManifestEntry>> = config
            .frame_counts
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|&k| {
                previous
                    .get(&sample_id(stem, res, k))
                    .filter(|e| {
                        e.source == source
                            && e.config_digest == job.digest
                            && e.files.all().iter().all(|f| job.out.join(f).is_file())
                    })
                    .cloned()
            })
            .collect();
        if let Some(mut entries) = reusable {
            // Restore configured order and refresh the split tag.
            let order: Vec<usize> = {
                let mut seen = std::collections::HashSet::new();
                config
                    .frame_counts
                    .iter()
                    .copied()
                    .filter(|k| seen.insert(*k))
                    .collect()
            };
            entries.sort_by_key(|e| order.iter().position(|&k| k == e.frames_averaged));
            for e in &mut entries {
                e.split = split;
            }
            out.reused += entries.len();
            out.entries.extend(entries);
            continue;
        }
        if image.is_none() {
            match read_hdr_file(input_dir.join(source)) {
                Ok(img) => image = Some(img),
                Err(e) => {
                    log::warn!("skipping {source}: {e}");
                    out.skipped.push(SkippedSource {
                        source: source.to_string(),
                        reason: e.to_string(),
                    });
                    return Ok(out);
                }
            }
        }
        let img = image.as_ref().expect("loaded above");
        match render(job, source, split, img, res) {
            Ok((_, entries)) => out.entries.extend(entries),
            Err(e) if is_skippable(&e) => {
                log::warn!("skipping {source} at {res}: {e}");
                out.skipped.push(SkippedSource {
                    source: source.to_string(),
                    reason: format!("{res}: {e}"),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Sorted `.hdr` file names (case-insensitive extension) directly inside `dir`.
fn list_sources(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let is_hdr = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("hdr"));
        if is_hdr && path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no .hdr files in {}",
            dir.display()
        )));
    }
    Ok(names)
}

/// Entries from a previous (possibly interrupted) run. Unparsable lines,
/// such as a line cut short by an interruption, are ignored.
fn previous_entries(out: &Path) -> HashMap<String, ManifestEntry> {
    let mut map = HashMap::new();
    let complete = out.join(MANIFEST_FILE);
    let partial = out.join(format!("{MANIFEST_FILE}{PARTIAL_SUFFIX}"));
    for path in [complete, partial] {
        let Ok(text) = fs::read_to_string(&path) else {
            continue;
        };
        for line in text.lines() {
            if let Ok(e) = serde_json::from_str::<ManifestEntry>(line) {
                map.insert(e.id.clone(), e);
            }
        }
    }
    map
}

struct SinkResult {
    entries: Vec<ManifestEntry>,
    skipped: Vec<SkippedSource>,
    reused: usize,
    error: Option<Error>,
}

/// Writes outcomes to the partial manifest in source order, whatever order
/// they arrive in.
fn run_sink(
    path: &Path,
    rx: mpsc::Receiver<(usize, SourceOutcome)>,
    abort: &AtomicBool,
) -> SinkResult {
    let mut result = SinkResult {
        entries: Vec::new(),
        skipped: Vec::new(),
        reused: 0,
        error: None,
    };
    let mut file = match File::create(path) {
        Ok(f) => Some(f),
        Err(e) => {
            abort.store(true, Ordering::SeqCst);
            result.error = Some(Error::io(path, e));
            None
        }
    };
    let mut emit = |outcome: SourceOutcome, result: &mut SinkResult| {
        if let Some(f) = file.as_mut() {
            let lines: String = outcome
                .entries
                .iter()
                .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
                .collect();
            if let Err(e) = f.write_all(lines.as_bytes()).and_then(|_| f.flush()) {
                abort.store(true, Ordering::SeqCst);
                result.error.get_or_insert(Error::io(path, e));
                file = None;
                return;
            }
        }
        result.reused += outcome.reused;
        result.entries.extend(outcome.entries);
        result.skipped.extend(outcome.skipped);
    };

    let mut next = 0;
    let mut pending: BTreeMap<usize, SourceOutcome> = BTreeMap::new();
    for (i, outcome) in rx {
        pending.insert(i, outcome);
        while let Some(o) = pending.remove(&next) {
            emit(o, &mut result);
            next += 1;
        }
    }
    // Gaps remain only after an abort; keep whatever finished.
    for (_, o) in pending {
        emit(o, &mut result);
    }
    result
}

fn worker_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

/// Runs the whole dataset: every source at every resolution and frame count.
///
/// Entries of a previous run in the same output directory are reused when
/// their settings digest matches and their files exist. The manifest is
/// streamed to `manifest.jsonl.partial` and renamed to `manifest.jsonl`
/// only when every source has been handled; `run.json` records the outcome
/// either way.
pub fn generate_dataset(config: &PipelineConfig) -> Result<DatasetRun> {
    config.validate()?;
    let sources = list_sources(&config.input_dir)?;
    let splits = config.split.assign(&sources);
    let digest = config_digest(config);
    let out = config.output_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let previous = previous_entries(out);
    let complete_path = out.join(MANIFEST_FILE);
    let partial_path = out.join(format!("{MANIFEST_FILE}{PARTIAL_SUFFIX}"));
    if complete_path.exists() {
        fs::remove_file(&complete_path).map_err(|e| Error::io(&complete_path, e))?;
    }

    let job = Job {
        out,
        config,
        digest: &digest,
    };
    let pool = worker_pool(config.threads)?;
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();

    let (work, sink) = std::thread::scope(|scope| {
        let sink = scope.spawn(|| run_sink(&partial_path, rx, &abort));
        let work: Result<()> = pool.install(|| {
            (0..sources.len())
                .into_par_iter()
                .try_for_each_with(tx, |tx, i| {
                    if abort.load(Ordering::SeqCst) {
                        return Ok(());
                    }
                    let outcome =
                        process_source(&job, &config.input_dir, &sources[i], splits[i], &previous)
                            .inspect_err(|_| abort.store(true, Ordering::SeqCst))?;
                    log::info!("{}: {} entries", sources[i], outcome.entries.len());
                    let _ = tx.send((i, outcome));
                    Ok(())
                })
        });
        (work, sink.join().expect("manifest sink panicked"))
    });

    let error = work.err().or(sink.error);
    let summary = RunSummary {
        complete: error.is_none(),
        entries: sink.entries.len(),
        reused: sink.reused,
        skipped: sink.skipped,
        split: config.split,
        config_digest: digest.clone(),
        error: error.as_ref().map(|e| e.to_string()),
    };
    let summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    let summary_written = write_bytes(&out.join(RUN_FILE), summary_json.as_bytes());
    if let Some(e) = error {
        return Err(e);
    }
    summary_written?;
    fs::rename(&partial_path, &complete_path).map_err(|e| Error::io(&partial_path, e))?;

    Ok(DatasetRun {
        manifest: DatasetManifest {
            entries: sink.entries,
        },
        summary,
        manifest_path: complete_path,
    })
}

/// One image through the dataset pipeline, at `resolution` or at its native
/// size, for every configured frame count. Errors are returned, not skipped.
pub fn simulate_single(
    input: &Path,
    config: &PipelineConfig,
    resolution: Option<Resolution>,
) -> Result<(ExposurePlan, Vec<ManifestEntry>)> {
    if config.frame_counts.is_empty() || config.frame_counts.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "frame counts {:?} must be non-empty and >= 1",
            config.frame_counts
        )));
    }
    config.spad.validate()?;
    config.tonemap.validate()?;
    let image = read_hdr_file(input)?;
    let res = resolution.unwrap_or(Resolution::new(image.width(), image.height()));
    let source = input
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidParameter(format!("bad input path {}", input.display())))?;
    let split = config.split.assign(&[source])[0];
    let digest = config_digest(config);
    let job = Job {
        out: &config.output_dir,
        config,
        digest: &digest,
    };
    render(&job, source, split, &image, res)
}
