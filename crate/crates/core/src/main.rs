use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spadsim::hdr_io::{read_radiance_hdr, read_radiance_header};
use spadsim::metrics::fmt_score;
use spadsim::pipeline::{
    export_for_model, generate_dataset, score_predictions, simulate_single, ConfigFile,
    DatasetManifest, PipelineConfig, Resolution, Split, SplitRule, Stage, Which, MANIFEST_FILE,
};
use spadsim::radiometry::{lower_median_positive, luminance};
use spadsim::spad::Sampler;
use spadsim::tonemap::Operator;
use spadsim::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "spadsim",
    version,
    about = "SPAD camera simulation and HDR dataset tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the paired dataset from a directory of .hdr files.
    Dataset(DatasetArgs),
    /// Run one .hdr file through the simulator.
    Simulate(SimulateArgs),
    /// Copy a dataset into a stage-specific input/target layout.
    Export(ExportArgs),
    /// Score predictions against the dataset ground truth.
    Score(ScoreArgs),
    /// Print the header and statistics of an .hdr file.
    Inspect(InspectArgs),
}

/// Flags shared by `dataset` and `simulate`; each overrides the config file.
#[derive(Args, Default)]
struct SimFlags {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame count to average (repeatable).
    #[arg(long = "frames", value_name = "K")]
    frames: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sampler: Option<Sampler>,
    /// Quantum efficiency.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "dead-time-ns")]
    dead_time_ns: Option<f64>,
    #[arg(long = "target-x")]
    target_x: Option<f64>,
    #[arg(long = "target-count")]
    target_count: Option<f64>,
    #[arg(long)]
    tonemap: Option<Operator>,
    /// Log tone curve steepness.
    #[arg(long)]
    mu: Option<f64>,
    /// Worker threads.
    #[arg(long, env = "SPADSIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct DatasetArgs {
    #[command(flatten)]
    sim: SimFlags,
    /// Directory of source .hdr files.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output resolution WxH (repeatable).
    #[arg(long = "resolution", value_name = "WxH")]
    resolutions: Vec<Resolution>,
    /// Number of sources in the test split (smallest hashes).
    #[arg(long = "test-count", conflicts_with = "test_fraction")]
    test_count: Option<usize>,
    /// Fraction of the hash range assigned to the test split.
    #[arg(long = "test-fraction")]
    test_fraction: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    sim: SimFlags,
    /// Source .hdr file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output resolution; the source size when omitted.
    #[arg(long, value_name = "WxH")]
    resolution: Option<Resolution>,
}

#[derive(Args)]
struct ExportArgs {
    /// manifest.jsonl, or the dataset directory containing it.
    #[arg(long)]
    manifest: PathBuf,
    /// colorization | hdr_reconstruction | single_stage
    #[arg(long)]
    stage: Stage,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// manifest.jsonl, or the dataset directory containing it.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of predictions named `<id>.png` or `<id>.hdr`.
    #[arg(long)]
    pred: PathBuf,
    /// ldr | hdr
    #[arg(long)]
    which: Which,
    /// Restrict to one split (train | test).
    #[arg(long)]
    split: Option<Split>,
    /// PSNR peak value.
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
    /// Log tone curve steepness for HDR scoring.
    #[arg(long, default_value_t = 500.0)]
    mu: f64,
    /// External per-image scores as NAME=CSV (repeatable).
    #[arg(long = "external", value_name = "NAME=CSV")]
    external: Vec<String>,
    /// Directory for the report files; defaults to the prediction directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    file: PathBuf,
}

impl SimFlags {
    fn build(&self) -> Result<PipelineConfig, Error> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            ConfigFile::read(path)?.apply(&mut config)?;
        }
        if !self.frames.is_empty() {
            config.frame_counts = self.frames.clone();
        }
        if let Some(v) = self.seed {
            config.spad.seed = v;
        }
        if let Some(v) = self.sampler {
            config.spad.sampler = v;
        }
        if let Some(v) = self.q {
            config.spad.quantum_efficiency = v;
        }
        if let Some(v) = self.dead_time_ns {
            config.spad.dead_time = v * 1e-9;
        }
        if let Some(v) = self.target_x {
            config.exposure.target_x = v;
        }
        if let Some(v) = self.target_count {
            config.exposure.target_count = v;
        }
        if let Some(v) = self.tonemap {
            config.tonemap.operator = v;
        }
        if let Some(v) = self.mu {
            config.tonemap.log_mu = v;
        }
        if self.threads.is_some() {
            config.threads = self.threads;
        }
        Ok(config)
    }
}

fn manifest_location(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join(MANIFEST_FILE), path.to_path_buf())
    } else {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        (path.to_path_buf(), dir.to_path_buf())
    }
}

fn run_dataset(args: DatasetArgs) -> Result<u8, Error> {
    let mut config = args.sim.build()?;
    if let Some(v) = args.input {
        config.input_dir = v;
    }
    if let Some(v) = args.out {
        config.output_dir = v;
    }
    if !args.resolutions.is_empty() {
        config.resolutions = args.resolutions;
    }
    if let Some(n) = args.test_count {
        config.split = SplitRule::TestCount(n);
    }
    if let Some(f) = args.test_fraction {
        config.split = SplitRule::TestFraction(f);
    }
    let run = generate_dataset(&config)?;
    let tests = run
        .manifest
        .entries
        .iter()
        .filter(|e| e.split == Split::Test)
        .count();
    println!(
        "{} entries ({} train, {} test), {} reused, {} skipped -> {}",
        run.manifest.entries.len(),
        run.manifest.entries.len() - tests,
        tests,
        run.summary.reused,
        run.summary.skipped.len(),
        run.manifest_path.display()
    );
    for s in &run.summary.skipped {
        println!("skipped {}: {}", s.source, s.reason);
    }
    Ok(0)
}

fn run_simulate(args: SimulateArgs) -> Result<u8, Error> {
    let mut config = args.sim.build()?;
    if let Some(v) = args.out {
        config.output_dir = v;
    }
    if let Some(n) = config.threads {
        // Ignored if a pool already exists; only the first call can size it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let (plan, entries) = simulate_single(&args.input, &config, args.resolution)?;
    println!(
        "exposure {:.6e} s, flux scale {:.6e}, median flux {:.6e} photons/s",
        plan.exposure_time, plan.flux_scale, plan.median_flux
    );
    for e in &entries {
        println!(
            "{}: K={} saturated {:.6} -> {} {}",
            e.id,
            e.frames_averaged,
            e.saturated_fraction,
            config.output_dir.join(&e.files.mono_png).display(),
            config.output_dir.join(&e.files.mono_hdr).display()
        );
    }
    if let Some(e) = entries.first() {
        println!(
            "ground truth -> {} {}",
            config.output_dir.join(&e.files.color_ldr_png).display(),
            config.output_dir.join(&e.files.color_hdr).display()
        );
    }
    Ok(0)
}

fn run_export(args: ExportArgs) -> Result<u8, Error> {
    let (file, dir) = manifest_location(&args.manifest);
    let manifest = DatasetManifest::read(&file)?;
    let summary = export_for_model(&manifest, &dir, args.stage, &args.out)?;
    println!("{} pairs -> {}", summary.pairs, summary.root.display());
    Ok(0)
}

fn run_score(args: ScoreArgs) -> Result<u8, Error> {
    let (file, dir) = manifest_location(&args.manifest);
    let manifest = DatasetManifest::read(&file)?;
    let mut report = score_predictions(
        &manifest, &dir, &args.pred, args.which, args.split, args.peak, args.mu,
    )?;
    for spec in &args.external {
        let (name, path) = spec.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("--external {spec:?} (expected NAME=CSV)"))
        })?;
        let text = String::from_utf8_lossy(&read_file(Path::new(path))?).into_owned();
        let matched = report.ingest_external(name, &text)?;
        log::info!("{name}: {matched} scores matched");
    }
    let stem = match args.which {
        Which::Ldr => "scores_ldr",
        Which::Hdr => "scores_hdr",
    };
    let out = args.out.unwrap_or_else(|| args.pred.clone());
    let (csv, json) = report.write(&out, stem)?;
    let a = &report.aggregates;
    print!(
        "scored {} / {}: psnr {} dB (inf {}), ssim {}",
        report.count,
        report.count + report.missing.len(),
        fmt_score(a.psnr_db),
        a.psnr_inf_count,
        fmt_score(a.ssim)
    );
    if let Some(l) = a.log_psnr_db {
        print!(", log-psnr {} dB", fmt_score(l));
    }
    for (name, v) in &a.external {
        print!(", {name} {}", fmt_score(*v));
    }
    println!("\n-> {} {}", csv.display(), json.display());
    for m in &report.missing {
        eprintln!("unscored {}: {}", m.id, m.reason);
    }
    Ok(if report.is_complete() {
        0
    } else {
        EXIT_VALIDATION
    })
}

fn run_inspect(args: InspectArgs) -> Result<u8, Error> {
    let bytes = read_file(&args.file)?;
    let (header, offset) = read_radiance_header(&bytes)?;
    let image = read_radiance_hdr(&bytes)?;
    println!("file: {}", args.file.display());
    println!("program: {}", header.program);
    for line in &header.extra {
        println!("header: {line}");
    }
    println!("size: {}x{}", header.width, header.height);
    println!("data offset: {offset}");
    let lum = luminance(&image);
    let v = &lum.values;
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    println!("luminance min {lo:.6e} max {hi:.6e} mean {mean:.6e}");
    match lower_median_positive(v) {
        Some(m) => println!("median positive luminance {m:.6e}"),
        None => println!("median positive luminance: none (all black)"),
    }
    println!("max channel {:.6e}", image.max_channel());
    Ok(0)
}

fn read_file(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn exit_code(e: &Error) -> u8 {
    if e.is_io() {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Dataset(a) => run_dataset(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Export(a) => run_export(a),
        Command::Score(a) => run_score(a),
        Command::Inspect(a) => run_inspect(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
