//! Command-line front end: pattern selection, reconstruction-matrix
//! precomputation, simulated measurements, streaming runs, and evaluation.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or file format, 3 numerical
//! (rank/conditioning or failed numerical check), 4 provenance mismatch.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fdri::error::{Error, Result};
use fdri::image::Image;
use fdri::io::{self, LoadedReconstruction, PgmDepth};
use fdri::metrics;
use fdri::reconstruction::{
    precompute_fdri_direct_with, precompute_fdri_svd, precompute_pinv, relative_frobenius_distance,
    right_inverse_error, Method, Precision, PrecomputeConfig, PrecomputeReport,
    ReconstructionMatrix,
};
use fdri::sampling::{
    assemble_measurement_matrix, binarize, select_patterns, MeasurementMatrix, PatternSet, Protocol,
};
use fdri::simulator::{measure, run_stream, ClockMode, FrameSource, StreamConfig};
use fdri::spectral::{build_gamma, freq_grid};
use fdri::testimages;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fdri", version, about = "Compressive single-pixel imaging simulator with Fourier-domain regularized inversion")]
struct Cli {
    /// Emit reports as JSON lines on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (overrides FDRI_THREADS; default: hardware parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and rank sampling patterns, optionally binarized.
    Select(SelectArgs),
    /// Precompute a reconstruction matrix from a pattern set.
    Precompute(PrecomputeArgs),
    /// Check the right-inverse identity M*P = I of a stored matrix.
    Verify(VerifyArgs),
    /// Compare two reconstruction matrices (relative Frobenius distance).
    Compare(CompareArgs),
    /// Simulate one exposure sequence of a scene image.
    Measure(MeasureArgs),
    /// Reconstruct an image from a stored measurement vector.
    Reconstruct(ReconstructArgs),
    /// Stream frames through measure/reconstruct at the DMD rate.
    Run(RunArgs),
    /// Micro-benchmark the per-frame reconstruction latency.
    Bench(BenchArgs),
    /// PSNR table of regularized vs pseudoinverse reconstruction.
    Eval(EvalArgs),
    /// Mean Fourier-spectrum diagnostics of a pattern set.
    Spectrum(SpectrumArgs),
    /// Write the bundled test scenes as PGM files.
    Testimages(TestimagesArgs),
}

#[derive(Args)]
struct ResolutionArgs {
    /// Square resolution in pixels.
    #[arg(long)]
    res: Option<usize>,
    #[arg(long, requires = "height")]
    width: Option<usize>,
    #[arg(long, requires = "width")]
    height: Option<usize>,
}

impl ResolutionArgs {
    fn get(&self) -> Result<(usize, usize)> {
        match (self.res, self.width, self.height) {
            (Some(r), None, None) => Ok((r, r)),
            (None, Some(w), Some(h)) => Ok((w, h)),
            _ => Err(Error::invalid("specify either --res or both --width and --height")),
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Sampling protocol: dct, walsh-hadamard or morlet-noise.
    #[arg(long)]
    protocol: String,
    #[command(flatten)]
    resolution: ResolutionArgs,
    /// Compression ratio k/n; k = floor(ratio * n).
    #[arg(long, conflicts_with = "k")]
    ratio: Option<f64>,
    /// Explicit pattern count.
    #[arg(long)]
    k: Option<usize>,
    /// Directory of database images driving the ranking.
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold every pattern at its mean into {-1, +1}.
    #[arg(long)]
    binarize: bool,
    #[arg(short, long)]
    output: PathBuf,
    /// Also dump each pattern as a PGM file into this directory.
    #[arg(long)]
    pgm_dump: Option<PathBuf>,
    /// Dump patterns as DMD-style {0, 1} masks instead of min-max scaling.
    #[arg(long, requires = "pgm_dump")]
    dmd_masks: bool,
}

#[derive(Args)]
struct PrecomputeArgs {
    /// Pattern-set container produced by `select`.
    #[arg(long)]
    patterns: PathBuf,
    /// fdri-direct, fdri-svd or pinv.
    #[arg(long, default_value = "fdri-direct")]
    method: String,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    /// Prepend the all-ones synchronization pattern as a matrix row.
    #[arg(long)]
    include_white: bool,
    /// Bytes of the filtered matrix kept resident during precompute.
    #[arg(long)]
    memory_budget: Option<u64>,
    /// Storage precision of the saved matrix.
    #[arg(long, default_value = "f64")]
    precision: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    patterns: PathBuf,
    /// Override the tolerance recorded in the matrix sidecar.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    patterns: PathBuf,
    #[arg(long)]
    include_white: bool,
    /// Scene image (pgm/png/jpeg); resized to the pattern resolution.
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Measurement JSON produced by `measure`.
    #[arg(long)]
    measurements: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// PGM bit depth of the written frame (8 or 16).
    #[arg(long, default_value_t = 16)]
    depth: u32,
    /// Skip the measurement/matrix provenance check.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    patterns: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
    /// Directory of frame images.
    #[arg(long, conflicts_with = "synthetic")]
    images: Option<PathBuf>,
    /// Number of synthetic moving-target frames.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Write reconstructed frames into this directory.
    #[arg(long)]
    frames_out: Option<PathBuf>,
    /// Write the stream report JSON to this path.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 22_000.0)]
    dmd_rate: f64,
    /// Pace the producer on the wall clock instead of logical time.
    #[arg(long)]
    wall_clock: bool,
    /// Reconstruction precision (defaults to the stored matrix dtype).
    #[arg(long)]
    precision: Option<String>,
    #[arg(long, default_value_t = 4)]
    queue_depth: usize,
    /// PGM bit depth for written frames.
    #[arg(long, default_value_t = 8)]
    depth: u32,
    /// Frame file format: pgm or png.
    #[arg(long, default_value = "pgm")]
    format: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// f32 (the real-time path) or f64.
    #[arg(long, default_value = "f32")]
    precision: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget the median latency is compared against, in milliseconds.
    #[arg(long, default_value_t = 88.0)]
    budget_ms: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    patterns: PathBuf,
    /// Evaluation images; the bundled test scenes when omitted.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long)]
    include_white: bool,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    patterns: PathBuf,
    /// Write the centered magnitude map as a PGM image.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TestimagesArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    res: usize,
    #[arg(long, default_value_t = 8)]
    depth: u32,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Io { .. } | Error::Format(_) => 2,
        Error::RankDeficient { .. } | Error::InternalConsistency(_) => 3,
        Error::Provenance(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var("FDRI_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        // A failure here only means a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select(a) => cmd_select(a, cli.json),
        Command::Precompute(a) => cmd_precompute(a, cli.json),
        Command::Verify(a) => cmd_verify(a, cli.json),
        Command::Compare(a) => cmd_compare(a, cli.json),
        Command::Measure(a) => cmd_measure(a, cli.json),
        Command::Reconstruct(a) => cmd_reconstruct(a, cli.json),
        Command::Run(a) => cmd_run(a, cli.json),
        Command::Bench(a) => cmd_bench(a, cli.json),
        Command::Eval(a) => cmd_eval(a, cli.json),
        Command::Spectrum(a) => cmd_spectrum(a, cli.json),
        Command::Testimages(a) => cmd_testimages(a, cli.json),
    }
}

fn load_scene(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "pgm" => io::read_pgm(path),
        _ => {
            let decoded = image::open(path)
                .map_err(|e| Error::Format(format!("cannot decode {}: {e}", path.display())))?
                .to_luma32f();
            let (w, h) = (decoded.width() as usize, decoded.height() as usize);
            Image::new(w, h, decoded.into_raw().into_iter().map(f64::from).collect())
        }
    }
}

fn pgm_depth(bits: u32) -> Result<PgmDepth> {
    match bits {
        8 => Ok(PgmDepth::Eight),
        16 => Ok(PgmDepth::Sixteen),
        other => Err(Error::invalid(format!("unsupported pgm depth {other} (use 8 or 16)"))),
    }
}

fn load_db(dir: &Option<PathBuf>) -> Result<Vec<Image>> {
    match dir {
        None => Ok(Vec::new()),
        Some(d) => Ok(io::load_image_dir(d)?.into_iter().map(|(_, img)| img).collect()),
    }
}

fn print_precompute_report(report: &PrecomputeReport, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string(report).map_err(|e| Error::Format(e.to_string()))?);
    } else {
        for s in &report.stages {
            println!("stage {:<14} {:>10.2} ms", s.name, s.ms);
        }
        println!("gram condition estimate: {:.3e}", report.condition_estimate);
        println!("solver: {}", report.solver);
        if let Some(r) = &report.regularization {
            println!("regularization: {r}");
        }
    }
    Ok(())
}

fn cmd_select(a: SelectArgs, json: bool) -> Result<()> {
    let (w, h) = a.resolution.get()?;
    let n = w * h;
    let k = match (a.ratio, a.k) {
        (Some(r), None) => {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::invalid(format!("ratio must lie in (0, 1], got {r}")));
            }
            ((r * n as f64).floor() as usize).max(1)
        }
        (None, Some(k)) => k,
        (None, None) => return Err(Error::invalid("specify --ratio or --k")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let protocol: Protocol = a.protocol.parse()?;
    let db = load_db(&a.db)?;
    let mut set = select_patterns(protocol, k, &db, w, h, a.seed)?;
    if a.binarize {
        set = binarize(&set)?;
    }
    io::save_pattern_set(&set, &a.output)?;
    if let Some(dir) = &a.pgm_dump {
        dump_patterns(&set, dir, a.dmd_masks)?;
    }
    if json {
        println!(
            "{}",
            json!({
                "protocol": set.protocol().as_str(),
                "k": set.len(),
                "resolution": [w, h],
                "binarized": set.binarized(),
                "selection": set.selection_meta(),
                "digest": set.digest(),
                "output": a.output,
            })
        );
    } else {
        println!(
            "selected {} {} patterns at {}x{} (binarized: {})",
            set.len(),
            set.protocol(),
            w,
            h,
            set.binarized()
        );
        println!("ranking: {}", set.selection_meta());
        println!("wrote {}", a.output.display());
    }
    Ok(())
}

fn dump_patterns(set: &PatternSet, dir: &Path, dmd_masks: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, p) in set.patterns().iter().enumerate() {
        let img = if dmd_masks {
            // {0,1} mask: nonnegative pixels switch the mirror on
            p.map(|v| if v >= 0.0 { 1.0 } else { 0.0 })
        } else {
            p.normalized_unit()
        };
        io::write_pgm(&dir.join(format!("pattern_{i:05}.pgm")), &img, PgmDepth::Eight)?;
    }
    Ok(())
}

fn cmd_precompute(a: PrecomputeArgs, json: bool) -> Result<()> {
    let method: Method = a.method.parse()?;
    let precision: Precision = a.precision.parse()?;
    let set = io::load_pattern_set(&a.patterns)?;
    let m = assemble_measurement_matrix(&set, a.include_white)?;
    let (p, report) = match method {
        Method::FdriDirect => {
            let filter = build_gamma(&freq_grid(m.width(), m.height())?, a.mu, a.eps)?;
            let config = PrecomputeConfig { memory_budget: a.memory_budget };
            precompute_fdri_direct_with(&m, &filter, &config)?
        }
        Method::FdriSvd => {
            let filter = build_gamma(&freq_grid(m.width(), m.height())?, a.mu, a.eps)?;
            precompute_fdri_svd(&m, &filter)?
        }
        Method::Pinv => precompute_pinv(&m)?,
    };
    io::save_reconstruction_matrix(&p, &a.output, precision, Some(a.include_white))?;
    print_precompute_report(&report, json)?;
    if !json {
        println!(
            "wrote {} ({} {}x{}, {})",
            a.output.display(),
            method,
            p.n(),
            p.k(),
            precision.as_str()
        );
    }
    Ok(())
}

/// Reassembles M from the pattern file using the sidecar's include_white
/// flag and checks digests before any numeric comparison.
fn matrix_and_measurement(
    matrix: &Path,
    patterns: &Path,
) -> Result<(ReconstructionMatrix, MeasurementMatrix, Option<f64>)> {
    let (loaded, meta) = io::load_reconstruction_matrix(matrix)?;
    let set = io::load_pattern_set(patterns)?;
    let m = assemble_measurement_matrix(&set, meta.include_white.unwrap_or(false))?;
    let expected = meta.m_digest.clone().unwrap_or_default();
    let got = m.digest();
    if expected != got {
        return Err(Error::Provenance(format!(
            "matrix was computed from a different measurement matrix (sidecar {}, patterns give {})",
            &expected[..12.min(expected.len())],
            &got[..12]
        )));
    }
    Ok((loaded.as_f64()?, m, meta.tolerance))
}

fn cmd_verify(a: VerifyArgs, json: bool) -> Result<()> {
    let (p, m, meta_tol) = matrix_and_measurement(&a.matrix, &a.patterns)?;
    let tol = a.tol.or(meta_tol).unwrap_or_else(|| p.method().tolerance());
    let err = right_inverse_error(&m, &p)?;
    let pass = err < tol;
    if json {
        println!(
            "{}",
            json!({"residual_max": err, "tolerance": tol, "pass": pass, "k": m.k(), "n": m.n()})
        );
    } else {
        println!(
            "max |M*P - I| = {err:.3e} (tolerance {tol:.1e}): {}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if pass {
        Ok(())
    } else {
        Err(Error::InternalConsistency(format!(
            "right-inverse residual {err:.3e} exceeds tolerance {tol:.1e}"
        )))
    }
}

fn cmd_compare(a: CompareArgs, json: bool) -> Result<()> {
    let (pa, _) = io::load_reconstruction_matrix(&a.a)?;
    let (pb, _) = io::load_reconstruction_matrix(&a.b)?;
    let dist = relative_frobenius_distance(&pa.as_f64()?, &pb.as_f64()?)?;
    let pass = dist < a.tol;
    if json {
        println!("{}", json!({"relative_frobenius": dist, "tolerance": a.tol, "pass": pass}));
    } else {
        println!(
            "relative Frobenius distance = {dist:.3e} (tolerance {:.1e}): {}",
            a.tol,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if pass {
        Ok(())
    } else {
        Err(Error::InternalConsistency(format!(
            "matrices differ by {dist:.3e} (tolerance {:.1e})",
            a.tol
        )))
    }
}

fn cmd_measure(a: MeasureArgs, json: bool) -> Result<()> {
    let set = io::load_pattern_set(&a.patterns)?;
    let m = assemble_measurement_matrix(&set, a.include_white)?;
    let scene = load_scene(&a.image)?.resize_bilinear(m.width(), m.height())?;
    let y = measure(&m, &scene, a.noise_sigma, a.seed)?;
    io::save_measurements(&y, &a.output)?;
    if json {
        println!(
            "{}",
            json!({"k": y.len(), "noise_sigma": a.noise_sigma, "seed": a.seed, "output": a.output})
        );
    } else {
        println!("measured {} samples -> {}", y.len(), a.output.display());
    }
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs, json: bool) -> Result<()> {
    let (p, meta) = io::load_reconstruction_matrix(&a.matrix)?;
    let y = io::load_measurements(&a.measurements)?;
    if !a.force {
        let expected = meta.m_digest.unwrap_or_default();
        if y.source_digest() != expected {
            return Err(Error::Provenance(
                "measurements were taken with a different measurement matrix (use --force to override)"
                    .to_string(),
            ));
        }
    }
    let image = p.apply(y.values())?;
    let clipped = image.clipped(0.0, 1.0);
    match a.output.extension().and_then(|e| e.to_str()) {
        Some("png") => io::write_png(&a.output, &clipped, pgm_depth(a.depth)?)?,
        _ => io::write_pgm(&a.output, &clipped, pgm_depth(a.depth)?)?,
    }
    if json {
        let (lo, hi) = image.min_max();
        println!("{}", json!({"output": a.output, "min": lo, "max": hi}));
    } else {
        println!("reconstructed {}x{} -> {}", image.width(), image.height(), a.output.display());
    }
    Ok(())
}

fn cmd_run(a: RunArgs, json: bool) -> Result<()> {
    let (loaded, meta) = io::load_reconstruction_matrix(&a.matrix)?;
    let set = io::load_pattern_set(&a.patterns)?;
    let m = assemble_measurement_matrix(&set, meta.include_white.unwrap_or(false))?;
    let expected = meta.m_digest.clone().unwrap_or_default();
    if m.digest() != expected {
        return Err(Error::Provenance(
            "pattern file does not match the matrix provenance digest".to_string(),
        ));
    }
    let p = loaded.as_f64()?;
    let precision = match &a.precision {
        Some(s) => s.parse()?,
        None => match loaded {
            LoadedReconstruction::F32(_) => Precision::F32,
            LoadedReconstruction::F64(_) => Precision::F64,
        },
    };
    let source = match (&a.images, a.synthetic) {
        (Some(dir), None) => {
            FrameSource::Images(io::load_image_dir(dir)?.into_iter().map(|(_, i)| i).collect())
        }
        (None, Some(frames)) => FrameSource::Synthetic { frames },
        _ => return Err(Error::invalid("specify exactly one of --images or --synthetic")),
    };
    let config = StreamConfig {
        dmd_rate: a.dmd_rate,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
        clock: if a.wall_clock { ClockMode::WallClock } else { ClockMode::Simulated },
        precision,
        queue_depth: a.queue_depth,
    };
    let outcome = run_stream(&config, &p, &m, source)?;

    if let Some(dir) = &a.frames_out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let depth = pgm_depth(a.depth)?;
        for (i, frame) in outcome.frames.iter().enumerate() {
            let clipped = frame.clipped(0.0, 1.0);
            match a.format.as_str() {
                "pgm" => io::write_pgm(&dir.join(format!("frame_{i:05}.pgm")), &clipped, depth)?,
                "png" => io::write_png(&dir.join(format!("frame_{i:05}.png")), &clipped, depth)?,
                other => return Err(Error::invalid(format!("unknown frame format '{other}'"))),
            }
        }
    }
    if let Some(path) = &a.report {
        let body = serde_json::to_string_pretty(&outcome.report)
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    if json {
        for frame in &outcome.report.frames {
            println!("{}", serde_json::to_string(frame).map_err(|e| Error::Format(e.to_string()))?);
        }
        println!(
            "{}",
            json!({
                "frames": outcome.report.frames.len(),
                "frame_period_ms": outcome.report.frame_period_ms,
                "achieved_fps": outcome.report.achieved_fps,
                "deadline_misses": outcome.report.deadline_misses,
            })
        );
    } else {
        println!(
            "{} frames, period {:.2} ms, achieved {:.2} fps, deadline misses {}",
            outcome.report.frames.len(),
            outcome.report.frame_period_ms,
            outcome.report.achieved_fps,
            outcome.report.deadline_misses
        );
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs, json: bool) -> Result<()> {
    let (loaded, _) = io::load_reconstruction_matrix(&a.matrix)?;
    let p = loaded.as_f64()?;
    let precision: Precision = a.precision.parse()?;
    // deterministic synthetic measurement vector in [-0.5, 0.5)
    let y: Vec<f64> = (0..p.k())
        .map(|i| {
            let x = (a.seed.wrapping_add(i as u64 + 1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    let report = metrics::bench_reconstruct(&p, &y, a.iterations, precision)?;
    let within = report.median_ms < a.budget_ms;
    if json {
        let mut v = serde_json::to_value(&report).map_err(|e| Error::Format(e.to_string()))?;
        v["budget_ms"] = json!(a.budget_ms);
        v["within_budget"] = json!(within);
        println!("{v}");
    } else {
        println!(
            "k={} n={} {}: median {:.2} ms, mean {:.2} ms, p99 {:.2} ms over {} iterations",
            report.k,
            report.n,
            report.precision.as_str(),
            report.median_ms,
            report.mean_ms,
            report.p99_ms,
            report.iterations
        );
        println!(
            "budget {:.1} ms: {}",
            a.budget_ms,
            if within { "within budget" } else { "OVER BUDGET" }
        );
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, json: bool) -> Result<()> {
    let set = io::load_pattern_set(&a.patterns)?;
    let m = assemble_measurement_matrix(&set, a.include_white)?;
    let (w, h) = (m.width(), m.height());
    let images: Vec<(String, Image)> = match &a.images {
        Some(dir) => io::load_image_dir(dir)?
            .into_iter()
            .map(|(name, img)| Ok((name, img.resize_bilinear(w, h)?)))
            .collect::<Result<_>>()?,
        None => testimages::bundled(w, h)
            .into_iter()
            .map(|(n, i)| (n.to_string(), i))
            .collect(),
    };
    if images.is_empty() {
        return Err(Error::invalid("no evaluation images found"));
    }
    let filter = build_gamma(&freq_grid(w, h)?, a.mu, a.eps)?;
    let (p_fdri, _) = precompute_fdri_direct_with(&m, &filter, &PrecomputeConfig::default())?;
    let (p_pinv, _) = precompute_pinv(&m)?;
    let mut sum_fdri = 0.0;
    let mut sum_pinv = 0.0;
    if !json {
        println!("{:<20} {:>12} {:>12}", "image", "fdri dB", "pinv dB");
    }
    for (i, (name, scene)) in images.iter().enumerate() {
        let y = measure(&m, scene, a.noise_sigma, a.seed.wrapping_add(i as u64))?;
        let q_fdri = metrics::evaluate_reconstruction(scene, &p_fdri.apply(y.values())?, 1.0)?;
        let q_pinv = metrics::evaluate_reconstruction(scene, &p_pinv.apply(y.values())?, 1.0)?;
        sum_fdri += q_fdri.psnr_db;
        sum_pinv += q_pinv.psnr_db;
        if json {
            println!(
                "{}",
                json!({"image": name, "psnr_fdri": q_fdri.psnr_db, "psnr_pinv": q_pinv.psnr_db})
            );
        } else {
            println!("{name:<20} {:>12.3} {:>12.3}", q_fdri.psnr_db, q_pinv.psnr_db);
        }
    }
    let n_img = images.len() as f64;
    if json {
        println!(
            "{}",
            json!({
                "mean_psnr_fdri": sum_fdri / n_img,
                "mean_psnr_pinv": sum_pinv / n_img,
                "images": images.len(),
                "mu": a.mu,
            })
        );
    } else {
        println!("{:<20} {:>12.3} {:>12.3}", "mean", sum_fdri / n_img, sum_pinv / n_img);
    }
    Ok(())
}

fn cmd_spectrum(a: SpectrumArgs, json: bool) -> Result<()> {
    let set = io::load_pattern_set(&a.patterns)?;
    let map = metrics::mean_spectrum(&set)?;
    let hf = metrics::high_frequency_fraction(&set, std::f64::consts::PI / 2.0)?;
    if let Some(path) = &a.output {
        io::write_pgm(path, &map.normalized_unit(), PgmDepth::Sixteen)?;
    }
    if json {
        println!(
            "{}",
            json!({"high_frequency_fraction": hf, "k": set.len(), "binarized": set.binarized()})
        );
    } else {
        println!("high-frequency fraction (|w| > pi/2): {hf:.4}");
        if let Some(path) = &a.output {
            println!("wrote spectrum map to {}", path.display());
        }
    }
    Ok(())
}

fn cmd_testimages(a: TestimagesArgs, json: bool) -> Result<()> {
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let depth = pgm_depth(a.depth)?;
    let set = testimages::bundled(a.res, a.res);
    for (name, img) in &set {
        io::write_pgm(&a.out.join(format!("{name}.pgm")), img, depth)?;
    }
    if json {
        println!("{}", json!({"count": set.len(), "res": a.res, "out": a.out}));
    } else {
        println!("wrote {} test scenes at {}x{} to {}", set.len(), a.res, a.res, a.out.display());
    }
    Ok(())
}
