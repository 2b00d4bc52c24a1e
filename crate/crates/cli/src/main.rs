//! Command-line front end: compress, decompress, evaluate, tune, bench.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 corrupt archive.

mod bench;
mod record;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wecg::codec::{CodecParams, Mode};
use wecg::container::{ArchiveOptions, EntropyMode, IndexMode};
use wecg::metrics;
use wecg::signal_io::{self, Signal};
use wecg::tuner::{self, TuneSpec};

use record::InputOpts;

#[derive(Parser)]
#[command(name = "wecg", version, about = "Lossy wavelet codec for ECG-like records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a record into a .wecg archive.
    Compress(CompressArgs),
    /// Reconstruct a record from an archive and write it as text.
    Decompress(DecompressArgs),
    /// Compare a record against an archive and report quality metrics.
    Evaluate(EvaluateArgs),
    /// Search for the quantization step that hits a target PRD.
    Tune(TuneArgs),
    /// Batch-benchmark records, emitting per-record CSV rows.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    A,
    B,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::A => Mode::A,
            ModeArg::B => Mode::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EntropyArg {
    None,
    Huffman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IndexArg {
    Delta,
    Rl,
}

#[derive(Debug, Clone, Copy, Args)]
struct StorageOpts {
    /// Entropy coding applied to the stored arrays.
    #[arg(long, value_enum, default_value_t = EntropyArg::None)]
    entropy: EntropyArg,

    /// How nonzero-coefficient positions are stored.
    #[arg(long, value_enum, default_value_t = IndexArg::Delta)]
    index: IndexArg,
}

impl StorageOpts {
    fn archive_options(&self, mode: Mode) -> ArchiveOptions {
        ArchiveOptions {
            entropy_mode: match self.entropy {
                EntropyArg::None => EntropyMode::None,
                EntropyArg::Huffman => EntropyMode::Huffman,
            },
            index_mode: match self.index {
                IndexArg::Delta => IndexMode::Delta,
                IndexArg::Rl => IndexMode::RunLength,
            },
            mode,
        }
    }
}

#[derive(Args)]
struct CompressArgs {
    /// Record to compress.
    #[arg(short, long)]
    input: PathBuf,

    /// Archive path; defaults to the input with a .wecg extension.
    #[arg(short, long)]
    output: Option<PathBuf>,

    #[command(flatten)]
    input_opts: InputOpts,

    /// Selection approach: a = energy threshold, b = quantize everything.
    #[arg(long, value_enum, default_value_t = ModeArg::A)]
    mode: ModeArg,

    /// Quantization step.
    #[arg(long)]
    delta: f64,

    /// Pre-quantization target PRD in percent (mode a).
    #[arg(long, default_value_t = 0.0)]
    prd0: f64,

    /// Wavelet decomposition levels.
    #[arg(long, default_value_t = 4)]
    levels: usize,

    #[command(flatten)]
    storage: StorageOpts,
}

#[derive(Args)]
struct DecompressArgs {
    /// Archive to decode.
    #[arg(short, long)]
    input: PathBuf,

    /// Output text file; defaults to the archive path with .txt appended.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Original record.
    #[arg(short, long)]
    input: PathBuf,

    /// Archive to evaluate against the original.
    #[arg(short, long)]
    archive: PathBuf,

    #[command(flatten)]
    input_opts: InputOpts,

    /// Segment length for local prd statistics.
    #[arg(long, default_value_t = 2000)]
    segment_length: usize,

    /// Emit one CSV row instead of key=value lines.
    #[arg(long)]
    csv: bool,

    /// Write per-segment prd(q) rows (q,prd) to this file.
    #[arg(long)]
    segments_out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    /// Records forming the corpus (one shared delta is chosen).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[command(flatten)]
    input_opts: InputOpts,

    /// Target (mean) PRD in percent.
    #[arg(long)]
    target_prd: f64,

    #[arg(long, value_enum, default_value_t = ModeArg::A)]
    mode: ModeArg,

    /// prd0 = fraction * target (mode a).
    #[arg(long, default_value_t = 0.75)]
    prd0_fraction: f64,

    /// Accepted |achieved - target| as a fraction of the target.
    #[arg(long, default_value_t = 0.005)]
    tolerance: f64,

    #[arg(long, default_value_t = 40)]
    max_iters: usize,

    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Records to benchmark.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[command(flatten)]
    input_opts: InputOpts,

    /// Fixed quantization step (alternative to --target-prd).
    #[arg(long)]
    delta: Option<f64>,

    /// Tune one shared delta so the corpus mean PRD hits this target.
    #[arg(long)]
    target_prd: Option<f64>,

    #[arg(long, value_enum, default_value_t = ModeArg::A)]
    mode: ModeArg,

    /// Explicit prd0 in percent (with --delta, mode a).
    #[arg(long, default_value_t = 0.0)]
    prd0: f64,

    /// prd0 = fraction * target (with --target-prd, mode a).
    #[arg(long, default_value_t = 0.75)]
    prd0_fraction: f64,

    #[arg(long, default_value_t = 4)]
    levels: usize,

    #[command(flatten)]
    storage: StorageOpts,

    /// Average timings over this many runs per record.
    #[arg(long, default_value_t = 1)]
    repeat: usize,

    /// Process records concurrently on this many threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Segment length for local prd statistics.
    #[arg(long, default_value_t = 2000)]
    segment_length: usize,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Io(std::io::Error),
    Archive(wecg::Error),
    Other(wecg::Error),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io(_) => 3,
            AppError::Archive(_) => 4,
            AppError::Other(_) => 1,
        }
    }

    /// Force archive-context classification (exit code 4) for any codec
    /// error raised while reading an archive.
    fn archive(err: wecg::Error) -> Self {
        match err {
            wecg::Error::Io(e) => AppError::Io(e),
            other => AppError::Archive(other),
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(msg) => write!(f, "{msg}"),
            AppError::Io(e) => write!(f, "{e}"),
            AppError::Archive(e) | AppError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

impl From<wecg::Error> for AppError {
    fn from(e: wecg::Error) -> Self {
        use wecg::Error::*;
        match e {
            Io(inner) => AppError::Io(inner),
            InvalidParam(msg) => AppError::Usage(msg),
            BadMagic | VersionMismatch(_) | ChecksumMismatch | Inflate(_)
            | CorruptArchive(_) | CorruptStream(_) => AppError::Archive(e),
            other => AppError::Other(other),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(args) => cmd_compress(args),
        Command::Decompress(args) => cmd_decompress(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn cmd_compress(args: CompressArgs) -> Result<(), AppError> {
    let signal = record::load_signal(&args.input, &args.input_opts)?;
    let params = CodecParams {
        mode: args.mode.into(),
        delta: args.delta,
        prd0_percent: args.prd0,
        levels: args.levels,
    };
    let options = args.storage.archive_options(params.mode);
    let bytes = wecg::compress(&signal, &params, &options)?;
    let output = args
        .output
        .unwrap_or_else(|| args.input.with_extension("wecg"));
    std::fs::write(&output, &bytes)?;
    let cr = metrics::compression_ratio(signal.len(), signal.adc_bits, bytes.len());
    println!("archive={}", output.display());
    println!("bytes={}", bytes.len());
    println!("cr={cr:.4}");
    Ok(())
}

fn cmd_decompress(args: DecompressArgs) -> Result<(), AppError> {
    let bytes = std::fs::read(&args.input)?;
    let signal = wecg::decompress(&bytes).map_err(AppError::archive)?;
    let output = args.output.unwrap_or_else(|| {
        let mut p = args.input.clone();
        p.set_extension("txt");
        p
    });
    std::fs::write(&output, signal_io::write_text(&signal))?;
    println!("samples={}", signal.len());
    println!("output={}", output.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), AppError> {
    let original = record::load_signal(&args.input, &args.input_opts)?;
    let bytes = std::fs::read(&args.archive)?;
    let reconstructed = wecg::decompress(&bytes).map_err(AppError::archive)?;
    if reconstructed.len() != original.len() {
        return Err(AppError::Usage(format!(
            "archive decodes to {} samples but the record has {}",
            reconstructed.len(),
            original.len()
        )));
    }
    let report = metrics::quality_report(&original, &reconstructed, bytes.len(), args.segment_length)?;
    if args.csv {
        println!("{}", metrics::QualityReport::csv_header());
        println!("{}", report.to_csv_row());
    } else {
        print!("{}", report.to_key_values());
        if args.input_opts.baseline != 0.0 {
            // the same approximation scored against the unshifted record
            let raw = record::load_signal(
                &args.input,
                &InputOpts {
                    baseline: 0.0,
                    ..args.input_opts.clone()
                },
            )?;
            let shifted: Vec<f64> = reconstructed
                .samples
                .iter()
                .map(|v| v + args.input_opts.baseline)
                .collect();
            let prd_raw = metrics::prd(&raw.samples, &shifted)?;
            println!("prd_without_baseline={prd_raw:.6}");
        }
    }
    if let Some(path) = args.segments_out {
        let local = metrics::local_prd(
            &original.samples,
            &reconstructed.samples,
            args.segment_length.min(original.len()),
        )?;
        let mut out = String::from("q,prd\n");
        for (q, value) in local.per_segment.iter().enumerate() {
            if let Some(v) = value {
                out.push_str(&format!("{},{v:.6}\n", q + 1));
            }
        }
        std::fs::write(path, out)?;
    }
    Ok(())
}

fn cmd_tune(args: TuneArgs) -> Result<(), AppError> {
    let records = load_all(&args.inputs, &args.input_opts)?;
    let mut spec = TuneSpec::new(args.target_prd, args.mode.into());
    spec.prd0_fraction = args.prd0_fraction;
    spec.tolerance = args.tolerance;
    spec.max_iters = args.max_iters;
    spec.levels = args.levels;
    let outcome = tuner::tune_corpus(&records, &spec)?;
    println!("delta={}", outcome.params.delta);
    println!("prd0={}", outcome.params.prd0_percent);
    println!("achieved_prd={:.6}", outcome.achieved_prd);
    println!("converged={}", outcome.converged);
    println!("iterations={}", outcome.iterations);
    for (record, prd) in records.iter().zip(&outcome.per_record_prd) {
        println!("record_prd {}={prd:.6}", record.record_id);
    }
    if !outcome.converged {
        eprintln!(
            "warning: tuner stopped at PRD {:.4} (target {:.4})",
            outcome.achieved_prd, args.target_prd
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), AppError> {
    let records = load_all(&args.inputs, &args.input_opts)?;
    let mode: Mode = args.mode.into();

    let params = match (args.delta, args.target_prd) {
        (Some(delta), None) => CodecParams {
            mode,
            delta,
            prd0_percent: args.prd0,
            levels: args.levels,
        },
        (None, Some(target)) => {
            let mut spec = TuneSpec::new(target, mode);
            spec.prd0_fraction = args.prd0_fraction;
            spec.levels = args.levels;
            let outcome = tuner::tune_corpus(&records, &spec)?;
            if !outcome.converged {
                eprintln!(
                    "warning: tuner stopped at PRD {:.4} (target {target:.4})",
                    outcome.achieved_prd
                );
            }
            eprintln!(
                "tuned delta={} prd0={}",
                outcome.params.delta, outcome.params.prd0_percent
            );
            outcome.params
        }
        _ => {
            return Err(AppError::Usage(
                "exactly one of --delta or --target-prd is required".into(),
            ))
        }
    };
    params.validate()?;

    let options = args.storage.archive_options(mode);
    let rows = bench::bench_corpus(
        &records,
        &params,
        &options,
        args.repeat,
        args.segment_length,
        args.jobs,
    )?;
    let (mean, std) = bench::footer_rows(&rows);

    let mut csv = String::new();
    csv.push_str(bench::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    csv.push_str(&mean.to_csv());
    csv.push('\n');
    csv.push_str(&std.to_csv());
    csv.push('\n');

    match args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn load_all(paths: &[PathBuf], opts: &InputOpts) -> Result<Vec<Signal>, AppError> {
    paths
        .iter()
        .map(|p| record::load_signal(Path::new(p), opts))
        .collect()
}
