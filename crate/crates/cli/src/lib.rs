//! The `vitalscan` command line.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 backend or runtime failure,
//! 4 I/O failure.

mod backend;
mod commands;
mod error;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use backend::{BackendArgs, BackendKind};
pub use error::CliError;
pub use io::{list_images, DetectionLine};

#[derive(Debug, Parser)]
#[command(
    name = "vitalscan",
    version,
    about = "Read vital signs from photographs of bedside monitors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract readings from an image or a directory of images.
    Extract(ExtractArgs),
    /// Watch a directory and append one JSON line per new image.
    Ingest(IngestArgs),
    /// Generate a synthetic monitor corpus with ground truth.
    Synth(SynthArgs),
    /// Write the built-in glyph atlas as PNG templates.
    Atlas(AtlasArgs),
    /// Score predictions against a corpus manifest.
    Eval(EvalArgs),
    /// Time repeated pipeline runs over a directory.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Confidence threshold in (0, 1].
    #[arg(long, default_value_t = 0.8)]
    pub tau: f64,
    /// Minimum recognition score.
    #[arg(long)]
    pub min_score: Option<f64>,
    /// Digitizer TOML overriding gates, corrections or min_score.
    #[arg(long, value_name = "FILE")]
    pub gates: Option<PathBuf>,
    /// Margin around each ROI before recognition, px.
    #[arg(long, default_value_t = 2)]
    pub crop_pad: u32,
    /// Detect on the photograph instead of the rectified screen.
    #[arg(long)]
    pub no_rectify: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Image file or directory of PNG/JPEG images.
    pub input: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write JSON lines here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write raw detections, one JSON line per image.
    #[arg(long, value_name = "FILE")]
    pub detections: Option<PathBuf>,
    /// Zero all timings so output depends only on the inputs.
    #[arg(long)]
    pub redact_timings: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory to watch.
    pub watch_dir: PathBuf,
    /// JSONL log to append to.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Names already processed; defaults to `<out>.processed`.
    #[arg(long, value_name = "FILE")]
    pub processed: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Polling interval, ms.
    #[arg(long, default_value_t = 500)]
    pub poll_ms: u64,
    /// Process what is present now, then exit.
    #[arg(long)]
    pub once: bool,
    #[arg(long)]
    pub redact_timings: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for NNNN.png and manifest.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Images with a monitor.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Additional scenes without a monitor.
    #[arg(long, default_value_t = 0)]
    pub absent: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Upper bound of the sensor noise sigma, in 8-bit levels.
    #[arg(long, default_value_t = 10.0)]
    pub max_noise: f64,
    /// Glyph atlas directory; the built-in font when omitted.
    #[arg(long, value_name = "DIR")]
    pub atlas: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AtlasArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    /// Screen localization: predicted quadrilateral against the true one.
    Seg,
    /// ROI detection, from `extract --detections` output.
    Det,
    /// Field-level accuracy, from `extract` output.
    Ocr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub kind: EvalKind,
    /// Predictions (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Corpus manifest.json.
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    /// Digitizer TOML used for canonicalization (ocr only).
    #[arg(long, value_name = "FILE")]
    pub gates: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of images.
    pub input: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Measured runs per image.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Discarded runs before measuring.
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vitalscan: {e}");
            e.exit_code()
        }
    }
}
