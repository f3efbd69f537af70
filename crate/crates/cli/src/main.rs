//! `oclbcp`: palette building, descriptor encoding, dataset splitting,
//! training, evaluation and synthetic data generation.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "oclbcp", version, about = "Periocular recognition with OC-LBCP and a dual-stream network")]
struct Cli {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the 256-code colour palette.
    Palette(PaletteArgs),
    /// Encode one image into its colourized OC-LBCP descriptor.
    Encode(EncodeArgs),
    /// Scan a dataset and write a manifest with train/test splits.
    Split(SplitArgs),
    /// Train the model of one side.
    Train(TrainArgs),
    /// Evaluate a left/right model pair and write the CMC curve.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for oclbcp::model::Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => Self::Left,
            SideArg::Right => Self::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SubjectSet {
    /// Held-out subjects of the manifest's split.
    Test,
    /// The subjects the models were trained on.
    Train,
}

#[derive(Debug, Args)]
struct PaletteArgs {
    #[arg(long)]
    out: PathBuf,
    /// Embedding dimensionality; only 3 (one per colour channel) is valid.
    #[arg(long, default_value_t = 3)]
    dims: usize,
    /// Also write a 256-wide swatch PNG here.
    #[arg(long)]
    swatch: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EncoderFlags {
    /// LTP dead-zone threshold on the [0, 1] intensity scale.
    #[arg(long)]
    ltp_threshold: Option<f64>,
    #[arg(long)]
    butterworth_order: Option<u32>,
    #[arg(long)]
    butterworth_cutoff: Option<f64>,
    #[arg(long)]
    butterworth_high_boost: Option<f64>,
    #[arg(long)]
    butterworth_low_gain: Option<f64>,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Input image (PNG or PNM).
    input: PathBuf,
    #[arg(long)]
    palette: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the raw 8-bit code map as a grayscale PNG.
    #[arg(long)]
    codes: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderFlags,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Dataset root laid out as <subject>/{left,right}/*.png.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Manifest JSON to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Number of training subjects; defaults to 60% of the subjects.
    #[arg(long)]
    train_subjects: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    /// Narrow layers that train on a CPU in minutes.
    Desk,
    /// Full-width layers.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ArchArg {
    Dual,
    Rgb,
    Descriptor,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Manifest JSON (trains on its training subjects) or dataset root
    /// (trains on every subject).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    side: SideArg,
    #[arg(long)]
    palette: Option<PathBuf>,
    /// Checkpoint path; the manifest goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, value_enum)]
    scale: Option<Scale>,
    #[arg(long, value_enum)]
    arch: Option<ArchArg>,
    #[command(flatten)]
    encoder: EncoderFlags,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Manifest JSON with splits, or a dataset root (evaluates all subjects).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    model_left: Option<PathBuf>,
    #[arg(long)]
    model_right: Option<PathBuf>,
    #[arg(long)]
    palette: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Which subjects to enrol and probe.
    #[arg(long, value_enum, default_value = "test")]
    subjects: SubjectSet,
    /// Gallery/probe repetitions when the manifest has none for the chosen
    /// subjects.
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Score with 1 − cos and pick the smallest fused score.
    #[arg(long)]
    dissimilarity: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output dataset root.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn init_logging(quiet: bool) {
    let default = if quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format(|buf, record| writeln!(buf, "[{}] {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
}

fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var("OCLBCP_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => anyhow::bail!("OCLBCP_THREADS must be a positive integer, got {v:?}"),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    let threads = threads_from_env()?;
    oclbcp::parallel::init_threads(threads);
    match cli.command {
        Command::Palette(a) => commands::palette(a),
        Command::Encode(a) => commands::encode(a, &file),
        Command::Split(a) => commands::split(a, &file),
        Command::Train(a) => commands::train(a, &file, threads),
        Command::Eval(a) => commands::eval(a, &file, threads),
        Command::Synth(a) => commands::synth(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", line.trim());
            return ExitCode::from(2);
        }
    };
    init_logging(cli.quiet);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
