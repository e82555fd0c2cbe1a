//! Batch command-line front end: `train`, `eval`, `bench`, `data`, `plot`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 data
//! error, 4 numeric failure.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::Downloader;

#[derive(Debug, Parser)]
#[command(name = "ltcse", version, about = "Continuous-time recurrent cells: training, evaluation and model accounting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model kind on a task for several seeds.
    Train(TrainArgs),
    /// Score a checkpoint on a data split.
    Eval(EvalArgs),
    /// Parameter, operation and memory accounting.
    Bench(BenchArgs),
    /// Fetch, generate or inspect datasets.
    Data(DataArgs),
    /// Render run curves and bench totals as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Never access the network.
    #[arg(long)]
    pub offline: bool,
    /// Dataset cache directory (default: $LTCSE_CACHE or ~/.cache/ltcse).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// occupancy, har, traffic, power, ozone, or synth:<task>.
    #[arg(long)]
    pub task: Option<String>,
    /// ltc, ctrnn, node, ctgru, lstm or gru.
    #[arg(long)]
    pub model: Option<String>,
    /// fused, euler or rk4.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub unfolds: Option<usize>,
    /// identity, linear or affine.
    #[arg(long)]
    pub mapping: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Allow a learning rate outside [0.001, 0.01].
    #[arg(long)]
    pub lr_override: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub bptt: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Worker threads for the repeated runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// best-valid or final.
    #[arg(long)]
    pub test_weights: Option<String>,
    #[arg(long)]
    pub synth_rows: Option<usize>,
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// JSON configuration map; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, default_value = "runs/latest")]
    pub out: PathBuf,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the task stored in the checkpoint.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Summary CSV to append to (default: summary.csv beside the checkpoint).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchWhat {
    Params,
    Flops,
    Memory,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    pub what: BenchWhat,
    /// Repeatable; defaults to the five tabulated kinds.
    #[arg(long)]
    pub model: Vec<String>,
    /// Hidden units.
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// Input features.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// CT-GRU time scales.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub outputs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 32)]
    pub steps: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[command(subcommand)]
    pub action: DataAction,
}

#[derive(Debug, Clone, Subcommand)]
pub enum DataAction {
    /// Download and convert a UCI dataset into the cache.
    Fetch {
        #[arg(long)]
        task: String,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Write a synthetic fixture as a canonical CSV.
    Synth {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = crate::data::DEFAULT_SYNTH_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Row, feature and window counts of a task.
    Info {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 32)]
        bptt: usize,
        #[arg(long, default_value_t = crate::data::DEFAULT_SYNTH_ROWS)]
        rows: usize,
        #[command(flatten)]
        source: SourceArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Run directories holding run_<seed>.csv files.
    #[arg(long, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Bench CSV to chart by total bytes.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Process-level dependencies, injectable for tests.
pub struct Env<'a> {
    pub downloader: &'a dyn Downloader,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I, env: &mut Env<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { env.err } else { env.out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match commands::execute(cli.command, env) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(env.err, "error: {e}");
            e.exit_code()
        }
    }
}
