//! `coldplate` — thermal workbench for pouch-cell cold plates.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 solver error, 4 I/O error,
//! 5 training divergence.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand, ValueEnum};
use commands::SplitChoice;
use coldplate_core::pipeline::TrainMode;
use config::RunConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "coldplate",
    version,
    about = "Steady-state cold-plate solver and neural surrogate workbench"
)]
struct Cli {
    /// Key=value settings file (see README for the key list).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for dataset generation and batch evaluation; 1 keeps
    /// everything strictly sequential. Results are identical either way.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample channel geometries, solve each, and write a PCTD dataset.
    Generate {
        /// Number of samples.
        #[arg(long)]
        n: usize,
        /// Geometry-sampling seed.
        #[arg(long)]
        seed: u64,
        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one geometry and report the temperature field.
    Solve {
        /// Mask source: a text-mask file, `all-ones`, `all-zeros`, or a
        /// family spec such as `straight:count=2,width=10,margin=10`.
        #[arg(long)]
        mask: String,
        /// Write the field as CSV.
        #[arg(long)]
        out_field: Option<PathBuf>,
        /// Write the field as a PPM heatmap.
        #[arg(long)]
        out_image: Option<PathBuf>,
    },
    /// Train a surrogate on a PCTD dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Training mode.
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out_model: PathBuf,
        /// Per-epoch curves CSV.
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Mini-batch size.
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        w1: Option<f64>,
        #[arg(long)]
        w2: Option<f64>,
        #[arg(long)]
        w3: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained model on a dataset split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Which samples to score.
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Per-sample metrics CSV.
        #[arg(long)]
        report: PathBuf,
        /// Directory for per-sample signed-error heatmaps.
        #[arg(long)]
        error_maps: Option<PathBuf>,
        /// Seed of the training run whose split should be reproduced.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the data-driven and physics-informed surrogates side by side.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        w1: Option<f64>,
        #[arg(long)]
        w2: Option<f64>,
        #[arg(long)]
        w3: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Data,
    Piml,
    PinnSingle,
}

impl From<ModeArg> for TrainMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Data => TrainMode::DataDriven,
            ModeArg::Piml => TrainMode::Piml,
            ModeArg::PinnSingle => TrainMode::PinnSingle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Test,
    Train,
    All,
}

impl From<SplitArg> for SplitChoice {
    fn from(split: SplitArg) -> Self {
        match split {
            SplitArg::Test => SplitChoice::Test,
            SplitArg::Train => SplitChoice::Train,
            SplitArg::All => SplitChoice::All,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads < 1 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))?;

    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.train.batch_parallel = cli.threads > 1;

    match cli.command {
        Command::Generate { n, seed, out } => commands::generate(&config, n, seed, &out),
        Command::Solve {
            mask,
            out_field,
            out_image,
        } => commands::solve(&config, &mask, out_field.as_deref(), out_image.as_deref()),
        Command::Train {
            data,
            mode,
            out_model,
            curves,
            epochs,
            lr,
            batch,
            w1,
            w2,
            w3,
            seed,
        } => {
            apply(&mut config.train.epochs, epochs);
            apply(&mut config.train.lr, lr);
            apply(&mut config.train.batch_size, batch);
            apply(&mut config.train.weights.w1, w1);
            apply(&mut config.train.weights.w2, w2);
            apply(&mut config.train.weights.w3, w3);
            apply(&mut config.train.seed, seed);
            commands::train_cmd(&config, &data, mode.into(), &out_model, &curves)
        }
        Command::Eval {
            model,
            data,
            split,
            report,
            error_maps,
            seed,
        } => {
            apply(&mut config.train.seed, seed);
            commands::eval_cmd(
                &config,
                &model,
                &data,
                split.into(),
                &report,
                error_maps.as_deref(),
            )
        }
        Command::Compare {
            data,
            out_dir,
            epochs,
            seed,
            w1,
            w2,
            w3,
        } => {
            apply(&mut config.train.epochs, epochs);
            apply(&mut config.train.seed, seed);
            apply(&mut config.train.weights.w1, w1);
            apply(&mut config.train.weights.w2, w2);
            apply(&mut config.train.weights.w3, w3);
            commands::compare_cmd(&config, &data, &out_dir)
        }
    }
}

fn apply<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
