//! Command-line front end: dataset generation, training, evaluation and
//! cost benchmarking over one reproducible configuration surface.

#![forbid(unsafe_code)]

pub mod commands;
pub mod config;
pub mod exit;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{resolve_dataset_path, RunConfig};
use crate::exit::CliError;

#[derive(Parser)]
#[command(
    name = "razn",
    about = "Selective-zoom segmentation over image pyramids",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for internal parallelism (0 = all cores). Results do
    /// not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a pyramid dataset from a generator spec file.
    Generate {
        /// TOML generator spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace an existing dataset.
        #[arg(long)]
        force: bool,
    },
    /// Train the zoom model or one of the baselines.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML run configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in base configuration.
        #[arg(long, default_value = "desk")]
        preset: String,
        /// razn | scale1 | scale2 | ms
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// as-written | loss-decrease
        #[arg(long)]
        reward_sign: Option<String>,
        #[arg(long)]
        checkpoint_interval: Option<u64>,
        /// Continue from a checkpoint, bit-identically.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// train | eval | all
        #[arg(long, default_value = "eval")]
        split: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "desk")]
        preset: String,
        /// Also write predicted masks as single-channel index rasters.
        #[arg(long)]
        save_masks: bool,
    },
    /// Measure relative inference time over sampled patches.
    Bench {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n_patches: usize,
        /// learned | force-break | force-zoom
        #[arg(long, default_value = "learned")]
        policy: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn build_run_config(
    config: Option<&PathBuf>,
    preset: &str,
    baseline: Option<&String>,
    steps: Option<u64>,
    seed: Option<u64>,
    batch_size: Option<usize>,
    reward_sign: Option<&String>,
    checkpoint_interval: Option<u64>,
) -> Result<RunConfig, CliError> {
    let base = RunConfig::preset(preset)?;
    let mut cfg = match config {
        Some(path) => RunConfig::load_file(path, base)?,
        None => base,
    };
    if let Some(b) = baseline {
        cfg.run.baseline = b.clone();
    }
    if let Some(s) = steps {
        cfg.run.steps = s;
    }
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(b) = batch_size {
        cfg.run.batch_size = b;
    }
    if let Some(r) = reward_sign {
        cfg.run.reward_sign = r.clone();
    }
    if let Some(c) = checkpoint_interval {
        cfg.run.checkpoint_interval = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // ignore failure: the global pool may already exist under tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let result: Result<(), CliError> = match &cli.command {
        Command::Generate {
            spec,
            out,
            seed,
            force,
        } => commands::generate::cmd_generate(spec, out, *seed, *force),
        Command::Train {
            dataset,
            out,
            config,
            preset,
            baseline,
            steps,
            seed,
            batch_size,
            reward_sign,
            checkpoint_interval,
            resume,
        } => build_run_config(
            config.as_ref(),
            preset,
            baseline.as_ref(),
            *steps,
            *seed,
            *batch_size,
            reward_sign.as_ref(),
            *checkpoint_interval,
        )
        .and_then(|cfg| {
            commands::train::cmd_train(
                &cfg,
                &resolve_dataset_path(dataset),
                out,
                resume.as_deref(),
            )
        }),
        Command::Eval {
            checkpoint,
            dataset,
            out,
            split,
            config,
            preset,
            save_masks,
        } => build_run_config(config.as_ref(), preset, None, None, None, None, None, None)
            .and_then(|cfg| {
                commands::eval::cmd_eval(
                    checkpoint,
                    &resolve_dataset_path(dataset),
                    out,
                    split,
                    &cfg,
                    *save_masks,
                )
            }),
        Command::Bench {
            checkpoint,
            dataset,
            out,
            n_patches,
            policy,
            seed,
        } => commands::bench::cmd_bench(
            checkpoint,
            &resolve_dataset_path(dataset),
            out,
            *n_patches,
            policy,
            *seed,
        ),
    };

    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.code()
        }
    }
}
