//! `wormline`: command-line front end for the worm detection pipeline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wormline::eval::{EvalMode, RangeMetric};

#[derive(Parser)]
#[command(
    name = "wormline",
    version,
    about = "Untangle, reconstruct and evaluate worm detections"
)]
struct Cli {
    /// Pipeline configuration (JSON). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More progress output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Flags that override fields of the configuration file.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    #[arg(long)]
    pub skeleton_threshold: Option<f64>,
    #[arg(long)]
    pub endpoint_threshold: Option<f64>,
    #[arg(long)]
    pub match_radius: Option<f64>,
    #[arg(long)]
    pub direction_window: Option<usize>,
    #[arg(long)]
    pub min_segment_len: Option<usize>,
    /// Maximum steering angle for a join, radians.
    #[arg(long)]
    pub max_pair_angle: Option<f64>,
    #[arg(long)]
    pub canny_sigma: Option<f64>,
    #[arg(long)]
    pub canny_low: Option<f64>,
    #[arg(long)]
    pub canny_high: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Probability maps → untangled worm skeletons (detections JSON).
    Untangle {
        #[arg(long)]
        skel: PathBuf,
        #[arg(long)]
        ep: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Detections + image → instance-label PNG and per-worm masks.
    Reconstruct {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// 16-bit instance-label PNG.
        #[arg(long, short)]
        out: PathBuf,
        /// Also write one binary mask per worm into this directory.
        #[arg(long)]
        masks_dir: Option<PathBuf>,
        /// Visualisation of skeletons and masks over the image.
        #[arg(long)]
        overlay: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare predictions with ground truth. Skeleton mode reads detection
    /// JSON, mask mode reads instance-label PNGs; two directories are
    /// compared file by file.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value = "mask")]
        mode: EvalMode,
        /// Comma-separated F-score thresholds.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Skeleton matching range, pixels.
        #[arg(long)]
        range: Option<f64>,
        #[arg(long)]
        range_metric: Option<RangeMetric>,
        /// Write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Slack weight map of a ground-truth mask (16-bit PNG + JSON sidecar).
    Weightmap {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, default_value_t = 4.0)]
        beta: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Generate a synthetic scene, a corpus, or regenerate from a manifest.
    Synth(commands::SynthArgs),
    /// Untangle + reconstruct, for one scene directory or a batch.
    Pipeline {
        /// Directory holding prob_skel.png, prob_ep.png and image.png; with
        /// --batch, a directory of such directories.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        batch: bool,
        /// Parallel jobs in batch mode.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        overlay: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Untangle {
            skel,
            ep,
            out,
            overrides,
        } => commands::untangle(&commands::load_config(config, &overrides)?, &skel, &ep, &out),
        Command::Reconstruct {
            image,
            detections,
            out,
            masks_dir,
            overlay,
            overrides,
        } => commands::reconstruct(
            &commands::load_config(config, &overrides)?,
            &image,
            &detections,
            &out,
            masks_dir.as_deref(),
            overlay.as_deref(),
        ),
        Command::Eval {
            pred,
            gt,
            mode,
            thresholds,
            range,
            range_metric,
            json,
        } => {
            let mut cfg = commands::load_config(config, &Overrides::default())?;
            if let Some(t) = thresholds {
                cfg.eval_thresholds = t;
            }
            if let Some(r) = range {
                cfg.eval_range = r;
            }
            if let Some(m) = range_metric {
                cfg.range_metric = m;
            }
            cfg.validate()?;
            commands::eval(&cfg, &pred, &gt, mode, json.as_deref())
        }
        Command::Weightmap {
            gt,
            sigma,
            gamma,
            beta,
            out,
        } => commands::weightmap(&gt, sigma, gamma, beta, &out),
        Command::Synth(args) => commands::synth(&args),
        Command::Pipeline {
            input,
            out,
            batch,
            jobs,
            overlay,
            overrides,
        } => {
            let cfg = commands::load_config(config, &overrides)?;
            if batch {
                commands::pipeline_batch(&cfg, &input, &out, jobs, overlay)
            } else {
                commands::pipeline_one(&cfg, &input, &out, overlay)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let contract = err
                .chain()
                .find_map(|e| e.downcast_ref::<wormline::Error>())
                .is_some_and(wormline::Error::is_input_contract);
            ExitCode::from(if contract { 2 } else { 1 })
        }
    }
}
