//! `motifrank` — end-to-end pipeline from a timestamped message log to
//! behavioral-motif features, weekly PageRank, and the forecasting
//! experiment battery.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{ModelKind, SynthArgs};
use config::{ConfigFile, Overrides, Settings};
use error::CliError;
use manifest::Stages;
use motifrank::analysis::PValueMethod;

#[derive(Parser, Debug)]
#[command(
    name = "motifrank",
    version,
    about = "Behavioral-motif features, weekly PageRank, and social-position forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that reads a message log. Values
/// left unset fall back to the `--config` file, then to the documented
/// defaults (horizon 20, damping 0.85, k 3, bins 7, trees 500, folds 8,
/// splits 25, holdout 0.25, seed 0).
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Messages file: one `sender receiver unix_timestamp` per line
    #[arg(long)]
    events: Option<PathBuf>,
    /// Optional join-times file: one `user unix_timestamp` per line
    #[arg(long)]
    joins: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (1 reproduces fully sequential execution)
    #[arg(long)]
    jobs: Option<usize>,
    /// Analysis horizon in weeks since the first event
    #[arg(long)]
    horizon: Option<u32>,
    /// PageRank damping factor in (0,1)
    #[arg(long)]
    damping: Option<f64>,
    /// Motif length k
    #[arg(long)]
    k: Option<usize>,
    /// Number of equidistant PageRank bins M
    #[arg(long)]
    bins: Option<usize>,
    /// Trees per random forest
    #[arg(long)]
    trees: Option<usize>,
    /// Cross-validation folds
    #[arg(long)]
    folds: Option<usize>,
    /// Random train/test splits for permutation importance
    #[arg(long)]
    splits: Option<usize>,
    /// Holdout fraction for permutation importance
    #[arg(long)]
    holdout: Option<f64>,
    /// Week whose PageRank provides the labels (default: horizon)
    #[arg(long)]
    label_week: Option<u32>,
    /// Week behavioral features are cut off at (default: label week)
    #[arg(long)]
    cutoff_week: Option<u32>,
    /// Master seed for every randomized stage
    #[arg(long)]
    seed: Option<u64>,
    /// Gradient-descent epochs for the logistic baseline
    #[arg(long)]
    epochs: Option<usize>,
    /// Gradient-descent step size for the logistic baseline
    #[arg(long)]
    step: Option<f64>,
    /// L2 penalty for the logistic baseline
    #[arg(long)]
    l2: Option<f64>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<(Settings, Vec<PathBuf>), CliError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let overrides = Overrides {
            events: self.events.clone(),
            joins: self.joins.clone(),
            horizon: self.horizon,
            damping: self.damping,
            k: self.k,
            bins: self.bins,
            trees: self.trees,
            folds: self.folds,
            splits: self.splits,
            holdout: self.holdout,
            label_week: self.label_week,
            cutoff_week: self.cutoff_week,
            seed: self.seed,
            epochs: self.epochs,
            step: self.step,
            l2: self.l2,
            jobs: self.jobs,
        };
        let settings = overrides.resolve(file);
        let mut inputs = Vec::new();
        if let Some(events) = &settings.events {
            inputs.push(events.clone());
        }
        if let Some(joins) = &settings.joins {
            inputs.push(joins.clone());
        }
        if let Some(config) = &self.config {
            inputs.push(config.clone());
        }
        Ok((settings, inputs))
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Learner to cross-validate
    #[arg(long, value_enum, default_value_t = ModelKind::Rf)]
    model: ModelKind,
}

#[derive(Args, Debug)]
struct SweepKArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Smallest motif length to evaluate
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    /// Largest motif length to evaluate
    #[arg(long, default_value_t = 6)]
    k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum PMethodKind {
    /// Student-t approximation
    T,
    /// Seeded permutation test
    Permutation,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Significance method for the join-date correlation
    #[arg(long, value_enum, default_value_t = PMethodKind::T)]
    p_method: PMethodKind,
    /// Iterations for the permutation test
    #[arg(long, default_value_t = 10_000)]
    p_iterations: usize,
}

#[derive(Args, Debug)]
struct SynthCommandArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a message log into an event store
    Ingest(CommonArgs),
    /// Weekly message volumes (fig1)
    Activity(CommonArgs),
    /// Weekly giant-component PageRank scores and ranks
    Pagerank(CommonArgs),
    /// Per-user motif count matrix at a cutoff week
    Encode(CommonArgs),
    /// Cross-validate one learner on one experiment configuration
    Train(TrainArgs),
    /// MAE against feature cutoff week, motifs vs totals (fig6)
    ForecastCurve(CommonArgs),
    /// MAE across motif lengths (fig7)
    SweepK(SweepKArgs),
    /// Permutation feature importance (fig8)
    Importance(CommonArgs),
    /// Join-date and weekly rank correlations (fig3, fig5)
    Correlate(CorrelateArgs),
    /// New incoming messages by receiver rank (fig4)
    Newmsg(CommonArgs),
    /// Generate a synthetic message log
    Synth(SynthCommandArgs),
    /// Run the whole experiment battery into one directory
    Reproduce(CommonArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage problems exit 2; --help and --version exit 0.
            err.exit();
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(CliError::Data("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|err| CliError::Runtime(format!("cannot configure {jobs} jobs: {err}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => run_common(args, "ingest", commands::run_ingest),
        Command::Activity(args) => run_common(args, "activity", commands::run_activity),
        Command::Pagerank(args) => run_common(args, "pagerank", commands::run_pagerank),
        Command::Encode(args) => run_common(args, "encode", commands::run_encode),
        Command::ForecastCurve(args) => {
            run_common(args, "forecast-curve", commands::run_forecast_curve)
        }
        Command::Importance(args) => run_common(args, "importance", commands::run_importance),
        Command::Newmsg(args) => run_common(args, "newmsg", commands::run_newmsg),
        Command::Reproduce(args) => run_common(args, "reproduce", commands::run_reproduce),
        Command::Train(args) => {
            let (settings, inputs) = args.common.resolve()?;
            configure_jobs(settings.jobs)?;
            commands::probe_out_dir(&args.common.out)?;
            let mut stages = Stages::new();
            commands::run_train(&settings, &args.common.out, args.model, &mut stages)?;
            manifest::write_manifest(
                &args.common.out,
                "train",
                settings.seed,
                serde_json::to_value(&settings)?,
                &inputs,
                stages,
            )
        }
        Command::SweepK(args) => {
            let (settings, inputs) = args.common.resolve()?;
            configure_jobs(settings.jobs)?;
            commands::probe_out_dir(&args.common.out)?;
            let mut stages = Stages::new();
            commands::run_sweep_k(
                &settings,
                &args.common.out,
                args.k_min,
                args.k_max,
                &mut stages,
            )?;
            manifest::write_manifest(
                &args.common.out,
                "sweep-k",
                settings.seed,
                serde_json::to_value(&settings)?,
                &inputs,
                stages,
            )
        }
        Command::Correlate(args) => {
            let (settings, inputs) = args.common.resolve()?;
            configure_jobs(settings.jobs)?;
            commands::probe_out_dir(&args.common.out)?;
            let method = match args.p_method {
                PMethodKind::T => PValueMethod::TApprox,
                PMethodKind::Permutation => PValueMethod::Permutation {
                    iterations: args.p_iterations,
                    seed: settings.seed,
                },
            };
            let mut stages = Stages::new();
            commands::run_correlate(&settings, &args.common.out, method, &mut stages)?;
            manifest::write_manifest(
                &args.common.out,
                "correlate",
                settings.seed,
                serde_json::to_value(&settings)?,
                &inputs,
                stages,
            )
        }
        Command::Synth(args) => {
            commands::probe_out_dir(&args.out)?;
            let mut stages = Stages::new();
            commands::run_synth(&args.synth, &args.out, &mut stages)?;
            manifest::write_manifest(
                &args.out,
                "synth",
                args.synth.seed,
                serde_json::to_value(&args.synth)?,
                &[],
                stages,
            )
        }
    }
}

fn run_common(
    args: CommonArgs,
    name: &str,
    body: impl FnOnce(&Settings, &std::path::Path, &mut Stages) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let (settings, inputs) = args.resolve()?;
    configure_jobs(settings.jobs)?;
    commands::probe_out_dir(&args.out)?;
    let mut stages = Stages::new();
    body(&settings, &args.out, &mut stages)?;
    manifest::write_manifest(
        &args.out,
        name,
        settings.seed,
        serde_json::to_value(&settings)?,
        &inputs,
        stages,
    )
}
