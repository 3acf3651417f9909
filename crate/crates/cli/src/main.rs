//! `fulcal`: generate data, fit calibrated forecasters, predict distributions,
//! evaluate them and tune the cost-sensitive point rule.
//!
//! Exit codes: 0 on success, 2 for usage, input and format errors, 3 for
//! contract violations. Every output is accompanied by
//! `<out>.manifest.json`.

mod commands;
mod error;
mod manifest;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fulcal::DecisionRuleConfig;

use commands::{parse_levels, EvalArgs, FitArgs, GenArgs, PredictArgs, TauChoice, TuneArgs};
use error::{CliError, CliResult};
use model::Method;

#[derive(Parser)]
#[command(name = "fulcal", version, about = "Calibrated distributional forecasts for delivery-time deviations")]
struct Cli {
    /// Worker threads for predict/eval (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset.
    Gen(GenCmd),
    /// Fit a calibrated forecaster.
    Fit(FitCmd),
    /// Write one predictive distribution per row as JSON lines.
    Predict(PredictCmd),
    /// Score distributions against labels.
    Eval(EvalCmd),
    /// Tune the quantile level of the cost-sensitive point rule.
    Tune(TuneCmd),
}

#[derive(Args)]
struct GenCmd {
    /// Generator config (JSON); missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitCmd {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 4)]
    folds: usize,
    /// Mondrian bins for mcps and 2stg-mcps.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// External point scores, one per data row (scps/mcps only).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Clip labels into [-10, 10] instead of rejecting them.
    #[arg(long)]
    clip_labels: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictCmd {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Fixed tau in [0, 1], or random:SEED for one draw per row.
    #[arg(long, default_value = "0.5")]
    tau: TauChoice,
    /// External point scores for models fitted with --scores.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    dists: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Central interval levels in percent.
    #[arg(long, default_value = "80,90,95", value_parser = parse_levels)]
    levels: std::vec::Vec<f64>,
    /// Point rule: a `tune` report or a rule JSON. Defaults to median/argmax.
    #[arg(long)]
    rule: Option<PathBuf>,
    #[arg(long)]
    clip_labels: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct TuneCmd {
    #[arg(long)]
    dists: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    grid_step: f64,
    #[arg(long)]
    clip_labels: bool,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen(c) => commands::gen(&GenArgs {
            config: c.config,
            seed: c.seed,
            out: c.out,
        }),
        Command::Fit(c) => commands::fit(&FitArgs {
            method: c.method,
            data: c.data,
            folds: c.folds,
            bins: c.bins,
            scores: c.scores,
            clip_labels: c.clip_labels,
            out: c.out,
        }),
        Command::Predict(c) => commands::predict(&PredictArgs {
            model: c.model,
            data: c.data,
            tau: c.tau,
            scores: c.scores,
            out: c.out,
        }),
        Command::Eval(c) => commands::eval(&EvalArgs {
            dists: c.dists,
            labels: c.labels,
            levels: c.levels,
            rule: c.rule,
            clip_labels: c.clip_labels,
            out: c.out,
        }),
        Command::Tune(c) => commands::tune(&TuneArgs {
            dists: c.dists,
            labels: c.labels,
            config: DecisionRuleConfig {
                beta: c.beta,
                gamma: c.gamma,
                grid_step: c.grid_step,
            },
            clip_labels: c.clip_labels,
            out: c.out,
        }),
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
