//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fulcal::data::{generate_synthetic, read_dataset, write_dataset, ReadOptions, SyntheticConfig};
use fulcal::decision::{tune_eta, DecisionRuleConfig};
use fulcal::dist::json::{from_json, to_json};
use fulcal::learners::load_external_scores;
use fulcal::metrics::evaluate;
use fulcal::{Dataset, Distribution, PointRule, TuningReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{io_error, CliError, CliResult};
use crate::manifest::RunManifest;
use crate::model::{self, Method, ModelFile};

pub const SEED_ENV: &str = "FULCAL_SEED";

/// Seed from the `FULCAL_SEED` environment variable, if set.
pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `--tau` value: a fixed level or a seeded per-row draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauChoice {
    Fixed(f64),
    Random(Option<u64>),
}

impl FromStr for TauChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "random" {
            return Ok(TauChoice::Random(None));
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(|v| TauChoice::Random(Some(v)))
                .map_err(|_| format!("invalid seed in {s:?}"));
        }
        match s.parse::<f64>() {
            Ok(t) if (0.0..=1.0).contains(&t) => Ok(TauChoice::Fixed(t)),
            _ => Err(format!("expected a number in [0, 1] or random:SEED, got {s:?}")),
        }
    }
}

/// Interval levels given in percent, e.g. `80,90,95`.
pub fn parse_levels(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|part| match part.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v < 100.0 => Ok(v / 100.0),
            _ => Err(format!("interval level {part:?} must be a percentage in (0, 100)")),
        })
        .collect()
}

fn read_labeled(path: &Path, clip: bool) -> CliResult<Dataset> {
    read_dataset(path, ReadOptions { clip }).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn load_scores(path: &Path, rows: usize) -> CliResult<Vec<f64>> {
    load_external_scores(path, rows).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub struct GenArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// Seed precedence: `--seed`, then the config file, then `FULCAL_SEED`,
/// then the built-in default.
pub fn gen(args: &GenArgs) -> CliResult<()> {
    let mut value = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            serde_json::from_str::<serde_json::Value>(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?
        }
        None => json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::input("generator config must be a JSON object"))?;
    if let Some(seed) = args.seed {
        obj.insert("seed".into(), seed.into());
    } else if !obj.contains_key("seed") {
        if let Some(seed) = env_seed()? {
            obj.insert("seed".into(), seed.into());
        }
    }
    let config: SyntheticConfig =
        serde_json::from_value(value).map_err(|e| CliError::input(format!("generator config: {e}")))?;
    let data: Dataset = generate_synthetic(&config)?;
    write_dataset(&data, &args.out)?;
    let mut manifest = RunManifest::new("gen", &config, Some(config.seed))?;
    if let Some(p) = &args.config {
        manifest = manifest.input(p)?;
    }
    manifest.finish(&args.out)
}

pub struct FitArgs {
    pub method: Method,
    pub data: PathBuf,
    pub folds: usize,
    pub bins: usize,
    pub scores: Option<PathBuf>,
    pub clip_labels: bool,
    pub out: PathBuf,
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let data = read_labeled(&args.data, args.clip_labels)?;
    let external = args.scores.as_deref().map(|p| load_scores(p, data.len())).transpose()?;
    let file = model::fit(args.method, &data, args.folds, args.bins, external.as_deref())?;
    write_json(&args.out, &file)?;
    let config = json!({
        "method": args.method,
        "folds": args.folds,
        "bins": args.bins,
        "external_scores": args.scores.is_some(),
        "clip_labels": args.clip_labels,
    });
    let mut manifest = RunManifest::new("fit", &config, None)?.input(&args.data)?;
    if let Some(p) = &args.scores {
        manifest = manifest.input(p)?;
    }
    manifest.finish(&args.out)
}

pub struct PredictArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub tau: TauChoice,
    pub scores: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let file = ModelFile::load(&args.model)?;
    let data = read_labeled(&args.data, true)?;
    if data.dim() != file.n_features {
        return Err(CliError::input(format!(
            "{}: model expects {} features, data has {}",
            args.data.display(),
            file.n_features,
            data.dim()
        )));
    }
    let scores = match (&args.scores, file.needs_external_scores()) {
        (Some(p), true) => Some(load_scores(p, data.len())?),
        (None, false) => None,
        (None, true) => return Err(CliError::input("model was fitted on external scores; pass --scores")),
        (Some(_), false) => return Err(CliError::input("--scores given but the model scores rows itself")),
    };
    let (taus, seed) = match args.tau {
        TauChoice::Fixed(t) => (vec![t; data.len()], None),
        TauChoice::Random(seed) => {
            let seed = match seed {
                Some(s) => s,
                None => env_seed()?.ok_or_else(|| {
                    CliError::input(format!("--tau random needs a seed: use random:SEED or set {SEED_ENV}"))
                })?,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ((0..data.len()).map(|_| rng.random::<f64>()).collect(), Some(seed))
        }
    };
    let lines = data
        .features()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let dist = file.predict(x, scores.as_ref().map(|s| s[i]), taus[i])?;
            Ok(to_json(&dist)?)
        })
        .collect::<CliResult<Vec<String>>>()?;
    let mut text = lines.join("\n");
    if !lines.is_empty() {
        text.push('\n');
    }
    write_text(&args.out, &text)?;
    let config = json!({
        "tau": match args.tau { TauChoice::Fixed(t) => json!(t), TauChoice::Random(_) => json!("random") },
        "external_scores": args.scores.is_some(),
    });
    let mut manifest = RunManifest::new("predict", &config, seed)?
        .input(&args.model)?
        .input(&args.data)?;
    if let Some(p) = &args.scores {
        manifest = manifest.input(p)?;
    }
    manifest.finish(&args.out)
}

/// Reads one distribution per non-empty line.
pub fn read_dists(path: &Path) -> CliResult<Vec<Distribution<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let body = match lines.iter().rposition(|l| !l.trim().is_empty()) {
        Some(end) => &lines[..=end],
        None => &[][..],
    };
    body.par_iter()
        .enumerate()
        .map(|(i, line)| {
            from_json(line).map_err(|e| CliError::input(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn check_rows(dists: usize, labels: usize) -> CliResult<()> {
    if dists != labels {
        return Err(CliError::input(format!(
            "row-count mismatch: {dists} distributions but {labels} labeled rows"
        )));
    }
    Ok(())
}

/// A rule file is either a `tune` report or a bare point rule.
fn load_rule(path: &Path) -> CliResult<PointRule> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    if let Ok(report) = serde_json::from_str::<TuningReport>(&text) {
        return Ok(report.rule());
    }
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub struct EvalArgs {
    pub dists: PathBuf,
    pub labels: PathBuf,
    pub levels: Vec<f64>,
    pub rule: Option<PathBuf>,
    pub clip_labels: bool,
    pub out: PathBuf,
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let dists = read_dists(&args.dists)?;
    let data = read_labeled(&args.labels, args.clip_labels)?;
    check_rows(dists.len(), data.len())?;
    let rule = args.rule.as_deref().map(load_rule).transpose()?.unwrap_or(PointRule::Default);
    let report = evaluate(&dists, data.labels(), &args.levels, rule)?;
    write_json(&args.out, &report)?;
    let config = json!({ "levels": args.levels, "rule": rule, "clip_labels": args.clip_labels });
    let mut manifest = RunManifest::new("eval", &config, None)?
        .input(&args.dists)?
        .input(&args.labels)?;
    if let Some(p) = &args.rule {
        manifest = manifest.input(p)?;
    }
    manifest.finish(&args.out)
}

pub struct TuneArgs {
    pub dists: PathBuf,
    pub labels: PathBuf,
    pub config: DecisionRuleConfig,
    pub clip_labels: bool,
    pub out: PathBuf,
}

pub fn tune(args: &TuneArgs) -> CliResult<()> {
    let dists = read_dists(&args.dists)?;
    let data = read_labeled(&args.labels, args.clip_labels)?;
    check_rows(dists.len(), data.len())?;
    let report = tune_eta(&dists, data.labels(), &args.config)?;
    write_json(&args.out, &report)?;
    let config = json!({ "decision": args.config, "clip_labels": args.clip_labels });
    RunManifest::new("tune", &config, None)?
        .input(&args.dists)?
        .input(&args.labels)?
        .finish(&args.out)
}
