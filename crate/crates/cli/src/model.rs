//! Versioned model files produced by `fit` and consumed by `predict`.

use std::path::Path;

use clap::ValueEnum;
use fulcal::data::{timeseries_folds, FoldPlan};
use fulcal::learners::{fit_least_squares, RegressionScorer, Scorer};
use fulcal::venn_abers::FoldSpans;
use fulcal::{CpsModel, Dataset, Distribution, Mcps, Multiclass, Scps, TwoStage};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, CliResult};
use crate::manifest::MODEL_FORMAT_VERSION;

pub const MODEL_FORMAT: &str = "fulcal-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Method {
    #[serde(rename = "scps")]
    Scps,
    #[serde(rename = "mcps")]
    Mcps,
    #[serde(rename = "ivap")]
    Ivap,
    #[serde(rename = "cvap")]
    Cvap,
    #[serde(rename = "ir")]
    Ir,
    #[serde(rename = "2stg-scps")]
    #[value(name = "2stg-scps")]
    TwoStageScps,
    #[serde(rename = "2stg-mcps")]
    #[value(name = "2stg-mcps")]
    TwoStageMcps,
}

impl Method {
    pub fn accepts_external_scores(self) -> bool {
        matches!(self, Method::Scps | Method::Mcps)
    }
}

/// Where `h(x)` comes from for the conformal methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoreSource {
    Ridge { scorer: RegressionScorer<f64> },
    /// Scores are supplied per row with `--scores`.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Conformal { scores: ScoreSource, cps: CpsModel<f64> },
    Classifier { model: Multiclass },
    TwoStage { model: TwoStage },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub method: Method,
    pub n_features: usize,
    pub folds: usize,
    pub bins: Option<usize>,
    pub model: FittedModel,
}

fn spans(plan: &FoldPlan) -> Vec<FoldSpans> {
    plan.folds.iter().map(|f| (f.train.clone(), f.calibration.clone())).collect()
}

fn classes_of(data: &Dataset) -> Vec<i32> {
    let mut classes: Vec<i32> = data.labels().iter().map(|l| l.days()).collect();
    classes.sort_unstable();
    classes.dedup();
    classes
}

fn conformal(
    method: Method,
    data: &Dataset,
    plan: &FoldPlan,
    bins: usize,
    external: Option<&[f64]>,
) -> CliResult<FittedModel> {
    let last = plan.last();
    let cal = data.slice(last.calibration.clone());
    let (scores, preds) = match external {
        Some(all) => (ScoreSource::External, all[last.calibration.clone()].to_vec()),
        None => {
            let scorer = fit_least_squares(&data.slice(last.train.clone()))?;
            let preds = scorer.score_all(cal.features());
            (ScoreSource::Ridge { scorer }, preds)
        }
    };
    let labels = cal.label_values();
    let cps = match method {
        Method::Scps => CpsModel::Scps(Scps::fit(&preds, &labels)?),
        _ => CpsModel::Mcps(Mcps::fit(&preds, &labels, bins)?),
    };
    Ok(FittedModel::Conformal { scores, cps })
}

/// Fits `method` on `data` with a `folds`-fold time-series plan. SCPS, MCPS,
/// IVAP and IR calibrate on the last fold; CVAP uses every fold.
pub fn fit(
    method: Method,
    data: &Dataset,
    folds: usize,
    bins: usize,
    external: Option<&[f64]>,
) -> CliResult<ModelFile> {
    if external.is_some() && !method.accepts_external_scores() {
        return Err(CliError::input("--scores is only supported for scps and mcps"));
    }
    let plan = timeseries_folds(data.len(), folds)?;
    let labels: Vec<i32> = data.labels().iter().map(|l| l.days()).collect();
    let all = spans(&plan);
    let last = std::slice::from_ref(all.last().expect("non-empty plan"));
    let model = match method {
        Method::Scps | Method::Mcps => conformal(method, data, &plan, bins, external)?,
        Method::Ivap => FittedModel::Classifier {
            model: Multiclass::fit_cvap(data.features(), &labels, &classes_of(data), last)?,
        },
        Method::Cvap => FittedModel::Classifier {
            model: Multiclass::fit_cvap(data.features(), &labels, &classes_of(data), &all)?,
        },
        Method::Ir => FittedModel::Classifier {
            model: Multiclass::fit_isotonic(data.features(), &labels, &classes_of(data), &last[0])?,
        },
        Method::TwoStageScps => FittedModel::TwoStage {
            model: TwoStage::fit(data, &plan, None)?,
        },
        Method::TwoStageMcps => FittedModel::TwoStage {
            model: TwoStage::fit(data, &plan, Some(bins))?,
        },
    };
    let uses_bins = matches!(method, Method::Mcps | Method::TwoStageMcps);
    Ok(ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_FORMAT_VERSION,
        method,
        n_features: data.dim(),
        folds,
        bins: uses_bins.then_some(bins),
        model,
    })
}

impl ModelFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_FORMAT_VERSION {
            return Err(CliError::input(format!(
                "{}: unsupported model format {:?} version {}",
                path.display(),
                file.format,
                file.version
            )));
        }
        match &file.model {
            FittedModel::Classifier { model } => model.validate()?,
            FittedModel::TwoStage { model } => model.status_classifier.validate()?,
            FittedModel::Conformal { .. } => {}
        }
        Ok(file)
    }

    pub fn needs_external_scores(&self) -> bool {
        matches!(
            self.model,
            FittedModel::Conformal {
                scores: ScoreSource::External,
                ..
            }
        )
    }

    /// Predictive distribution for one row. `score` overrides `h(x)` for
    /// models fitted on external scores.
    pub fn predict(&self, x: &[f64], score: Option<f64>, tau: f64) -> CliResult<Distribution<f64>> {
        Ok(match &self.model {
            FittedModel::Conformal { scores, cps } => {
                let h = match (scores, score) {
                    (ScoreSource::Ridge { scorer }, _) => scorer.score(x),
                    (ScoreSource::External, Some(s)) => s,
                    (ScoreSource::External, None) => {
                        return Err(CliError::input("model was fitted on external scores; pass --scores"))
                    }
                };
                cps.cdf(h, tau)?.into()
            }
            FittedModel::Classifier { model } => model.predict(x)?.into(),
            FittedModel::TwoStage { model } => model.predict(x, tau)?.into(),
        })
    }
}
