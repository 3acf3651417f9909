//! Split and Mondrian conformal predictive systems.
//!
//! Both fit on a calibration set of `(h(x_j), y_j)` pairs and store the sorted
//! residuals `y_j - h(x_j)`. For a test prediction `h(x)` the calibration
//! scores are `h(x) + residual`, which feed an [`EmpiricalPredictiveCdf`].
//! The Mondrian variant partitions the calibration set into equal-frequency
//! bins of `h(x_j)` and only uses residuals from the bin `h(x)` falls in.

use serde::{Deserialize, Serialize};

use crate::dist::EmpiricalPredictiveCdf;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest bin population the Mondrian fit accepts.
pub const MIN_BIN_SIZE: usize = 20;
/// Default bin count for the Mondrian fit.
pub const DEFAULT_BINS: usize = 10;

fn residuals<T: Real>(predictions: &[T], labels: &[T]) -> Result<Vec<T>> {
    if predictions.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::domain("calibration set is empty"));
    }
    if predictions.iter().chain(labels).any(|v| !v.is_finite()) {
        return Err(Error::domain("calibration values must be finite"));
    }
    Ok(labels.iter().zip(predictions).map(|(y, h)| *y - *h).collect())
}

fn sort<T: Real>(v: &mut [T]) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
}

fn shifted<T: Real>(residuals: &[T], h_x: T, tau: T) -> Result<EmpiricalPredictiveCdf<T>> {
    if !h_x.is_finite() {
        return Err(Error::domain("test prediction must be finite"));
    }
    EmpiricalPredictiveCdf::from_sorted(residuals.iter().map(|r| h_x + *r).collect(), tau, false)
}

/// Split conformal predictive system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScpsRaw<T>", bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct ScpsModel<T: Real> {
    residuals: Vec<T>,
}

#[derive(Deserialize)]
struct ScpsRaw<T> {
    residuals: Vec<T>,
}

impl<T: Real> TryFrom<ScpsRaw<T>> for ScpsModel<T> {
    type Error = Error;
    fn try_from(raw: ScpsRaw<T>) -> Result<Self> {
        if raw.residuals.is_empty() || raw.residuals.iter().any(|r| !r.is_finite()) {
            return Err(Error::Format("scps residuals must be finite and non-empty".into()));
        }
        if raw.residuals.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("scps residuals must be sorted".into()));
        }
        Ok(Self {
            residuals: raw.residuals,
        })
    }
}

impl<T: Real> ScpsModel<T> {
    pub fn fit(predictions: &[T], labels: &[T]) -> Result<Self> {
        let mut residuals = residuals(predictions, labels)?;
        sort(&mut residuals);
        Ok(Self { residuals })
    }

    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    /// Predictive CDF for a test point with prediction `h_x`.
    pub fn cdf(&self, h_x: T, tau: T) -> Result<EmpiricalPredictiveCdf<T>> {
        shifted(&self.residuals, h_x, tau)
    }
}

/// Mondrian conformal predictive system over bins of predicted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "McpsRaw<T>", bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct McpsModel<T: Real> {
    #[serde(rename = "B")]
    bin_count: usize,
    edges: Vec<T>,
    bins: Vec<Vec<T>>,
}

#[derive(Deserialize)]
struct McpsRaw<T> {
    #[serde(rename = "B")]
    bin_count: usize,
    edges: Vec<T>,
    bins: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<McpsRaw<T>> for McpsModel<T> {
    type Error = Error;
    fn try_from(raw: McpsRaw<T>) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("invalid mcps model: {m}"));
        if raw.bin_count == 0 || raw.bins.len() != raw.bin_count || raw.edges.len() + 1 != raw.bin_count {
            return Err(bad("B must match the bin and edge counts"));
        }
        if raw.edges.windows(2).any(|w| !(w[0] < w[1])) || raw.edges.iter().any(|e| !e.is_finite()) {
            return Err(bad("edges must be finite and strictly increasing"));
        }
        for bin in &raw.bins {
            if bin.is_empty() || bin.windows(2).any(|w| w[0] > w[1]) || bin.iter().any(|r| !r.is_finite()) {
                return Err(bad("every bin needs sorted finite residuals"));
            }
        }
        Ok(Self {
            bin_count: raw.bin_count,
            edges: raw.edges,
            bins: raw.bins,
        })
    }
}

impl<T: Real> McpsModel<T> {
    /// Fit with the default minimum bin population of [`MIN_BIN_SIZE`].
    pub fn fit(predictions: &[T], labels: &[T], bins: usize) -> Result<Self> {
        Self::fit_with_min_size(predictions, labels, bins, MIN_BIN_SIZE)
    }

    /// Equal-frequency bins over `predictions`. The bin count is reduced to the
    /// largest value for which every bin holds at least `min_bin_size`
    /// residuals (never below one bin).
    pub fn fit_with_min_size(
        predictions: &[T],
        labels: &[T],
        bins: usize,
        min_bin_size: usize,
    ) -> Result<Self> {
        if bins == 0 {
            return Err(Error::domain("bin count must be at least 1"));
        }
        let res = residuals(predictions, labels)?;
        let n = res.len();
        let mut sorted_preds = predictions.to_vec();
        sort(&mut sorted_preds);
        let feasible = (n / min_bin_size.max(1)).max(1);
        let mut b = bins.min(feasible);
        loop {
            if let Some(model) = Self::try_bins(&sorted_preds, predictions, &res, b, min_bin_size) {
                return Ok(model);
            }
            b -= 1;
        }
    }

    fn try_bins(
        sorted_preds: &[T],
        predictions: &[T],
        res: &[T],
        b: usize,
        min_bin_size: usize,
    ) -> Option<Self> {
        let n = sorted_preds.len();
        let edges: Vec<T> = (1..b)
            .map(|k| {
                let i = k * n / b;
                (sorted_preds[i - 1] + sorted_preds[i]) / T::lit(2.0)
            })
            .collect();
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return None;
        }
        let mut bins = vec![Vec::new(); b];
        for (h, r) in predictions.iter().zip(res) {
            bins[bin_index(&edges, *h)].push(*r);
        }
        if b > 1 && bins.iter().any(|bin| bin.len() < min_bin_size.max(1)) {
            return None;
        }
        bins.iter_mut().for_each(|bin| sort(bin));
        Some(Self {
            bin_count: b,
            edges,
            bins,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn bins(&self) -> &[Vec<T>] {
        &self.bins
    }

    /// Zero-based bin for a prediction; values on an edge go to the higher bin.
    pub fn bin_of(&self, h_x: T) -> usize {
        bin_index(&self.edges, h_x)
    }

    pub fn cdf(&self, h_x: T, tau: T) -> Result<EmpiricalPredictiveCdf<T>> {
        shifted(&self.bins[self.bin_of(h_x)], h_x, tau)
    }
}

fn bin_index<T: Real>(edges: &[T], h: T) -> usize {
    edges.partition_point(|&e| e <= h)
}

/// Either conformal predictive system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub enum CpsModel<T: Real> {
    Scps(ScpsModel<T>),
    Mcps(McpsModel<T>),
}

impl<T: Real> CpsModel<T> {
    pub fn cdf(&self, h_x: T, tau: T) -> Result<EmpiricalPredictiveCdf<T>> {
        match self {
            CpsModel::Scps(m) => m.cdf(h_x, tau),
            CpsModel::Mcps(m) => m.cdf(h_x, tau),
        }
    }
}
