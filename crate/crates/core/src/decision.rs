//! Point predictions from predictive distributions.
//!
//! The default rule takes the median of a conformal CDF and the most probable
//! class of a classifier distribution. The cost-sensitive rule instead picks
//! one quantile level `eta` for all instances by grid search on a validation
//! set, minimising
//!
//! ```text
//! RMSE(y^eta) + beta * Late_RMSE(y^eta) + gamma * Early_RMSE(y^eta)
//! ```
//!
//! where the late (early) term is the RMSE over rows whose true deviation is
//! positive (negative). An empty subset contributes 0.

use serde::{Deserialize, Serialize};

use crate::data::Deviation;
use crate::dist::{DiscreteDistribution, Distribution, PredictiveDistribution, QuantileLadder};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionRuleConfig {
    /// Weight on the late-delivery RMSE.
    pub beta: f64,
    /// Weight on the early-delivery RMSE.
    pub gamma: f64,
    /// Spacing of the `eta` grid in percent.
    pub grid_step: f64,
}

impl Default for DecisionRuleConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            gamma: 0.0,
            grid_step: 0.5,
        }
    }
}

impl DecisionRuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        self.grid().map(|_| ())
    }

    /// Grid `{0, step, ..., 100}`. The step must divide 100.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let step = self.grid_step;
        if !(step > 0.0 && step <= 100.0) {
            return Err(Error::domain(format!("grid_step must lie in (0, 100], got {step}")));
        }
        let count = (100.0 / step).round();
        if (count * step - 100.0).abs() > 1e-9 {
            return Err(Error::domain(format!("grid_step {step} does not divide 100")));
        }
        let count = count as usize;
        Ok((0..=count)
            .map(|k| if k == count { 100.0 } else { k as f64 * step })
            .collect())
    }
}

/// Rounds half away from zero and clamps into the label range.
pub fn round_to_day<T: Real>(x: T) -> i32 {
    let lo = f64::from(Deviation::MIN);
    let hi = f64::from(Deviation::MAX);
    x.as_f64().round().clamp(lo, hi) as i32
}

fn check_eta<T: Real>(eta: T) -> Result<T> {
    if eta >= T::zero() && eta <= T::lit(100.0) {
        Ok(eta / T::lit(100.0))
    } else {
        Err(Error::domain(format!("eta must lie in [0, 100], got {eta}")))
    }
}

/// The `eta`% quantile rounded to a whole day.
pub fn point_from_quantile<T, D>(dist: &D, eta: T) -> Result<i32>
where
    T: Real,
    D: PredictiveDistribution<T> + ?Sized,
{
    let q = check_eta(eta)?;
    Ok(round_to_day(dist.quantile(q)?))
}

/// Most probable atom; ties go to the smallest `|day|`, then the smaller day.
pub fn argmax_point<T: Real>(dist: &DiscreteDistribution<T>) -> i32 {
    let mut best: Option<(T, T)> = None;
    for (s, p) in dist.iter() {
        best = match best {
            None => Some((s, p)),
            Some((bs, bp)) => {
                let better = p > bp || (p == bp && (s.abs() < bs.abs() || (s.abs() == bs.abs() && s < bs)));
                if better {
                    Some((s, p))
                } else {
                    Some((bs, bp))
                }
            }
        };
    }
    round_to_day(best.expect("discrete distributions are non-empty").0)
}

/// How a distribution becomes a point prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum PointRule {
    /// Median for conformal CDFs and mixtures, argmax for discrete
    /// classifier output.
    Default,
    /// A fixed quantile level in percent.
    Quantile { eta: f64 },
}

impl PointRule {
    pub fn apply<T: Real>(&self, dist: &Distribution<T>) -> Result<i32> {
        match (self, dist) {
            (PointRule::Default, Distribution::Discrete(d)) => Ok(argmax_point(d)),
            (PointRule::Default, d) => point_from_quantile(d, T::lit(50.0)),
            (PointRule::Quantile { eta }, d) => point_from_quantile(d, T::lit(*eta)),
        }
    }
}

fn rmse_over(pairs: impl Iterator<Item = (i32, i32)>) -> f64 {
    let mut n = 0usize;
    let mut sq = 0i64;
    for (p, y) in pairs {
        let e = i64::from(p - y);
        sq += e * e;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sq as f64 / n as f64).sqrt()
    }
}

/// Cost-sensitive objective for one vector of point predictions.
pub fn cost_objective(preds: &[i32], labels: &[Deviation], beta: f64, gamma: f64) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::RowCount {
            expected: labels.len(),
            found: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::domain("objective needs at least one row"));
    }
    let pairs = || preds.iter().copied().zip(labels.iter().map(|l| l.days()));
    let all = rmse_over(pairs());
    let late = rmse_over(pairs().filter(|&(_, y)| y > 0));
    let early = rmse_over(pairs().filter(|&(_, y)| y < 0));
    Ok(all + beta * late + gamma * early)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eta: f64,
    pub objective: f64,
}

/// Outcome of the `eta` grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub beta: f64,
    pub gamma: f64,
    pub grid_step: f64,
    pub eta_star: f64,
    pub objective_star: f64,
    pub grid: Vec<GridPoint>,
}

impl TuningReport {
    pub fn rule(&self) -> PointRule {
        PointRule::Quantile { eta: self.eta_star }
    }
}

/// Point predictions at level `eta` for every distribution.
pub fn points_at<T, D>(dists: &[D], eta: T) -> Result<Vec<i32>>
where
    T: Real,
    D: PredictiveDistribution<T>,
{
    dists.iter().map(|d| point_from_quantile(d, eta)).collect()
}

/// Grid search for the smallest `eta` minimising the cost-sensitive objective.
pub fn tune_eta<T, D>(dists: &[D], labels: &[Deviation], config: &DecisionRuleConfig) -> Result<TuningReport>
where
    T: Real,
    D: PredictiveDistribution<T>,
{
    config.validate()?;
    if dists.len() != labels.len() {
        return Err(Error::RowCount {
            expected: labels.len(),
            found: dists.len(),
        });
    }
    if dists.is_empty() {
        return Err(Error::domain("tuning needs a non-empty validation set"));
    }
    let ladders: Vec<QuantileLadder<T>> = dists.iter().map(QuantileLadder::new).collect();
    let mut grid = Vec::new();
    let mut best: Option<GridPoint> = None;
    for eta in config.grid()? {
        let q = check_eta(T::lit(eta))?;
        let preds: Vec<i32> = ladders.iter().map(|l| round_to_day(l.quantile(q))).collect();
        let objective = cost_objective(&preds, labels, config.beta, config.gamma)?;
        let point = GridPoint { eta, objective };
        if best.is_none_or(|b| objective < b.objective) {
            best = Some(point);
        }
        grid.push(point);
    }
    let best = best.expect("grid is never empty");
    Ok(TuningReport {
        beta: config.beta,
        gamma: config.gamma,
        grid_step: config.grid_step,
        eta_star: best.eta,
        objective_star: best.objective,
        grid,
    })
}
