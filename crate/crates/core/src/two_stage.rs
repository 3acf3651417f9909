//! Classify-then-regress with truncated conformal prediction.
//!
//! A calibrated three-way status classifier (early / on time / late) weights
//! three class-conditional distributions derived from one conformal predictive
//! system fitted on the full calibration set:
//!
//! * on time: the unit atom at 0;
//! * early: the smoothed CDF over the strictly negative scores only;
//! * late: the smoothed CDF over the strictly positive scores only.
//!
//! Truncation happens at prediction time; the stored residuals never change.
//! The truncated CDFs are bounded, so the early part puts no mass on `y >= 0`
//! and the late part none on `y <= 0`. If a side has no scores, its component
//! falls back to a point mass at `-1` or `+1`.

use serde::{Deserialize, Serialize};

use crate::cps::{CpsModel, McpsModel, ScpsModel};
use crate::data::{Deviation, FoldPlan, LabeledDataset};
use crate::dist::{Component, DiscreteDistribution, EmpiricalPredictiveCdf, MixtureDistribution};
use crate::error::{Error, Result};
use crate::learners::{fit_least_squares, RegressionScorer, Scorer};
use crate::scalar::Real;
use crate::venn_abers::{FoldSpans, MulticlassCalibrated};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeliveryStatus {
    Early,
    OnTime,
    Late,
}

impl DeliveryStatus {
    pub const ALL: [DeliveryStatus; 3] = [DeliveryStatus::Early, DeliveryStatus::OnTime, DeliveryStatus::Late];

    pub fn of(label: Deviation) -> Self {
        match label.days() {
            d if d < 0 => DeliveryStatus::Early,
            0 => DeliveryStatus::OnTime,
            _ => DeliveryStatus::Late,
        }
    }

    pub fn code(self) -> i32 {
        match self {
            DeliveryStatus::Early => -1,
            DeliveryStatus::OnTime => 0,
            DeliveryStatus::Late => 1,
        }
    }
}

pub fn status_of(label: Deviation) -> DeliveryStatus {
    DeliveryStatus::of(label)
}

/// Class-consistent component built from sorted conformal scores. Scores
/// within the tie tolerance of zero belong to neither truncated side.
pub fn truncate_scores<T: Real>(scores: &[T], status: DeliveryStatus, tau: T) -> Result<Component<T>> {
    let tol = T::tie_tolerance();
    let side: Vec<T> = match status {
        DeliveryStatus::OnTime => return Ok(Component::Discrete(DiscreteDistribution::point_mass(T::zero()))),
        DeliveryStatus::Early => scores.iter().copied().filter(|s| *s < -tol).collect(),
        DeliveryStatus::Late => scores.iter().copied().filter(|s| *s > tol).collect(),
    };
    if side.is_empty() {
        let fallback = T::lit(f64::from(status.code()));
        return Ok(Component::Discrete(DiscreteDistribution::point_mass(fallback)));
    }
    Ok(Component::Cps(EmpiricalPredictiveCdf::bounded(side, tau)?))
}

/// Mixture of the three truncated components weighted by status probabilities
/// given in `[early, on time, late]` order.
pub fn mixture_from_scores<T: Real>(weights: [T; 3], scores: &[T], tau: T) -> Result<MixtureDistribution<T>> {
    let components = DeliveryStatus::ALL
        .iter()
        .zip(weights)
        .map(|(&status, w)| Ok((w, truncate_scores(scores, status, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    MixtureDistribution::new(components)
}

/// Status classifier plus the regression scorer and conformal system it
/// truncates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct TwoStageModel<T: Real> {
    pub status_classifier: MulticlassCalibrated<T>,
    pub regressor: RegressionScorer<T>,
    pub cps: CpsModel<T>,
}

impl<T: Real> TwoStageModel<T> {
    /// Fits the status classifier by CVAP over every fold of `plan` and the
    /// regressor plus conformal system on the last fold. `bins = None` selects
    /// the split system, `Some(b)` the Mondrian one with `b` bins.
    pub fn fit(data: &LabeledDataset<T>, plan: &FoldPlan, bins: Option<usize>) -> Result<Self> {
        if plan.n_rows != data.len() {
            return Err(Error::domain("fold plan does not match the dataset size"));
        }
        let statuses: Vec<i32> = data.labels().iter().map(|l| status_of(*l).code()).collect();
        let spans: Vec<FoldSpans> = plan
            .folds
            .iter()
            .map(|f| (f.train.clone(), f.calibration.clone()))
            .collect();
        let status_classifier = MulticlassCalibrated::fit_cvap(data.features(), &statuses, &[-1, 0, 1], &spans)?;
        let last = plan.last();
        let regressor = fit_least_squares(&data.slice(last.train.clone()))?;
        let cal = data.slice(last.calibration.clone());
        let preds = regressor.score_all(cal.features());
        let labels = cal.label_values();
        let cps = match bins {
            None => CpsModel::Scps(ScpsModel::fit(&preds, &labels)?),
            Some(b) => CpsModel::Mcps(McpsModel::fit(&preds, &labels, b)?),
        };
        Ok(Self {
            status_classifier,
            regressor,
            cps,
        })
    }

    pub fn status_probabilities(&self, x: &[T]) -> Result<[T; 3]> {
        let d = self.status_classifier.predict(x)?;
        let p = d.probs();
        Ok([p[0], p[1], p[2]])
    }

    pub fn predict(&self, x: &[T], tau: T) -> Result<MixtureDistribution<T>> {
        let weights = self.status_probabilities(x)?;
        let base = self.cps.cdf(self.regressor.score(x), tau)?;
        mixture_from_scores(weights, base.scores(), tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PredictiveDistribution;

    const SCORES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 3.0];

    #[test]
    fn status_sign_rule() {
        let s = |d| status_of(Deviation::new(d).unwrap());
        assert_eq!(s(-3), DeliveryStatus::Early);
        assert_eq!(s(0), DeliveryStatus::OnTime);
        assert_eq!(s(7), DeliveryStatus::Late);
    }

    #[test]
    fn truncation_rules() {
        match truncate_scores(&SCORES, DeliveryStatus::Early, 0.5).unwrap() {
            Component::Cps(c) => assert_eq!(c.scores(), &[-2.0, -1.0]),
            other => panic!("{other:?}"),
        }
        match truncate_scores(&SCORES, DeliveryStatus::Late, 0.5).unwrap() {
            Component::Cps(c) => assert_eq!(c.scores(), &[1.0, 3.0]),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            truncate_scores(&SCORES, DeliveryStatus::OnTime, 0.5).unwrap(),
            Component::Discrete(DiscreteDistribution::point_mass(0.0))
        );
        assert_eq!(
            truncate_scores(&[1.0, 2.0], DeliveryStatus::Early, 0.5).unwrap(),
            Component::Discrete(DiscreteDistribution::point_mass(-1.0))
        );
        assert_eq!(
            truncate_scores(&[-1.0, 0.0], DeliveryStatus::Late, 0.5).unwrap(),
            Component::Discrete(DiscreteDistribution::point_mass(1.0))
        );
    }

    #[test]
    fn mixture_cdf_at_zero() {
        let m = mixture_from_scores([0.2, 0.5, 0.3], &SCORES, 0.5).unwrap();
        assert!((m.cdf(0.0) - 0.7).abs() < 1e-12);
        assert_eq!(m.cdf(-100.0), 0.0);
        assert!((m.cdf(100.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certain_on_time_is_a_point_mass() {
        let m = mixture_from_scores([0.0, 1.0, 0.0], &SCORES, 0.5).unwrap();
        assert_eq!(m.cdf(-1e-9), 0.0);
        assert_eq!(m.cdf(0.0), 1.0);
        assert_eq!(m.quantile(0.1).unwrap(), 0.0);
        assert_eq!(m.quantile(0.9).unwrap(), 0.0);
    }

    #[test]
    fn components_respect_their_side_of_zero() {
        for status in [DeliveryStatus::Early, DeliveryStatus::Late] {
            for tau in [0.0, 0.5, 1.0] {
                let c = truncate_scores(&SCORES, status, tau).unwrap();
                match status {
                    DeliveryStatus::Early => assert_eq!(c.cdf(-1e-9), 1.0),
                    _ => assert_eq!(c.cdf(1e-9), 0.0),
                }
            }
        }
    }
}
