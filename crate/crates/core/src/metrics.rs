//! Distributional and point evaluation.
//!
//! * CRPS `integral (F(u) - 1{u >= y})^2 du`, evaluated in closed form over the
//!   constant segments between support points and `y`. Tail mass of a
//!   smoothed CDF is folded into its extreme scores so the integral is finite.
//! * Average pinball loss and mean quantile coverage error (MQCE) over the
//!   nine levels `0.1, ..., 0.9`, with coverage counted as `y < q_hat`.
//! * Central-interval coverage (inclusive) and mean width.
//! * Accuracy, RMSE and MAE of integer-day point predictions, plus the same
//!   restricted to truly late rows.
//!
//! Averages use pairwise summation so results do not depend on evaluation
//! order.

use serde::{Deserialize, Serialize};

use crate::data::Deviation;
use crate::decision::PointRule;
use crate::dist::{Distribution, PredictiveDistribution, QuantileLadder};
use crate::error::{Error, Result};
use crate::scalar::{mean, Real};

/// Quantile levels scored by [`pinball_and_mqce`].
pub const QUANTILE_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Central-interval confidences reported by default.
pub const INTERVAL_LEVELS: [f64; 3] = [0.8, 0.9, 0.95];

/// CRPS of one forecast against the outcome `y`.
pub fn crps<T, D>(dist: &D, y: T) -> T
where
    T: Real,
    D: PredictiveDistribution<T> + ?Sized,
{
    let mut points = dist.support();
    let at = points.partition_point(|&c| c < y);
    if points.get(at) != Some(&y) {
        points.insert(at, y);
    }
    let terms: Vec<T> = points
        .windows(2)
        .map(|w| {
            let step = if w[0] >= y { T::one() } else { T::zero() };
            let gap = dist.clamped_cdf(w[0]) - step;
            gap * gap * (w[1] - w[0])
        })
        .collect();
    crate::scalar::pairwise_sum(&terms)
}

fn check_lengths(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::RowCount { expected, found });
    }
    if expected == 0 {
        return Err(Error::domain("evaluation needs at least one row"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileScores<T> {
    /// Average pinball loss.
    pub pl: T,
    /// Mean `|freq(y < q_hat) - q|`.
    pub mqce: T,
    /// The same with `y <= q_hat`; differs from `mqce` only through ties.
    pub mqce_inclusive: T,
}

/// Pinball loss and MQCE at arbitrary levels. `preds[i][j]` is the forecast
/// quantile of instance `i` at `levels[j]`.
pub fn pinball_and_mqce_at<T: Real>(levels: &[T], preds: &[Vec<T>], labels: &[T]) -> Result<QuantileScores<T>> {
    check_lengths(preds.len(), labels.len())?;
    if levels.is_empty() {
        return Err(Error::domain("at least one quantile level is required"));
    }
    if let Some(i) = preds.iter().position(|row| row.len() != levels.len()) {
        return Err(Error::domain(format!(
            "instance {i} has {} quantiles, expected {}",
            preds[i].len(),
            levels.len()
        )));
    }
    let mut pl = Vec::with_capacity(levels.len());
    let mut gap = Vec::with_capacity(levels.len());
    let mut gap_inclusive = Vec::with_capacity(levels.len());
    for (j, &q) in levels.iter().enumerate() {
        let losses: Vec<T> = preds
            .iter()
            .zip(labels)
            .map(|(row, &y)| {
                let p = row[j];
                q * (y - p).max(T::zero()) + (T::one() - q) * (p - y).max(T::zero())
            })
            .collect();
        pl.push(mean(&losses));
        let n = T::of_usize(labels.len());
        let below = preds.iter().zip(labels).filter(|(row, &y)| y < row[j]).count();
        let at_or_below = preds.iter().zip(labels).filter(|(row, &y)| y <= row[j]).count();
        gap.push((T::of_usize(below) / n - q).abs());
        gap_inclusive.push((T::of_usize(at_or_below) / n - q).abs());
    }
    Ok(QuantileScores {
        pl: mean(&pl),
        mqce: mean(&gap),
        mqce_inclusive: mean(&gap_inclusive),
    })
}

/// Pinball loss and MQCE over [`QUANTILE_LEVELS`]; every row needs all nine.
pub fn pinball_and_mqce<T: Real>(preds: &[Vec<T>], labels: &[T]) -> Result<QuantileScores<T>> {
    let levels = QUANTILE_LEVELS.map(T::lit);
    pinball_and_mqce_at(&levels, preds, labels)
}

/// Forecast quantiles at [`QUANTILE_LEVELS`], unrounded.
pub fn quantile_table<T, D>(dist: &D) -> Vec<T>
where
    T: Real,
    D: PredictiveDistribution<T> + ?Sized,
{
    let ladder = QuantileLadder::new(dist);
    QUANTILE_LEVELS.iter().map(|&q| ladder.quantile(T::lit(q))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub accuracy: f64,
    pub rmse: f64,
    pub mae: f64,
    /// `None` when no row is truly late.
    pub late_detection_rate: Option<f64>,
    pub late_rmse: Option<f64>,
    pub late_mae: Option<f64>,
}

fn rmse_mae(errors: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    (mean(&sq).sqrt(), mean(&abs))
}

pub fn point_metrics(preds: &[i32], labels: &[i32]) -> Result<PointMetrics> {
    check_lengths(preds.len(), labels.len())?;
    let n = labels.len() as f64;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    let errors: Vec<f64> = preds.iter().zip(labels).map(|(p, y)| f64::from(p - y)).collect();
    let (rmse, mae) = rmse_mae(&errors);
    let late: Vec<(i32, i32)> = preds
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y > 0)
        .map(|(&p, &y)| (p, y))
        .collect();
    let (late_detection_rate, late_rmse, late_mae) = if late.is_empty() {
        (None, None, None)
    } else {
        let detected = late.iter().filter(|(p, _)| *p > 0).count();
        let errors: Vec<f64> = late.iter().map(|(p, y)| f64::from(p - y)).collect();
        let (r, m) = rmse_mae(&errors);
        (Some(detected as f64 / late.len() as f64), Some(r), Some(m))
    };
    Ok(PointMetrics {
        accuracy: hits as f64 / n,
        rmse,
        mae,
        late_detection_rate,
        late_rmse,
        late_mae,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics<T> {
    pub level: T,
    pub coverage: T,
    pub mean_size: T,
}

/// Coverage of `y` by the central interval at each level (bounds inclusive)
/// and the mean interval width.
pub fn interval_metrics<T, D>(dists: &[D], labels: &[T], levels: &[T]) -> Result<Vec<IntervalMetrics<T>>>
where
    T: Real,
    D: PredictiveDistribution<T>,
{
    check_lengths(dists.len(), labels.len())?;
    let n = T::of_usize(labels.len());
    levels
        .iter()
        .map(|&level| {
            let intervals = dists
                .iter()
                .map(|d| d.central_interval(level))
                .collect::<Result<Vec<(T, T)>>>()?;
            let covered = intervals
                .iter()
                .zip(labels)
                .filter(|((lo, hi), &y)| *lo <= y && y <= *hi)
                .count();
            let sizes: Vec<T> = intervals.iter().map(|(lo, hi)| *hi - *lo).collect();
            Ok(IntervalMetrics {
                level,
                coverage: T::of_usize(covered) / n,
                mean_size: mean(&sizes),
            })
        })
        .collect()
}

/// Full evaluation of a set of forecasts against integer-day outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub crps: f64,
    pub pl: f64,
    pub mqce: f64,
    pub mqce_inclusive: f64,
    pub intervals: Vec<IntervalMetrics<f64>>,
    pub point_rule: PointRule,
    #[serde(flatten)]
    pub point: PointMetrics,
}

pub fn evaluate<T: Real>(
    dists: &[Distribution<T>],
    labels: &[Deviation],
    levels: &[T],
    rule: PointRule,
) -> Result<EvaluationReport> {
    check_lengths(dists.len(), labels.len())?;
    let ys: Vec<T> = labels.iter().map(|l| l.as_real()).collect();
    let scores: Vec<T> = dists.iter().zip(&ys).map(|(d, &y)| crps(d, y)).collect();
    let table: Vec<Vec<T>> = dists.iter().map(quantile_table).collect();
    let quant = pinball_and_mqce(&table, &ys)?;
    let intervals = interval_metrics(dists, &ys, levels)?
        .into_iter()
        .map(|m| IntervalMetrics {
            level: m.level.as_f64(),
            coverage: m.coverage.as_f64(),
            mean_size: m.mean_size.as_f64(),
        })
        .collect();
    let preds = dists.iter().map(|d| rule.apply(d)).collect::<Result<Vec<i32>>>()?;
    let days: Vec<i32> = labels.iter().map(|l| l.days()).collect();
    Ok(EvaluationReport {
        n: dists.len(),
        crps: mean(&scores).as_f64(),
        pl: quant.pl.as_f64(),
        mqce: quant.mqce.as_f64(),
        mqce_inclusive: quant.mqce_inclusive.as_f64(),
        intervals,
        point_rule: rule,
        point: point_metrics(&preds, &days)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DiscreteDistribution, EmpiricalPredictiveCdf};

    #[test]
    fn crps_of_point_masses() {
        let pm = DiscreteDistribution::point_mass(3.0);
        assert_eq!(crps(&pm, 3.0), 0.0);
        assert_eq!(crps(&pm, 1.0), 2.0);
        assert_eq!(crps(&pm, 4.5), 1.5);
    }

    #[test]
    fn crps_two_atoms() {
        let d = DiscreteDistribution::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(f64::abs(crps(&d, 0.0) - 0.5) < 1e-15);
    }

    #[test]
    fn crps_of_a_smoothed_cdf_is_finite() {
        let d = EmpiricalPredictiveCdf::new(vec![-1.0, 0.0, 2.0], 0.5).unwrap();
        // clamped: 3/8 on [-1,0), 5/8 on [0,2), outcome at 0
        let expected = 0.375f64.powi(2) + 2.0 * 0.375f64.powi(2);
        assert!((crps(&d, 0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn pinball_examples() {
        let exact = pinball_and_mqce(&[vec![2.0; 9]], &[2.0]).unwrap();
        assert_eq!(exact.pl, 0.0);
        let half = pinball_and_mqce_at(&[0.5], &[vec![1.0]], &[2.0]).unwrap();
        assert_eq!(half.pl, 0.5);
        let above = pinball_and_mqce(&[vec![5.0; 9]], &[1.0]).unwrap();
        assert!(f64::abs(above.mqce - 0.5) < 1e-15);
    }

    #[test]
    fn strict_and_inclusive_coverage_differ_only_on_ties() {
        let s = pinball_and_mqce(&[vec![1.0; 9]], &[1.0]).unwrap();
        assert!(f64::abs(s.mqce - 0.5) < 1e-15);
        assert!(f64::abs(s.mqce_inclusive - 0.5) < 1e-15);
        let far = pinball_and_mqce(&[vec![1.0; 9]], &[4.0]).unwrap();
        assert_eq!(far.mqce, far.mqce_inclusive);
    }

    #[test]
    fn missing_level_is_an_error() {
        assert!(pinball_and_mqce(&[vec![0.0; 8]], &[0.0]).is_err());
        assert!(pinball_and_mqce::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn point_metric_examples() {
        let perfect = point_metrics(&[1, -2, 0], &[1, -2, 0]).unwrap();
        assert_eq!((perfect.accuracy, perfect.rmse, perfect.mae), (1.0, 0.0, 0.0));
        let m = point_metrics(&[0, 1], &[1, 1]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!((m.rmse - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.mae, 0.5);
        assert_eq!(m.late_detection_rate, Some(0.5));
        assert!((m.late_rmse.unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let early = point_metrics(&[3, 0], &[-1, -4]).unwrap();
        assert_eq!(early.late_detection_rate, None);
        assert_eq!(early.late_rmse, None);
        assert_eq!(early.late_mae, None);
        assert!(point_metrics(&[], &[]).is_err());
        assert!(point_metrics(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn interval_examples() {
        let a = DiscreteDistribution::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let b = DiscreteDistribution::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        let m = interval_metrics(&[a, b], &[2.0, 0.0], &[0.8]).unwrap();
        assert_eq!(m[0].coverage, 0.5);
        assert_eq!(m[0].mean_size, 2.0);
        let pm = [DiscreteDistribution::point_mass(1.0), DiscreteDistribution::point_mass(-2.0)];
        let m = interval_metrics(&pm, &[1.0, -2.0], &INTERVAL_LEVELS).unwrap();
        assert!(m.iter().all(|l| l.coverage == 1.0 && l.mean_size == 0.0));
    }

    #[test]
    fn report_has_every_metric() {
        let dists: Vec<Distribution<f64>> = vec![
            EmpiricalPredictiveCdf::new(vec![-1.0, 0.0, 1.0, 2.0], 0.5).unwrap().into(),
            Distribution::point_mass(1.0),
        ];
        let labels = [Deviation::new(0).unwrap(), Deviation::new(1).unwrap()];
        let r = evaluate(&dists, &labels, &INTERVAL_LEVELS, PointRule::Default).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.intervals.len(), 3);
        assert!(r.crps >= 0.0 && r.pl >= 0.0);
        assert_eq!(r.point.accuracy, 1.0);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["crps", "pl", "mqce", "accuracy", "rmse", "mae", "late_detection_rate"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
