//! Weighted isotonic regression by pool-adjacent-violators.
//!
//! Points sharing a score are first pooled into one point carrying their
//! weighted mean target and summed weight, so the fitted staircase is
//! single-valued at every observed score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint<T> {
    pub score: T,
    pub target: T,
    pub weight: T,
}

impl<T: Real> WeightedPoint<T> {
    pub fn new(score: T, target: T, weight: T) -> Self {
        Self {
            score,
            target,
            weight,
        }
    }

    pub fn unit(score: T, target: T) -> Self {
        Self::new(score, target, T::one())
    }
}

/// Non-decreasing step function: `levels[i]` holds on `[breakpoints[i], breakpoints[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit<T> {
    breakpoints: Vec<T>,
    levels: Vec<T>,
}

impl<T: Real> IsotonicFit<T> {
    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    /// Level of the largest breakpoint `<= s`; the first level below the range.
    pub fn eval(&self, s: T) -> T {
        let idx = self.breakpoints.partition_point(|&b| b <= s);
        self.levels[idx.saturating_sub(1)]
    }
}

/// A pooled run of consecutive points.
#[derive(Debug, Clone, Copy)]
struct Block<T> {
    weighted_sum: T,
    weight: T,
    len: usize,
}

impl<T: Real> Block<T> {
    fn mean(&self) -> T {
        self.weighted_sum / self.weight
    }
}

/// PAVA over points already sorted by distinct score, given as
/// `(mean target, weight)`. Returns one level per input point.
pub(crate) fn pava_sorted<T: Real>(points: impl IntoIterator<Item = (T, T)>) -> Vec<T> {
    let mut stack: Vec<Block<T>> = Vec::new();
    for (target, weight) in points {
        let mut cur = Block {
            weighted_sum: target * weight,
            weight,
            len: 1,
        };
        while let Some(prev) = stack.last() {
            if prev.mean() > cur.mean() {
                cur = Block {
                    weighted_sum: prev.weighted_sum + cur.weighted_sum,
                    weight: prev.weight + cur.weight,
                    len: prev.len + cur.len,
                };
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    stack
        .iter()
        .flat_map(|b| std::iter::repeat_n(b.mean(), b.len))
        .collect()
}

/// Sorts by score and pools equal scores into `(score, mean target, weight)`.
pub(crate) fn pool_equal_scores<T: Real>(points: &[WeightedPoint<T>]) -> Vec<(T, T, T)> {
    let mut sorted: Vec<&WeightedPoint<T>> = points.iter().collect();
    sorted.sort_by(|a, b| a.score.partial_cmp(&b.score).expect("finite scores"));
    let mut pooled: Vec<(T, T, T)> = Vec::with_capacity(sorted.len());
    for p in sorted {
        match pooled.last_mut() {
            Some((score, sum, weight)) if *score == p.score => {
                *sum = *sum + p.target * p.weight;
                *weight = *weight + p.weight;
            }
            _ => pooled.push((p.score, p.target * p.weight, p.weight)),
        }
    }
    for (_, sum, weight) in &mut pooled {
        *sum = *sum / *weight;
    }
    pooled
}

/// Weighted least-squares non-decreasing fit of `target` on `score`.
pub fn pava<T: Real>(points: &[WeightedPoint<T>]) -> Result<IsotonicFit<T>> {
    if points.is_empty() {
        return Err(Error::domain("isotonic regression needs at least one point"));
    }
    for p in points {
        if !(p.weight > T::zero()) || !p.weight.is_finite() {
            return Err(Error::domain(format!("weights must be positive, got {}", p.weight)));
        }
        if !p.score.is_finite() || !p.target.is_finite() {
            return Err(Error::domain("scores and targets must be finite"));
        }
    }
    let pooled = pool_equal_scores(points);
    let levels = pava_sorted(pooled.iter().map(|&(_, t, w)| (t, w)));
    Ok(IsotonicFit {
        breakpoints: pooled.iter().map(|p| p.0).collect(),
        levels,
    })
}
