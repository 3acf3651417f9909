//! Built-in linear scorers and the adapter for externally produced scores.
//!
//! The calibration layers only consume scores, so any upstream model can be
//! plugged in through [`load_external_scores`]. The linear scorers here exist
//! so the pipeline runs end to end without external tooling.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ridge penalty for [`fit_least_squares`] on standardized features.
pub const RIDGE_PENALTY: f64 = 1e-6;
pub const LOGISTIC_ITERATIONS: usize = 500;
pub const LOGISTIC_STEP: f64 = 0.1;
pub const LOGISTIC_L2: f64 = 1e-4;

/// Maps a feature row to a real score.
pub trait Scorer<T> {
    fn score(&self, x: &[T]) -> T;

    fn score_all(&self, rows: &[Vec<T>]) -> Vec<T> {
        rows.iter().map(|x| self.score(x)).collect()
    }
}

/// Per-feature centering and scaling. Features with (near) zero variance get
/// scale 0 and are ignored by the linear models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn fit(rows: &[Vec<T>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = T::of_usize(rows.len().max(1));
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m = *m + *v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s = *s + (*v - *m) * (*v - *m);
            }
        }
        let scale = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > T::lit(1e-12) * (T::one() + m.abs()) {
                    sd
                } else {
                    T::zero()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.scale[j] > T::zero()).collect()
    }

    /// Standardized active features.
    fn transform(&self, x: &[T], active: &[usize]) -> Vec<T> {
        active
            .iter()
            .map(|&j| (x[j] - self.mean[j]) / self.scale[j])
            .collect()
    }
}

fn linear<T: Real>(std: &Standardizer<T>, weights: &[T], intercept: T, x: &[T]) -> T {
    weights
        .iter()
        .enumerate()
        .filter(|(j, _)| std.scale[*j] > T::zero())
        .fold(intercept, |acc, (j, w)| {
            acc + *w * (x[j] - std.mean[j]) / std.scale[j]
        })
}

fn check_rows<T: Real>(rows: &[Vec<T>], targets: usize) -> Result<usize> {
    if rows.len() != targets {
        return Err(Error::domain(format!(
            "{} feature rows but {targets} targets",
            rows.len()
        )));
    }
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::domain("feature rows must share one dimensionality"));
    }
    Ok(dim)
}

/// Linear regression `h(x) = intercept + w . standardize(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScorer<T> {
    pub standardizer: Standardizer<T>,
    pub weights: Vec<T>,
    pub intercept: T,
}

impl<T: Real> Scorer<T> for RegressionScorer<T> {
    fn score(&self, x: &[T]) -> T {
        linear(&self.standardizer, &self.weights, self.intercept, x)
    }
}

/// Ridge least squares on standardized features, minimizing
/// `sum (y - h(x))^2 + 1e-6 |w|^2`. The intercept is unpenalized.
pub fn fit_least_squares<T: Real>(train: &LabeledDataset<T>) -> Result<RegressionScorer<T>> {
    fit_least_squares_xy(train.features(), &train.label_values())
}

pub fn fit_least_squares_xy<T: Real>(rows: &[Vec<T>], y: &[T]) -> Result<RegressionScorer<T>> {
    let dim = check_rows(rows, y.len())?;
    if rows.len() < 2 {
        return Err(Error::domain(format!(
            "least squares needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let standardizer = Standardizer::fit(rows);
    let active = standardizer.active();
    let y_mean = crate::scalar::mean(y);
    let p = active.len();
    let mut gram = vec![vec![T::zero(); p]; p];
    let mut rhs = vec![T::zero(); p];
    for (x, &target) in rows.iter().zip(y) {
        let z = standardizer.transform(x, &active);
        let centered = target - y_mean;
        for a in 0..p {
            rhs[a] = rhs[a] + z[a] * centered;
            for b in 0..=a {
                gram[a][b] = gram[a][b] + z[a] * z[b];
            }
        }
    }
    for a in 0..p {
        gram[a][a] = gram[a][a] + T::lit(RIDGE_PENALTY);
        for b in 0..a {
            gram[b][a] = gram[a][b];
        }
    }
    let solved = cholesky_solve(gram, rhs)?;
    let mut weights = vec![T::zero(); dim];
    for (&j, w) in active.iter().zip(solved) {
        weights[j] = w;
    }
    Ok(RegressionScorer {
        standardizer,
        weights,
        intercept: y_mean,
    })
}

/// Solves `A x = b` for symmetric positive definite `A`.
fn cholesky_solve<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - a[j][k] * a[j][k];
        }
        if !(d > T::zero()) {
            return Err(Error::domain("normal equations are not positive definite"));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - a[i][k] * b[k];
        }
        b[i] = s / a[i][i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - a[k][i] * b[k];
        }
        b[i] = s / a[i][i];
    }
    Ok(b)
}

/// Logistic scorer with outputs in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryScorer<T> {
    pub standardizer: Standardizer<T>,
    pub weights: Vec<T>,
    pub intercept: T,
}

impl<T: Real> BinaryScorer<T> {
    /// Scorer that ignores its input; the fallback for single-class training data.
    pub fn constant(dim: usize, p: T) -> Self {
        let eps = T::lit(1e-6);
        let p = p.max(eps).min(T::one() - eps);
        Self {
            standardizer: Standardizer {
                mean: vec![T::zero(); dim],
                scale: vec![T::zero(); dim],
            },
            weights: vec![T::zero(); dim],
            intercept: (p / (T::one() - p)).ln(),
        }
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl<T: Real> Scorer<T> for BinaryScorer<T> {
    fn score(&self, x: &[T]) -> T {
        sigmoid(linear(&self.standardizer, &self.weights, self.intercept, x))
    }
}

/// Logistic regression by full-batch gradient descent with a fixed schedule.
/// Labels must be 0 or 1.
pub fn fit_logistic_scorer<T: Real>(train: &LabeledDataset<T>) -> Result<BinaryScorer<T>> {
    let targets = train
        .labels()
        .iter()
        .map(|l| match l.days() {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::domain(format!("binary scorer needs 0/1 labels, got {other}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    fit_logistic(train.features(), &targets)
}

pub fn fit_logistic<T: Real>(rows: &[Vec<T>], targets: &[bool]) -> Result<BinaryScorer<T>> {
    let dim = check_rows(rows, targets.len())?;
    let positives = targets.iter().filter(|t| **t).count();
    if positives == 0 || positives == targets.len() {
        return Err(Error::domain("logistic scorer needs both classes present"));
    }
    let standardizer = Standardizer::fit(rows);
    let active = standardizer.active();
    let width = active.len();
    let z: Vec<T> = rows.iter().flat_map(|x| standardizer.transform(x, &active)).collect();
    let y: Vec<T> = targets.iter().map(|&t| if t { T::one() } else { T::zero() }).collect();
    let n = T::of_usize(rows.len());
    let (step, l2) = (T::lit(LOGISTIC_STEP), T::lit(LOGISTIC_L2));
    let mut w = vec![T::zero(); active.len()];
    let mut b = T::zero();
    let mut grad = vec![T::zero(); active.len()];
    for _ in 0..LOGISTIC_ITERATIONS {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut grad_b = T::zero();
        for (i, &yi) in y.iter().enumerate() {
            let zi = &z[i * width..(i + 1) * width];
            let margin = zi.iter().zip(&w).fold(b, |acc, (a, c)| acc + *a * *c);
            let err = sigmoid(margin) - yi;
            grad_b = grad_b + err;
            for (g, a) in grad.iter_mut().zip(zi) {
                *g = *g + err * *a;
            }
        }
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj = *wj - step * (*g / n + l2 * *wj);
        }
        b = b - step * grad_b / n;
    }
    let mut weights = vec![T::zero(); dim];
    for (&j, v) in active.iter().zip(w) {
        weights[j] = v;
    }
    Ok(BinaryScorer {
        standardizer,
        weights,
        intercept: b,
    })
}

/// Parses one score per line. Errors name the 1-based offending line.
pub fn parse_external_scores<T: Real>(text: &str, expected_rows: usize) -> Result<Vec<T>> {
    let scores = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            line.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| Error::row(i + 1, format!("non-numeric score {line:?}")))
        })
        .collect::<Result<Vec<T>>>()?;
    if scores.len() != expected_rows {
        return Err(Error::RowCount {
            expected: expected_rows,
            found: scores.len(),
        });
    }
    Ok(scores)
}

pub fn load_external_scores<T: Real>(path: impl AsRef<Path>, expected_rows: usize) -> Result<Vec<T>> {
    parse_external_scores(&std::fs::read_to_string(path)?, expected_rows)
}
