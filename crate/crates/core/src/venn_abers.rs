//! Venn-Abers calibration: inductive intervals, cross-validated aggregation and
//! the one-vs-rest multiclass extension.

use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDistribution, ProbabilityInterval};
use crate::error::{Error, Result};
use crate::isotonic::{pava, IsotonicFit, WeightedPoint};
use crate::learners::{fit_logistic, BinaryScorer, Scorer};
use crate::scalar::Real;

/// Clip applied to `p0`/`p1` before the geometric means.
pub const PROBABILITY_CLIP: f64 = 1e-6;

/// Calibration sets up to this many distinct scores get a precomputed
/// interval table on first query.
const MAX_TABLE_BLOCKS: usize = 4096;

/// Calibration scores with binary labels, pre-pooled for repeated IVAP queries.
///
/// The interval depends only on where the test score falls among the distinct
/// calibration scores, so the `2K + 1` possible answers are tabulated lazily.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<(T, u8)>", into = "Vec<(T, u8)>")]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct IvapCalibrator<T: Real> {
    pairs: Vec<(T, bool)>,
    /// Distinct sorted scores with (positive count, total count).
    blocks: Vec<(T, usize, usize)>,
    /// Entry `2i` is the gap below block `i`, entry `2i + 1` block `i` itself.
    table: OnceLock<Vec<ProbabilityInterval<T>>>,
}

const NO_POOL: usize = usize::MAX;

/// Pool of calibration blocks as (positives, count), linked to the next pool
/// away from the head of its stack.
#[derive(Debug, Clone, Copy)]
struct Pool {
    counts: (usize, usize),
    next: usize,
}

#[derive(Debug)]
struct PoolChains {
    nodes: Vec<Pool>,
    left_top: Vec<usize>,
    right_top: Vec<usize>,
}

/// Exact `a.0 / a.1 > b.0 / b.1`.
fn above(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 * b.1 > b.0 * a.1
}

fn merged(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    (a.0 + b.0, a.1 + b.1)
}

impl<T: Real> PartialEq for IvapCalibrator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.pairs == other.pairs
    }
}

impl<T: Real> IvapCalibrator<T> {
    pub fn new(pairs: Vec<(T, bool)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::domain("Venn-Abers calibration set is empty"));
        }
        if pairs.iter().any(|(s, _)| !s.is_finite()) {
            return Err(Error::domain("calibration scores must be finite"));
        }
        let mut sorted = pairs.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
        let mut blocks: Vec<(T, usize, usize)> = Vec::new();
        for (s, y) in sorted {
            match blocks.last_mut() {
                Some(last) if last.0 == s => {
                    last.1 += usize::from(y);
                    last.2 += 1;
                }
                _ => blocks.push((s, usize::from(y), 1)),
            }
        }
        Ok(Self {
            pairs,
            blocks,
            table: OnceLock::new(),
        })
    }

    pub fn pairs(&self) -> &[(T, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn locate(&self, score: T) -> (usize, bool) {
        let pos = self.blocks.partition_point(|b| b.0 < score);
        (pos, self.blocks.get(pos).is_some_and(|b| b.0 == score))
    }

    /// Prefix and suffix PAVA pools of the calibration blocks, stored as
    /// persistent stacks so every test position can read its neighbours.
    fn pool_chains(&self) -> PoolChains {
        let k = self.blocks.len();
        let mut nodes: Vec<Pool> = Vec::with_capacity(2 * k);
        let mut left_top = vec![NO_POOL; k + 1];
        let mut top = NO_POOL;
        for (j, b) in self.blocks.iter().enumerate() {
            let mut cur = (b.1, b.2);
            while top != NO_POOL && above(nodes[top].counts, cur) {
                cur = merged(nodes[top].counts, cur);
                top = nodes[top].next;
            }
            nodes.push(Pool { counts: cur, next: top });
            top = nodes.len() - 1;
            left_top[j + 1] = top;
        }
        let mut right_top = vec![NO_POOL; k + 1];
        top = NO_POOL;
        for (j, b) in self.blocks.iter().enumerate().rev() {
            let mut cur = (b.1, b.2);
            while top != NO_POOL && above(cur, nodes[top].counts) {
                cur = merged(nodes[top].counts, cur);
                top = nodes[top].next;
            }
            nodes.push(Pool { counts: cur, next: top });
            top = nodes.len() - 1;
            right_top[j] = top;
        }
        PoolChains {
            nodes,
            left_top,
            right_top,
        }
    }

    /// Isotonic fit of the calibration set augmented with one test point
    /// labelled `label`, evaluated at the test point. The test point joins
    /// block `pos` when `hit`, else sits just below it.
    fn augmented_level(&self, chains: &PoolChains, pos: usize, hit: bool, label: bool) -> T {
        let extra = usize::from(label);
        let (mut cur, mut left, mut right) = if hit {
            let b = &self.blocks[pos];
            ((b.1 + extra, b.2 + 1), chains.left_top[pos], chains.right_top[pos + 1])
        } else {
            ((extra, 1), chains.left_top[pos], chains.right_top[pos])
        };
        loop {
            if left != NO_POOL && above(chains.nodes[left].counts, cur) {
                cur = merged(chains.nodes[left].counts, cur);
                left = chains.nodes[left].next;
            } else if right != NO_POOL && above(cur, chains.nodes[right].counts) {
                cur = merged(chains.nodes[right].counts, cur);
                right = chains.nodes[right].next;
            } else {
                break;
            }
        }
        T::of_usize(cur.0) / T::of_usize(cur.1)
    }

    fn direct(&self, chains: &PoolChains, pos: usize, hit: bool) -> ProbabilityInterval<T> {
        ProbabilityInterval {
            p0: self.augmented_level(chains, pos, hit, false),
            p1: self.augmented_level(chains, pos, hit, true),
        }
    }

    /// `(p0, p1) = (f0(s), f1(s))` where `f_l` is the isotonic fit on the
    /// calibration set plus the test score labelled `l`.
    pub fn interval(&self, score: T) -> ProbabilityInterval<T> {
        let (pos, hit) = self.locate(score);
        if self.blocks.len() > MAX_TABLE_BLOCKS {
            return self.direct(&self.pool_chains(), pos, hit);
        }
        let table = self.table.get_or_init(|| {
            let chains = self.pool_chains();
            (0..=2 * self.blocks.len())
                .map(|k| self.direct(&chains, k / 2, k % 2 == 1))
                .collect()
        });
        table[2 * pos + usize::from(hit)]
    }
}

impl<T: Real> TryFrom<Vec<(T, u8)>> for IvapCalibrator<T> {
    type Error = Error;
    fn try_from(raw: Vec<(T, u8)>) -> Result<Self> {
        let pairs = raw
            .into_iter()
            .map(|(s, y)| match y {
                0 => Ok((s, false)),
                1 => Ok((s, true)),
                other => Err(Error::Format(format!("calibration label {other} is not binary"))),
            })
            .collect::<Result<Vec<_>>>()?;
        IvapCalibrator::new(pairs)
    }
}

impl<T: Real> From<IvapCalibrator<T>> for Vec<(T, u8)> {
    fn from(c: IvapCalibrator<T>) -> Self {
        c.pairs.into_iter().map(|(s, y)| (s, u8::from(y))).collect()
    }
}

/// One-shot IVAP interval for a single test score.
pub fn ivap_interval<T: Real>(calibration: &[(T, bool)], test_score: T) -> Result<ProbabilityInterval<T>> {
    let c = IvapCalibrator::new(calibration.to_vec())?;
    let (pos, hit) = c.locate(test_score);
    Ok(c.direct(&c.pool_chains(), pos, hit))
}

fn geometric_mean<T: Real>(values: impl Iterator<Item = T> + Clone) -> T {
    let mut it = values.clone();
    let first = it.next().expect("non-empty");
    if it.all(|v| v == first) {
        return first;
    }
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v.ln(), n + 1));
    (sum / T::of_usize(n)).exp()
}

/// Combines per-fold intervals into one probability,
/// `GM(p1) / (GM(1 - p0) + GM(p1))`, after clipping into `[1e-6, 1 - 1e-6]`.
pub fn cvap_aggregate<T: Real>(intervals: &[ProbabilityInterval<T>]) -> Result<T> {
    if intervals.is_empty() {
        return Err(Error::domain("cannot aggregate zero intervals"));
    }
    let eps = T::lit(PROBABILITY_CLIP);
    let clip = |p: T| p.max(eps).min(T::one() - eps);
    let gm_p1 = geometric_mean(intervals.iter().map(|iv| clip(iv.p1)));
    let gm_q0 = geometric_mean(intervals.iter().map(|iv| T::one() - clip(iv.p0)));
    Ok(gm_p1 / (gm_q0 + gm_p1))
}

/// One fold: a scorer trained on the fold's training rows and the IVAP
/// calibration set built from its calibration rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct CvapFold<T: Real> {
    pub scorer: BinaryScorer<T>,
    pub calibration: IvapCalibrator<T>,
}

/// Cross-validated Venn-Abers predictor for one binary task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct CvapModel<T: Real> {
    pub folds: Vec<CvapFold<T>>,
}

/// Training and calibration row spans of one fold.
pub type FoldSpans = (Range<usize>, Range<usize>);

fn train_scorer<T: Real>(rows: &[Vec<T>], targets: &[bool]) -> Result<BinaryScorer<T>> {
    let positives = targets.iter().filter(|t| **t).count();
    let dim = rows.first().map_or(0, Vec::len);
    if positives == 0 || positives == targets.len() {
        let rate = T::of_usize(positives) / T::of_usize(targets.len().max(1));
        return Ok(BinaryScorer::constant(dim, rate));
    }
    fit_logistic(rows, targets)
}

impl<T: Real> CvapModel<T> {
    /// Fits one fold per `(train, calibration)` span pair. Folds whose training
    /// rows hold a single class fall back to a constant scorer.
    pub fn fit_folds(rows: &[Vec<T>], targets: &[bool], folds: &[FoldSpans]) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::domain("rows and targets differ in length"));
        }
        if folds.is_empty() {
            return Err(Error::domain("CVAP needs at least one fold"));
        }
        let folds = folds
            .iter()
            .map(|(train, cal)| {
                if train.is_empty() || cal.is_empty() || train.end > rows.len() || cal.end > rows.len() {
                    return Err(Error::domain("fold spans must be non-empty and in range"));
                }
                let scorer = train_scorer(&rows[train.clone()], &targets[train.clone()])?;
                let pairs = cal.clone().map(|i| (scorer.score(&rows[i]), targets[i])).collect();
                Ok(CvapFold {
                    scorer,
                    calibration: IvapCalibrator::new(pairs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { folds })
    }

    /// Standard `k`-fold scheme over contiguous chronological blocks: fold `f`
    /// calibrates on block `f` and trains on every other row.
    pub fn fit_kfold(rows: &[Vec<T>], targets: &[bool], k: usize) -> Result<Self> {
        let n = rows.len();
        if k < 2 || n < 2 * k {
            return Err(Error::domain(format!("{k}-fold CVAP needs k >= 2 and at least {} rows", 2 * k)));
        }
        let mut folds = Vec::with_capacity(k);
        for f in 0..k {
            let cal = f * n / k..(f + 1) * n / k;
            let (train_rows, train_targets): (Vec<Vec<T>>, Vec<bool>) = (0..n)
                .filter(|i| !cal.contains(i))
                .map(|i| (rows[i].clone(), targets[i]))
                .unzip();
            let scorer = train_scorer(&train_rows, &train_targets)?;
            let pairs = cal.clone().map(|i| (scorer.score(&rows[i]), targets[i])).collect();
            folds.push(CvapFold {
                scorer,
                calibration: IvapCalibrator::new(pairs)?,
            });
        }
        Ok(Self { folds })
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn intervals(&self, x: &[T]) -> Vec<ProbabilityInterval<T>> {
        self.folds
            .iter()
            .map(|f| f.calibration.interval(f.scorer.score(x)))
            .collect()
    }

    pub fn predict(&self, x: &[T]) -> T {
        cvap_aggregate(&self.intervals(x)).expect("models hold at least one fold")
    }
}

/// Isotonic-regression calibration of one binary scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct IsotonicCalibrated<T: Real> {
    pub scorer: BinaryScorer<T>,
    pub fit: IsotonicFit<T>,
}

impl<T: Real> IsotonicCalibrated<T> {
    pub fn fit(rows: &[Vec<T>], targets: &[bool], spans: &FoldSpans) -> Result<Self> {
        let (train, cal) = spans;
        if train.is_empty() || cal.is_empty() || train.end > rows.len() || cal.end > rows.len() {
            return Err(Error::domain("fold spans must be non-empty and in range"));
        }
        let scorer = train_scorer(&rows[train.clone()], &targets[train.clone()])?;
        let points: Vec<_> = cal
            .clone()
            .map(|i| {
                let t = if targets[i] { T::one() } else { T::zero() };
                WeightedPoint::unit(scorer.score(&rows[i]), t)
            })
            .collect();
        Ok(Self {
            fit: pava(&points)?,
            scorer,
        })
    }

    pub fn predict(&self, x: &[T]) -> T {
        self.fit.eval(self.scorer.score(x))
    }
}

/// Normalizes independent one-vs-rest probabilities onto the simplex.
pub fn normalize_one_vs_rest<T: Real>(raw: &[T]) -> Result<Vec<T>> {
    let eps = T::lit(PROBABILITY_CLIP);
    if raw.is_empty() || raw.iter().any(|p| !p.is_finite() || *p < T::zero()) {
        return Err(Error::domain("one-vs-rest probabilities must be finite and non-negative"));
    }
    let floored: Vec<T> = raw.iter().map(|p| p.max(eps)).collect();
    let total: T = floored.iter().copied().sum();
    Ok(floored.into_iter().map(|p| p / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub enum OneVsRest<T: Real> {
    Cvap { k: usize, models: Vec<CvapModel<T>> },
    Ir { models: Vec<IsotonicCalibrated<T>> },
}

/// One-vs-rest multiclass classifier whose per-class probabilities are
/// calibrated (CVAP or isotonic) and normalized into a discrete distribution
/// over ascending class values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct MulticlassCalibrated<T: Real> {
    pub classes: Vec<i32>,
    pub calibration: OneVsRest<T>,
}

fn class_targets(labels: &[i32], class: i32) -> Vec<bool> {
    labels.iter().map(|&l| l == class).collect()
}

fn ascending_classes(classes: &[i32]) -> Result<()> {
    if classes.len() < 2 {
        return Err(Error::domain("multiclass calibration needs at least two classes"));
    }
    if classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("classes must be strictly ascending"));
    }
    Ok(())
}

impl<T: Real> MulticlassCalibrated<T> {
    pub fn fit_cvap(rows: &[Vec<T>], labels: &[i32], classes: &[i32], folds: &[FoldSpans]) -> Result<Self> {
        ascending_classes(classes)?;
        let models = classes
            .iter()
            .map(|&c| CvapModel::fit_folds(rows, &class_targets(labels, c), folds))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            classes: classes.to_vec(),
            calibration: OneVsRest::Cvap {
                k: folds.len(),
                models,
            },
        })
    }

    pub fn fit_isotonic(rows: &[Vec<T>], labels: &[i32], classes: &[i32], spans: &FoldSpans) -> Result<Self> {
        ascending_classes(classes)?;
        let models = classes
            .iter()
            .map(|&c| IsotonicCalibrated::fit(rows, &class_targets(labels, c), spans))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            classes: classes.to_vec(),
            calibration: OneVsRest::Ir { models },
        })
    }

    /// Per-class calibrated probabilities before normalization.
    pub fn raw_probabilities(&self, x: &[T]) -> Vec<T> {
        match &self.calibration {
            OneVsRest::Cvap { models, .. } => models.iter().map(|m| m.predict(x)).collect(),
            OneVsRest::Ir { models } => models.iter().map(|m| m.predict(x)).collect(),
        }
    }

    pub fn predict(&self, x: &[T]) -> Result<DiscreteDistribution<T>> {
        let probs = normalize_one_vs_rest(&self.raw_probabilities(x))?;
        let support = self.classes.iter().map(|&c| T::lit(f64::from(c))).collect();
        DiscreteDistribution::new(support, probs)
    }

    /// Checks structural consistency after deserialization.
    pub fn validate(&self) -> Result<()> {
        ascending_classes(&self.classes)?;
        let n = match &self.calibration {
            OneVsRest::Cvap { k, models } => {
                if models.iter().any(|m| m.k() != *k || m.k() == 0) {
                    return Err(Error::Format("every CVAP model needs k folds".into()));
                }
                models.len()
            }
            OneVsRest::Ir { models } => models.len(),
        };
        if n != self.classes.len() {
            return Err(Error::Format("one calibrated model per class required".into()));
        }
        Ok(())
    }
}
