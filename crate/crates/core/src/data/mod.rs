//! Datasets, synthetic generation, fold planning and CSV ingestion.

mod folds;
mod hierarchy;
mod io;
mod synthetic;

pub use folds::{timeseries_folds, Fold, FoldPlan, MIN_BLOCK_ROWS};
pub use hierarchy::HierarchicalTable;
pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, ReadOptions};
pub use synthetic::{generate_binary, generate_synthetic, BinaryConfig, SyntheticConfig};

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Signed integer days between actual delivery and the promised date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct Deviation(i32);

impl Deviation {
    pub const MIN: i32 = -10;
    pub const MAX: i32 = 10;
    pub const ON_TIME: Deviation = Deviation(0);

    pub fn new(days: i32) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&days) {
            Ok(Self(days))
        } else {
            Err(Error::domain(format!(
                "deviation {days} outside [{}, {}]",
                Self::MIN,
                Self::MAX
            )))
        }
    }

    /// Clips into the supported range.
    pub fn clipped(days: i64) -> Self {
        Self(days.clamp(i64::from(Self::MIN), i64::from(Self::MAX)) as i32)
    }

    pub fn days(self) -> i32 {
        self.0
    }

    pub fn as_real<T: Real>(self) -> T {
        T::lit(f64::from(self.0))
    }
}

impl TryFrom<i32> for Deviation {
    type Error = Error;
    fn try_from(v: i32) -> Result<Self> {
        Deviation::new(v)
    }
}

impl From<Deviation> for i32 {
    fn from(d: Deviation) -> i32 {
        d.0
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Feature rows with integer deviation labels in chronological order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    times: Vec<u64>,
    features: Vec<Vec<T>>,
    labels: Vec<Deviation>,
}

impl<T: Real> LabeledDataset<T> {
    pub fn new(times: Vec<u64>, features: Vec<Vec<T>>, labels: Vec<Deviation>) -> Result<Self> {
        if times.len() != features.len() || labels.len() != features.len() {
            return Err(Error::domain(format!(
                "dataset columns disagree: {} times, {} feature rows, {} labels",
                times.len(),
                features.len(),
                labels.len()
            )));
        }
        if let Some(first) = features.first() {
            let dim = first.len();
            if let Some(i) = features.iter().position(|r| r.len() != dim) {
                return Err(Error::row(i + 1, format!("expected {dim} features")));
            }
            if let Some(i) = features.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
                return Err(Error::row(i + 1, "feature values must be finite"));
            }
        }
        if let Some(i) = times.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::row(i + 2, "chronological index decreases"));
        }
        Ok(Self {
            times,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimensionality (0 for an empty dataset).
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn features(&self) -> &[Vec<T>] {
        &self.features
    }

    pub fn labels(&self) -> &[Deviation] {
        &self.labels
    }

    pub fn label_values(&self) -> Vec<T> {
        self.labels.iter().map(|l| l.as_real()).collect()
    }

    /// Contiguous row range as a new dataset.
    pub fn slice(&self, rows: Range<usize>) -> Self {
        Self {
            times: self.times[rows.clone()].to_vec(),
            features: self.features[rows.clone()].to_vec(),
            labels: self.labels[rows].to_vec(),
        }
    }

    pub fn require_rows(&self, min: usize, what: &str) -> Result<()> {
        if self.len() < min {
            return Err(Error::domain(format!(
                "{what} needs at least {min} rows, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}
