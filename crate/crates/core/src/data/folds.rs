use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest block a fold plan may produce.
pub const MIN_BLOCK_ROWS: usize = 2;

/// Row spans for one expanding-window fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Range<usize>,
    pub calibration: Range<usize>,
    pub validation: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_rows: usize,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn last(&self) -> &Fold {
        self.folds.last().expect("fold plans hold at least one fold")
    }
}

/// Splits `n_rows` chronologically ordered rows into `k + 2` equal contiguous
/// blocks (remainder rows go to the final block). Fold `i` (1-based) trains on
/// blocks `1..=i`, calibrates on block `i + 1` and validates on block `i + 2`.
pub fn timeseries_folds(n_rows: usize, k: usize) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::domain("fold count must be at least 1"));
    }
    let blocks = k + 2;
    let size = n_rows / blocks;
    if size < MIN_BLOCK_ROWS {
        return Err(Error::domain(format!(
            "{n_rows} rows cannot form {blocks} blocks of at least {MIN_BLOCK_ROWS} rows"
        )));
    }
    let block = |j: usize| {
        let end = if j + 1 == blocks { n_rows } else { (j + 1) * size };
        j * size..end
    };
    let folds = (1..=k)
        .map(|i| Fold {
            train: 0..block(i - 1).end,
            calibration: block(i),
            validation: block(i + 1),
        })
        .collect();
    Ok(FoldPlan { n_rows, folds })
}
