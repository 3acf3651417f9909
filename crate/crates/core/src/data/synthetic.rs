//! Seeded synthetic delivery data.
//!
//! Generative process for [`generate_synthetic`], row by row and independently
//! (so any contiguous block is exchangeable):
//!
//! 1. features `x_j ~ N(0, 1)`;
//! 2. signal `m(x) = 0.5 + sum_j w_j x_j` with `w_j = (-1)^j 1.2 / (j + 1)`;
//! 3. with probability `on_time_mass` the label is `0`;
//! 4. otherwise `round(m(x) + s(x) e)` clipped to `[-10, 10]`, where
//!    `e = z + tail_skew (E - 1)`, `z ~ N(0, 1)`, `E ~ Exp(1)` (late-skewed), and
//!    `s(x) = noise_scale * exp(heteroscedasticity * (m(x) - 0.5) / sd(m))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Deviation, LabeledDataset};

const SIGNAL_BIAS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_rows: usize,
    pub n_features: usize,
    pub on_time_mass: f64,
    pub tail_skew: f64,
    pub noise_scale: f64,
    /// Log-slope of the noise scale in the standardized signal; 0 is homoscedastic.
    pub heteroscedasticity: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_rows: 5000,
            n_features: 5,
            on_time_mass: 0.35,
            tail_skew: 1.0,
            noise_scale: 1.2,
            heteroscedasticity: 0.0,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::domain("n_rows must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.on_time_mass) {
            return Err(Error::domain("on_time_mass must lie in [0, 1]"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::domain("noise_scale must be finite and non-negative"));
        }
        if !self.tail_skew.is_finite() || !self.heteroscedasticity.is_finite() {
            return Err(Error::domain("tail_skew and heteroscedasticity must be finite"));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        (0..self.n_features)
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * 1.2 / (j as f64 + 1.0))
            .collect()
    }
}

pub fn generate_synthetic<T: Real>(config: &SyntheticConfig) -> Result<LabeledDataset<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w = config.weights();
    let signal_sd = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let mut features = Vec::with_capacity(config.n_rows);
    let mut labels = Vec::with_capacity(config.n_rows);
    for _ in 0..config.n_rows {
        let x: Vec<f64> = (0..config.n_features)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let centered: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        let on_time = rng.random::<f64>() < config.on_time_mass;
        let z: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(Exp1);
        let label = if on_time {
            Deviation::ON_TIME
        } else {
            let scale = config.noise_scale * (config.heteroscedasticity * centered / signal_sd).exp();
            let dev = SIGNAL_BIAS + centered + scale * (z + config.tail_skew * (e - 1.0));
            Deviation::clipped(dev.round() as i64)
        };
        features.push(x.into_iter().map(T::lit).collect());
        labels.push(label);
    }
    LabeledDataset::new((0..config.n_rows as u64).collect(), features, labels)
}

/// Segmented binary task: each row belongs to one of `segment_rates.len()`
/// segments (one-hot encoded) with its own positive rate, nudged by a latent
/// `z ~ N(0, 1)` with logit slope `slope`. Labels are `0`/`1`. The latent is
/// appended as a last feature only when `observe_latent` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinaryConfig {
    pub n_rows: usize,
    pub segment_rates: Vec<f64>,
    pub slope: f64,
    pub observe_latent: bool,
    pub seed: u64,
}

impl Default for BinaryConfig {
    fn default() -> Self {
        Self {
            n_rows: 4000,
            segment_rates: vec![0.03, 0.15, 0.85, 0.97],
            slope: 0.1,
            observe_latent: false,
            seed: 7,
        }
    }
}

pub fn generate_binary<T: Real>(config: &BinaryConfig) -> Result<LabeledDataset<T>> {
    if config.n_rows == 0 || config.segment_rates.is_empty() {
        return Err(Error::domain("binary generator needs rows and at least one segment"));
    }
    if config.segment_rates.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::domain("segment rates must lie in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.segment_rates.len();
    let mut features = Vec::with_capacity(config.n_rows);
    let mut labels = Vec::with_capacity(config.n_rows);
    for _ in 0..config.n_rows {
        let seg = rng.random_range(0..k);
        let z: f64 = rng.sample(StandardNormal);
        let rate = config.segment_rates[seg];
        let logit = (rate / (1.0 - rate)).ln() + config.slope * z;
        let p = 1.0 / (1.0 + (-logit).exp());
        let y = rng.random::<f64>() < p;
        let mut x = vec![T::zero(); k];
        x[seg] = T::one();
        if config.observe_latent {
            x.push(T::lit(z));
        }
        features.push(x);
        labels.push(Deviation::clipped(i64::from(y)));
    }
    LabeledDataset::new((0..config.n_rows as u64).collect(), features, labels)
}
