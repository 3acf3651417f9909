//! Distributional forecasting of delivery-time deviations.
//!
//! Conformal predictive systems turn a point regressor into a calibrated
//! predictive CDF; Venn-Abers predictors turn classifier scores into
//! calibrated probabilities. A two-stage method combines both, and a
//! cost-sensitive rule turns any forecast back into an integer-day point
//! prediction.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`.
//!
//! ```
//! use fulcal::{PredictiveDistribution, Scps};
//!
//! let model = Scps::fit(&[0.0, 0.0, 0.0], &[-1.0, 0.0, 2.0]).unwrap();
//! let cdf = model.cdf(1.0, 0.5).unwrap();
//! assert_eq!(cdf.quantile(0.5).unwrap(), 1.0);
//! ```

pub mod cps;
pub mod data;
pub mod decision;
pub mod dist;
pub mod error;
pub mod isotonic;
pub mod learners;
pub mod metrics;
pub mod scalar;
pub mod two_stage;
pub mod venn_abers;

pub use cps::{CpsModel, McpsModel, ScpsModel};
pub use data::{Deviation, FoldPlan, LabeledDataset};
pub use decision::{DecisionRuleConfig, PointRule, TuningReport};
pub use dist::{
    Component, DiscreteDistribution, Distribution, EmpiricalPredictiveCdf, MixtureDistribution,
    PredictiveDistribution, ProbabilityInterval,
};
pub use error::{Error, Result};
pub use metrics::EvaluationReport;
pub use scalar::Real;
pub use two_stage::{DeliveryStatus, TwoStageModel};
pub use venn_abers::{CvapModel, MulticlassCalibrated};

pub type PredictiveCdf = EmpiricalPredictiveCdf<f64>;
pub type Categorical = DiscreteDistribution<f64>;
pub type Mixture = MixtureDistribution<f64>;
pub type Forecast = Distribution<f64>;
pub type Scps = ScpsModel<f64>;
pub type Mcps = McpsModel<f64>;
pub type Cvap = CvapModel<f64>;
pub type Multiclass = MulticlassCalibrated<f64>;
pub type TwoStage = TwoStageModel<f64>;
pub type Dataset = LabeledDataset<f64>;

pub type PredictiveCdf32 = EmpiricalPredictiveCdf<f32>;
pub type Forecast32 = Distribution<f32>;
