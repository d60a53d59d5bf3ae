//! Monte Carlo harness: test densities, sampling, risks and rate slopes.

pub mod density;
pub mod experiment;
pub mod output;
pub mod sampling;

pub use density::{density_cauchy_power, density_smooth_compact, TestDensity};
pub use experiment::{
    l2_risk, pointwise_risk, rate_experiment, DensitySpec, ErrorSpec, ExperimentSpec, RiskEstimate, RiskReport,
    RiskSettings, RiskSpec,
};
pub use sampling::{sample_errors, sample_observations};
