//! Simulation study: designs, censoring calibration and Monte Carlo metrics.

pub mod design;
pub mod jtpa;
pub mod monte_carlo;

pub use design::{
    censoring_rate, censoring_rate_with, design_registry, gen_design, gen_design_with_latents,
    Covariates, Design, DesignRegistry, Latent, SimDesign, CALIBRATED_LAMBDAS,
};
pub use jtpa::{jtpa_like, jtpa_like_beta, jtpa_like_rows, JtpaLikeRow};
pub use monte_carlo::{
    run_monte_carlo, run_monte_carlo_with, run_replication, summarize, Estimator,
    ExogenousBaseline, IpcwEstimator, MetricRecord, Replication, SimMetrics, COVERAGE_LEVEL,
};
