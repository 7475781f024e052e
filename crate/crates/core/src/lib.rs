//! Quantile regression under endogeneity and random right censoring.
//!
//! The estimator reweights uncensored rows by the inverse Kaplan–Meier
//! estimate of the censoring survival function and minimizes the average
//! squared violation of unconditional instrument moment conditions over a
//! parameter box, with a multi-start Nelder–Mead search. Inference is by
//! percentile bootstrap; [`simlab`] reproduces the simulation study and
//! [`diagnostics`] implements the feasibility and rank checks.

pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod km;
pub mod model;
pub mod moment;
pub mod optim;
pub mod registry;
pub mod rng;
pub mod simlab;

pub use error::{Error, Result};
pub use inference::{
    bootstrap, fit, fit_context, percentile_ci, quantile, BootstrapResult, FitConfig, FitResult,
};
pub use km::KmCurve;
pub use model::{Dataset, Observation, QuantileLevel, ValidationReport, Violation};
pub use moment::MomentContext;
pub use optim::{multi_start, nelder_mead, LocalResult, OptimConfig, OptimResult};
pub use registry::Registry;
