//! Replication engine: bias, RMSE and warp-speed bootstrap coverage.
//!
//! Each replication generates a sample, estimates `beta`, and estimates it
//! once more on a single bootstrap resample. Coverage pools the centered
//! differences `beta* - beta_hat` across replications and forms a percentile
//! interval around each replication's estimate from the pooled quantiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{fit, quantile, resample_indices, FitConfig};
use crate::model::Dataset;
use crate::rng::{self, derive_seed, tag};
use crate::simlab::design::{gen_design, SimDesign};

/// Nominal coverage level of the warp-speed intervals.
pub const COVERAGE_LEVEL: f64 = 0.95;

/// Anything that maps a sample to a coefficient vector.
pub trait Estimator: Send + Sync {
    fn estimate(&self, data: &Dataset, seed: u64) -> Result<Vec<f64>>;
}

/// The IPCW minimum-distance estimator with a fixed configuration; the
/// multi-start seed is supplied per call.
pub struct IpcwEstimator(pub FitConfig);

impl Estimator for IpcwEstimator {
    fn estimate(&self, data: &Dataset, seed: u64) -> Result<Vec<f64>> {
        Ok(fit(data, &self.0.with_seed(seed))?.beta_hat)
    }
}

/// Same estimator with the regressors used as their own instruments,
/// i.e. ignoring endogeneity. Only useful as a qualitative comparison.
pub struct ExogenousBaseline(pub FitConfig);

impl Estimator for ExogenousBaseline {
    fn estimate(&self, data: &Dataset, seed: u64) -> Result<Vec<f64>> {
        let exo = data.with_instruments_from_regressors();
        Ok(fit(&exo, &self.0.with_seed(seed))?.beta_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub bias: Vec<f64>,
    pub rmse: f64,
    pub coverage: Vec<f64>,
    /// Replications that entered the metrics.
    pub n_reps: usize,
    pub n_failed: usize,
    pub censoring_rate_observed: f64,
}

/// Table-shaped record: `{design, u, n, cens_pct, bias, rmse, coverage}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub design: u8,
    pub u: f64,
    pub n: usize,
    pub cens_pct: f64,
    pub bias: Vec<f64>,
    pub rmse: f64,
    pub coverage: Vec<f64>,
}

impl SimMetrics {
    pub fn record(&self, design: &SimDesign) -> MetricRecord {
        MetricRecord {
            design: design.design_id,
            u: design.u.value(),
            n: design.n,
            cens_pct: 100.0 * self.censoring_rate_observed,
            bias: self.bias.clone(),
            rmse: self.rmse,
            coverage: self.coverage.clone(),
        }
    }
}

/// Estimates from one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub beta_hat: Vec<f64>,
    pub beta_star: Vec<f64>,
    pub censored_fraction: f64,
}

/// Replication number `r` of a design: sample, estimate, one bootstrap re-estimate.
pub fn run_replication(
    design: &SimDesign,
    r: usize,
    estimator: &dyn Estimator,
) -> Result<Replication> {
    let data_design = SimDesign {
        seed: derive_seed(design.seed, tag::DATA, r as u64),
        ..design.clone()
    };
    let data = gen_design(&data_design)?;
    let fit_seed = derive_seed(design.seed, tag::FIT, r as u64);
    let beta_hat = estimator.estimate(&data, fit_seed)?;
    let mut warp_rng = rng::stream(design.seed, tag::WARP, r as u64);
    let (idx, _) = resample_indices(&data, &mut warp_rng, r)?;
    let beta_star = estimator.estimate(&data.select(&idx), fit_seed)?;
    Ok(Replication {
        beta_hat,
        beta_star,
        censored_fraction: data.censored_fraction(),
    })
}

/// Runs `n_reps` replications in parallel with any estimator.
///
/// Failed replications are excluded when they are fewer than 1% of the
/// total; otherwise the run fails.
pub fn run_monte_carlo_with(
    design: &SimDesign,
    n_reps: usize,
    estimator: &dyn Estimator,
) -> Result<SimMetrics> {
    design.validate()?;
    if n_reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let outcomes: Vec<Result<Replication>> = (0..n_reps)
        .into_par_iter()
        .map(|r| run_replication(design, r, estimator))
        .collect();
    let failures: Vec<&Error> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();
    if !failures.is_empty() {
        if failures.len() * 100 >= n_reps {
            return Err(Error::ReplicationFailures {
                failed: failures.len(),
                total: n_reps,
                first: failures[0].to_string(),
            });
        }
        log::warn!(
            "{} of {n_reps} replications failed and were excluded: {}",
            failures.len(),
            failures[0]
        );
    }
    let n_failed = failures.len();
    let reps: Vec<Replication> = outcomes.into_iter().filter_map(Result::ok).collect();
    Ok(summarize(&reps, &design.true_beta(), n_failed))
}

/// Metrics from finished replications against the true coefficients.
pub fn summarize(reps: &[Replication], truth: &[f64], n_failed: usize) -> SimMetrics {
    let m = reps.len() as f64;
    let k = truth.len();
    let bias = (0..k)
        .map(|c| reps.iter().map(|r| r.beta_hat[c] - truth[c]).sum::<f64>() / m)
        .collect();
    let mse = reps
        .iter()
        .map(|r| {
            r.beta_hat
                .iter()
                .zip(truth)
                .map(|(b, t)| (b - t).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / m;
    let alpha = 1.0 - COVERAGE_LEVEL;
    let coverage = (0..k)
        .map(|c| {
            let diffs: Vec<f64> = reps
                .iter()
                .map(|r| r.beta_star[c] - r.beta_hat[c])
                .collect();
            let q_lo = quantile(&diffs, alpha / 2.0);
            let q_hi = quantile(&diffs, 1.0 - alpha / 2.0);
            let hits = reps
                .iter()
                .filter(|r| r.beta_hat[c] - q_hi <= truth[c] && truth[c] <= r.beta_hat[c] - q_lo)
                .count();
            hits as f64 / m
        })
        .collect();
    SimMetrics {
        bias,
        rmse: mse.sqrt(),
        coverage,
        n_reps: reps.len(),
        n_failed,
        censoring_rate_observed: reps.iter().map(|r| r.censored_fraction).sum::<f64>() / m,
    }
}

/// Replications of the IPCW estimator; the multi-start seed in `fit_cfg` is
/// replaced by per-replication substreams of the design seed.
pub fn run_monte_carlo(
    design: &SimDesign,
    n_reps: usize,
    fit_cfg: &FitConfig,
) -> Result<SimMetrics> {
    run_monte_carlo_with(design, n_reps, &IpcwEstimator(fit_cfg.clone()))
}
