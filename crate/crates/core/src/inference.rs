//! Point estimation and percentile-bootstrap inference.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::km::{KmCurve, DEFAULT_FLOOR_EPSILON};
use crate::model::{Dataset, QuantileLevel};
use crate::moment::{MomentContext, DEFAULT_KERNEL};
use crate::optim::{multi_start, OptimConfig, OptimResult};
use crate::rng::{self, tag};

/// Consecutive empty-event resamples tolerated before giving up.
pub const MAX_CONSECUTIVE_REDRAWS: usize = 100;
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub u: QuantileLevel,
    pub optim: OptimConfig,
    pub floor_epsilon: f64,
    /// Name of the moment kernel in the built-in registry.
    pub kernel: String,
}

impl FitConfig {
    pub fn new(u: QuantileLevel, optim: OptimConfig) -> Self {
        Self {
            u,
            optim,
            floor_epsilon: DEFAULT_FLOOR_EPSILON,
            kernel: DEFAULT_KERNEL.to_string(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.optim.seed = seed;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub objective_value: f64,
    /// The survival floor was hit for at least one uncensored row.
    pub clipping_fired: bool,
    pub kernel: String,
    pub optim: OptimResult,
}

/// Minimizes the objective of an already-built context.
pub fn fit_context(ctx: &MomentContext, optim: &OptimConfig) -> Result<FitResult> {
    if optim.dim() != ctx.k() {
        return Err(Error::DimensionMismatch {
            what: "parameter box",
            expected: ctx.k(),
            got: optim.dim(),
        });
    }
    // dimensions were checked above, so the objective cannot fail
    let objective = |beta: &[f64]| ctx.objective(beta).unwrap_or(f64::INFINITY);
    let result = multi_start(&objective, optim)?;
    Ok(FitResult {
        beta_hat: result.best_x.clone(),
        objective_value: result.best_f,
        clipping_fired: ctx.clipping_fired(),
        kernel: ctx.kernel_name().to_string(),
        optim: result,
    })
}

/// Kaplan–Meier stage, moment context, then multi-start minimization.
pub fn fit(dataset: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    dataset.ensure_valid()?;
    let curve = KmCurve::fit_with_floor(dataset, cfg.floor_epsilon);
    let ctx = MomentContext::new(dataset, curve, cfg.u, &cfg.kernel)?;
    fit_context(&ctx, &cfg.optim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Full-sample estimate.
    pub estimate: Vec<f64>,
    /// One row per replicate.
    pub replicates: Vec<Vec<f64>>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub level: f64,
    pub b: usize,
    /// Resamples discarded because they had no uncensored rows.
    pub redraws: usize,
    pub n: usize,
}

impl BootstrapResult {
    /// `sqrt(n) * (beta_b - beta_hat)` per replicate.
    pub fn centered(&self) -> Vec<Vec<f64>> {
        let root_n = (self.n as f64).sqrt();
        self.replicates
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&self.estimate)
                    .map(|(b, e)| root_n * (b - e))
                    .collect()
            })
            .collect()
    }
}

/// Draws row indices with replacement until the resample has an event.
/// Returns the indices and the number of rejected draws.
pub(crate) fn resample_indices<R: Rng>(
    dataset: &Dataset,
    rng: &mut R,
    replicate: usize,
) -> Result<(Vec<usize>, usize)> {
    let n = dataset.len();
    let obs = dataset.observations();
    let mut redraws = 0;
    loop {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        if idx.iter().any(|&i| obs[i].delta) {
            return Ok((idx, redraws));
        }
        redraws += 1;
        if redraws > MAX_CONSECUTIVE_REDRAWS {
            return Err(Error::ResampleExhausted { replicate, redraws });
        }
    }
}

/// Nonparametric bootstrap: each replicate resamples rows with replacement,
/// re-estimates the censoring curve on the resample and refits with the same
/// multi-start settings. Replicates run in parallel on per-replicate streams.
pub fn bootstrap(
    dataset: &Dataset,
    cfg: &FitConfig,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    if b < 2 {
        return Err(Error::InvalidConfig(
            "bootstrap needs at least 2 replicates".into(),
        ));
    }
    check_level(level)?;
    let estimate = fit(dataset, cfg)?.beta_hat;
    let draws = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, tag::RESAMPLE, r as u64);
            let (idx, redraws) = resample_indices(dataset, &mut rng, r)?;
            let beta = fit(&dataset.select(&idx), cfg)?.beta_hat;
            Ok((beta, redraws))
        })
        .collect::<Result<Vec<_>>>()?;
    let redraws = draws.iter().map(|d| d.1).sum();
    if redraws > 0 {
        log::warn!("{redraws} bootstrap resamples without uncensored rows were redrawn");
    }
    let replicates: Vec<Vec<f64>> = draws.into_iter().map(|d| d.0).collect();
    let (ci_lower, ci_upper) = percentile_ci(&replicates, level)?;
    Ok(BootstrapResult {
        estimate,
        replicates,
        ci_lower,
        ci_upper,
        level,
        b,
        redraws,
        n: dataset.len(),
    })
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "confidence level {level} is not in (0, 1)"
        )))
    }
}

/// Linear-interpolation sample quantile (type 7) of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Type-7 quantile of an unsorted sample.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

/// Per-column percentile interval at `(1-level)/2` and `1-(1-level)/2`.
pub fn percentile_ci(replicates: &[Vec<f64>], level: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_level(level)?;
    if replicates.len() < 2 {
        return Err(Error::InvalidConfig(
            "percentile intervals need at least 2 replicates".into(),
        ));
    }
    let k = replicates[0].len();
    if let Some(bad) = replicates.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            what: "replicate row",
            expected: k,
            got: bad.len(),
        });
    }
    let alpha = 1.0 - level;
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    for c in 0..k {
        let mut col: Vec<f64> = replicates.iter().map(|r| r[c]).collect();
        col.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&col, alpha / 2.0));
        upper.push(quantile_sorted(&col, 1.0 - alpha / 2.0));
    }
    Ok((lower, upper))
}
