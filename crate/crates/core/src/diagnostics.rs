//! Data-driven checks of identification and feasibility conditions.
//!
//! None of these block estimation; they are reported next to a fit.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::FitResult;
use crate::km::KmCurve;
use crate::model::{Dataset, QuantileLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Largest censored follow-up time; `+inf` without censoring.
    pub c_bar_hat: f64,
    pub n_violations: usize,
    pub violating_rows: Vec<usize>,
    pub pass: bool,
}

/// Flags rows whose fitted quantile `exp(Z_i' beta)` exceeds the largest
/// censored time. The comparison is done on the log scale.
pub fn support_check(fit: &FitResult, dataset: &Dataset) -> Result<FeasibilityReport> {
    let beta = &fit.beta_hat;
    if beta.len() != dataset.k() {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: dataset.k(),
            got: beta.len(),
        });
    }
    let c_bar_hat = dataset
        .observations()
        .iter()
        .filter(|o| !o.delta)
        .map(|o| o.y)
        .fold(f64::NEG_INFINITY, f64::max);
    if c_bar_hat == f64::NEG_INFINITY {
        return Ok(FeasibilityReport {
            c_bar_hat: f64::INFINITY,
            n_violations: 0,
            violating_rows: Vec::new(),
            pass: true,
        });
    }
    let log_c = c_bar_hat.ln();
    let violating_rows: Vec<usize> = dataset
        .observations()
        .iter()
        .enumerate()
        .filter(|(_, o)| o.z.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() > log_c)
        .map(|(i, _)| i)
        .collect();
    Ok(FeasibilityReport {
        c_bar_hat,
        n_violations: violating_rows.len(),
        pass: violating_rows.is_empty(),
        violating_rows,
    })
}

fn binary_column(
    dataset: &Dataset,
    column: usize,
    pick: impl Fn(&crate::model::Observation) -> Option<f64>,
) -> Result<Vec<bool>> {
    dataset
        .observations()
        .iter()
        .enumerate()
        .map(|(row, o)| match pick(o) {
            Some(0.0) => Ok(false),
            Some(1.0) => Ok(true),
            Some(_) => Err(Error::NonBinaryColumn { column, row }),
            None => Err(Error::InvalidData(format!(
                "column {column} out of range at row {row}"
            ))),
        })
        .collect()
}

fn treatment_and_instrument(
    dataset: &Dataset,
    treat_col: usize,
    instr_col: usize,
) -> Result<(Vec<bool>, Vec<bool>)> {
    let z = binary_column(dataset, treat_col, |o| o.z.get(treat_col).copied())?;
    let w = binary_column(dataset, instr_col, |o| o.w.get(instr_col).copied())?;
    Ok((z, w))
}

/// First-stage strength `P(Z=1 | W=1) - P(Z=1 | W=0)` for a binary treatment
/// (regressor column `treat_col`) and instrument (column `instr_col`).
pub fn relevance_check(dataset: &Dataset, treat_col: usize, instr_col: usize) -> Result<f64> {
    let (z, w) = treatment_and_instrument(dataset, treat_col, instr_col)?;
    let mut counts = [[0usize; 2]; 2]; // [w][z]
    for (&zi, &wi) in z.iter().zip(&w) {
        counts[usize::from(wi)][usize::from(zi)] += 1;
    }
    let share = |wv: usize| -> Result<f64> {
        let total = counts[wv][0] + counts[wv][1];
        if total == 0 {
            return Err(Error::InvalidData(format!(
                "no rows with instrument = {wv}"
            )));
        }
        Ok(counts[wv][1] as f64 / total as f64)
    };
    Ok(share(1)? - share(0)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOptions {
    pub treat_col: usize,
    pub instr_col: usize,
    /// Grid center `(t0, t1)`: log-quantile for untreated and treated.
    pub center: (f64, f64),
    pub radius: f64,
    pub steps: usize,
    /// Half-width of the band `[u - nu, u + nu]` for the region check.
    pub nu: f64,
    /// Density floor for the region check.
    pub f_floor: f64,
    /// `|det| / (|a00 a11| + |a10 a01|)` below this counts as singular.
    pub min_rel_det: f64,
    /// Cells with `P(Z=z | W=w)` at or below this are skipped.
    pub skip_prob: f64,
}

impl RankOptions {
    pub fn new(treat_col: usize, instr_col: usize, center: (f64, f64)) -> Self {
        Self {
            treat_col,
            instr_col,
            center,
            radius: 0.25,
            steps: 11,
            nu: 0.05,
            f_floor: 0.0,
            min_rel_det: 0.1,
            skip_prob: 0.01,
        }
    }
}

/// Grid center implied by fitted coefficients: the linear index with the
/// treatment set to 0 and to 1, other regressors at their sample means.
pub fn center_from_fit(fit: &FitResult, dataset: &Dataset, treat_col: usize) -> (f64, f64) {
    let n = dataset.len().max(1) as f64;
    let mut base = 0.0;
    for (c, b) in fit.beta_hat.iter().enumerate() {
        if c == treat_col {
            continue;
        }
        let mean = dataset.observations().iter().map(|o| o.z[c]).sum::<f64>() / n;
        base += b * mean;
    }
    (base, base + fit.beta_hat[treat_col])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub z: u8,
    pub w: u8,
    /// `P(Z=z | W=w)`.
    pub prob: f64,
    pub n_events: usize,
    pub bandwidth: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t0: f64,
    pub t1: f64,
    pub det: f64,
    pub rel_det: f64,
    /// Whether the point passes the band and density-floor conditions.
    pub in_region: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub grid: Vec<GridPoint>,
    pub min_abs_det: f64,
    pub mlr_direction_consistent: bool,
    /// Silverman bandwidth on log time, indexed `[z][w]`.
    pub bandwidths: [[f64; 2]; 2],
    pub cells: Vec<CellSummary>,
    pub warnings: Vec<String>,
}

struct Cell {
    prob: f64,
    /// (log y, weight) of uncensored rows.
    events: Vec<(f64, f64)>,
    bandwidth: f64,
    n_w: f64,
    skipped: bool,
    usable: bool,
}

impl Cell {
    /// `f_{log T, Z | W}(t, z | w)`, i.e. the Jacobian entry.
    fn entry(&self, t: f64) -> f64 {
        if !self.usable {
            return 0.0;
        }
        let h = self.bandwidth;
        let norm = 1.0 / ((2.0 * PI).sqrt() * h * self.n_w);
        self.events
            .iter()
            .map(|&(x, wt)| wt * (-0.5 * ((t - x) / h).powi(2)).exp())
            .sum::<f64>()
            * norm
    }
}

/// Weighted Silverman rule: `0.9 min(sd, IQR/1.34) n_eff^(-1/5)`.
pub fn silverman_bandwidth(points: &[(f64, f64)]) -> f64 {
    let total: f64 = points.iter().map(|p| p.1).sum();
    if points.len() < 2 || total <= 0.0 {
        return 0.0;
    }
    let mean = points.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
    let var = points
        .iter()
        .map(|p| p.1 * (p.0 - mean).powi(2))
        .sum::<f64>()
        / total;
    let sd = var.sqrt();
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let wq = |p: f64| {
        let target = p * total;
        let mut acc = 0.0;
        for &(x, w) in &sorted {
            acc += w;
            if acc >= target {
                return x;
            }
        }
        sorted[sorted.len() - 1].0
    };
    let iqr = wq(0.75) - wq(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let n_eff = total * total / points.iter().map(|p| p.1 * p.1).sum::<f64>();
    0.9 * spread * n_eff.powf(-0.2)
}

/// Estimates the 2x2 Jacobian of the binary-treatment moment map on a grid
/// of `(t0, t1)` values, with IPCW-weighted Gaussian kernel densities of log
/// time within each treatment/instrument cell.
pub fn rank_condition_check(
    dataset: &Dataset,
    u: QuantileLevel,
    opts: &RankOptions,
) -> Result<RankReport> {
    dataset.ensure_valid()?;
    let (z, w) = treatment_and_instrument(dataset, opts.treat_col, opts.instr_col)?;
    let curve = KmCurve::fit(dataset);
    let obs = dataset.observations();
    let weight = |i: usize| {
        if obs[i].delta {
            1.0 / curve.eval(obs[i].y)
        } else {
            0.0
        }
    };

    let mut warnings = Vec::new();
    let mut n_w = [0usize; 2];
    let mut n_zw = [[0usize; 2]; 2];
    for (&zi, &wi) in z.iter().zip(&w) {
        n_w[usize::from(wi)] += 1;
        n_zw[usize::from(zi)][usize::from(wi)] += 1;
    }

    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(2);
    for zv in 0..2 {
        let mut row = Vec::with_capacity(2);
        for wv in 0..2 {
            let prob = if n_w[wv] == 0 {
                0.0
            } else {
                n_zw[zv][wv] as f64 / n_w[wv] as f64
            };
            if n_w[wv] == 0 {
                warnings.push(format!("no rows with instrument = {wv}"));
            }
            let events: Vec<(f64, f64)> = (0..obs.len())
                .filter(|&i| obs[i].delta && usize::from(z[i]) == zv && usize::from(w[i]) == wv)
                .map(|i| (obs[i].y.ln(), weight(i)))
                .collect();
            let skipped = prob <= opts.skip_prob;
            let bandwidth = silverman_bandwidth(&events);
            let mut usable = !skipped;
            if !skipped && (events.is_empty() || bandwidth <= 0.0) {
                warnings.push(format!(
                    "cell (z={zv}, w={wv}) has P(Z=z|W=w) = {prob:.3} but {} usable events; density set to 0",
                    events.len()
                ));
                usable = false;
            }
            row.push(Cell {
                prob,
                events,
                bandwidth,
                n_w: n_w[wv].max(1) as f64,
                skipped,
                usable,
            });
        }
        cells.push(row);
    }

    let axis = |c: f64| -> Vec<f64> {
        if opts.steps <= 1 {
            return vec![c];
        }
        (0..opts.steps)
            .map(|s| c - opts.radius + 2.0 * opts.radius * s as f64 / (opts.steps - 1) as f64)
            .collect()
    };
    let points: Vec<(f64, f64)> = axis(opts.center.0)
        .into_iter()
        .flat_map(|t0| axis(opts.center.1).into_iter().map(move |t1| (t0, t1)))
        .collect();

    let uv = u.value();
    let grid: Vec<GridPoint> = points
        .par_iter()
        .map(|&(t0, t1)| {
            // rows: instrument value; columns: treatment value
            let a = |zv: usize, wv: usize| cells[zv][wv].entry(if zv == 0 { t0 } else { t1 });
            let (a00, a10, a01, a11) = (a(0, 0), a(1, 0), a(0, 1), a(1, 1));
            let det = a00 * a11 - a10 * a01;
            let scale = (a00 * a11).abs() + (a10 * a01).abs();
            let rel_det = if scale > 0.0 { det / scale } else { 0.0 };

            let band_ok = (0..2).all(|wv| {
                if n_w[wv] == 0 {
                    return false;
                }
                let mass: f64 = (0..obs.len())
                    .filter(|&i| usize::from(w[i]) == wv)
                    .filter(|&i| obs[i].y.ln() <= if z[i] { t1 } else { t0 })
                    .map(weight)
                    .sum();
                let p = mass / n_w[wv] as f64;
                (p - uv).abs() <= opts.nu
            });
            let density_ok = (0..2).all(|zv| {
                (0..2).all(|wv| {
                    let cell = &cells[zv][wv];
                    if cell.skipped {
                        return true;
                    }
                    let t = if zv == 0 { t0 } else { t1 };
                    let dens = a(zv, wv) / (cell.prob * t.exp());
                    dens > opts.f_floor
                })
            });
            GridPoint {
                t0,
                t1,
                det,
                rel_det,
                in_region: band_ok && density_ok,
            }
        })
        .collect();

    let min_abs_det = grid
        .iter()
        .map(|g| g.det.abs())
        .fold(f64::INFINITY, f64::min);
    let positive = grid.iter().all(|g| g.rel_det >= opts.min_rel_det);
    let negative = grid.iter().all(|g| g.rel_det <= -opts.min_rel_det);

    let mut bandwidths = [[0.0; 2]; 2];
    let mut summaries = Vec::new();
    for zv in 0..2 {
        for wv in 0..2 {
            let cell = &cells[zv][wv];
            bandwidths[zv][wv] = cell.bandwidth;
            summaries.push(CellSummary {
                z: zv as u8,
                w: wv as u8,
                prob: cell.prob,
                n_events: cell.events.len(),
                bandwidth: cell.bandwidth,
                skipped: cell.skipped,
            });
        }
    }
    for msg in &warnings {
        log::warn!("{msg}");
    }
    Ok(RankReport {
        grid,
        min_abs_det,
        mlr_direction_consistent: positive || negative,
        bandwidths,
        cells: summaries,
        warnings,
    })
}
