//! Box-constrained Nelder–Mead with seeded uniform multi-start.
//!
//! Points outside the box evaluate to `+inf`, so they are never accepted as
//! vertices and the best vertex value can only go down.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;
/// Initial simplex edge as a fraction of the box width along each axis.
const SIMPLEX_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    pub n_starts: usize,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Stop once `f_worst - f_best <= f_tol`.
    pub f_tol: f64,
    /// Stop once every vertex lies within `x_tol` (max-norm) of the best one.
    pub x_tol: f64,
    pub seed: u64,
}

impl OptimConfig {
    pub const DEFAULT_STARTS: usize = 100;
    pub const DEFAULT_MAX_ITERS: usize = 500;
    pub const DEFAULT_F_TOL: f64 = 1e-8;
    pub const DEFAULT_X_TOL: f64 = 1e-6;

    /// Default settings on the given box.
    pub fn new(box_lower: Vec<f64>, box_upper: Vec<f64>, seed: u64) -> Self {
        Self {
            box_lower,
            box_upper,
            n_starts: Self::DEFAULT_STARTS,
            max_iters: Self::DEFAULT_MAX_ITERS,
            f_tol: Self::DEFAULT_F_TOL,
            x_tol: Self::DEFAULT_X_TOL,
            seed,
        }
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64, seed: u64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim], seed)
    }

    pub fn dim(&self) -> usize {
        self.box_lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.box_lower.len() != self.box_upper.len() {
            return Err(Error::DimensionMismatch {
                what: "box upper bound",
                expected: self.box_lower.len(),
                got: self.box_upper.len(),
            });
        }
        if self.box_lower.is_empty() {
            return Err(Error::InvalidConfig("empty parameter box".into()));
        }
        for (k, (lo, hi)) in self.box_lower.iter().zip(&self.box_upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "box bounds for coordinate {k} must satisfy lower < upper (got {lo}, {hi})"
                )));
            }
        }
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig(
                "n_starts and max_iters must be positive".into(),
            ));
        }
        if !(self.f_tol >= 0.0 && self.x_tol >= 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.box_lower.iter().zip(&self.box_upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// The uniform starting point used by start number `index`.
    pub fn start_point(&self, index: usize) -> Vec<f64> {
        let mut rng = rng::stream(self.seed, tag::START, index as u64);
        self.box_lower
            .iter()
            .zip(&self.box_upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// Outcome of one local Nelder–Mead run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    /// A tolerance fired before the iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub best_start: usize,
    pub starts: Vec<LocalResult>,
}

struct Simplex<'a, F> {
    f: &'a F,
    cfg: &'a OptimConfig,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl<F> Simplex<'_, F>
where
    F: Fn(&[f64]) -> f64,
{
    fn eval(&self, x: &[f64]) -> f64 {
        if !self.cfg.contains(x) {
            return f64::INFINITY;
        }
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn spread(&self) -> f64 {
        let last = self.values.len() - 1;
        let s = self.values[last] - self.values[0];
        if s.is_nan() {
            f64::INFINITY
        } else {
            s
        }
    }

    fn diameter(&self) -> f64 {
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    fn replace_worst(&mut self, x: Vec<f64>, v: f64) {
        let last = self.points.len() - 1;
        self.points[last] = x;
        self.values[last] = v;
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t * (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Local Nelder–Mead minimization from `x0` on the configured box.
pub fn nelder_mead<F>(f: &F, x0: &[f64], cfg: &OptimConfig) -> Result<LocalResult>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    if !cfg.contains(x0) {
        return Err(Error::StartOutsideBox);
    }
    let dim = x0.len();
    let mut points = vec![x0.to_vec()];
    for k in 0..dim {
        let step = SIMPLEX_SCALE * (cfg.box_upper[k] - cfg.box_lower[k]);
        let mut p = x0.to_vec();
        p[k] = if x0[k] + step <= cfg.box_upper[k] {
            x0[k] + step
        } else {
            x0[k] - step
        };
        points.push(p);
    }
    let mut simplex = Simplex {
        f,
        cfg,
        points: Vec::new(),
        values: Vec::new(),
    };
    simplex.values = points.iter().map(|p| simplex.eval(p)).collect();
    simplex.points = points;
    simplex.sort();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        if simplex.spread() <= cfg.f_tol || simplex.diameter() <= cfg.x_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        iterations += 1;

        let worst = simplex.points[dim].clone();
        let f_best = simplex.values[0];
        let f_second = simplex.values[dim - 1];
        let f_worst = simplex.values[dim];
        let mut centroid = vec![0.0; dim];
        for p in &simplex.points[..dim] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / dim as f64;
            }
        }

        let reflected = affine(&centroid, &worst, -REFLECTION);
        let f_r = simplex.eval(&reflected);
        if f_r < f_best {
            let expanded = affine(&centroid, &worst, -EXPANSION);
            let f_e = simplex.eval(&expanded);
            if f_e < f_r {
                simplex.replace_worst(expanded, f_e);
            } else {
                simplex.replace_worst(reflected, f_r);
            }
        } else if f_r < f_second {
            simplex.replace_worst(reflected, f_r);
        } else {
            let shrink = if f_r < f_worst {
                let outside = affine(&centroid, &reflected, CONTRACTION);
                let f_c = simplex.eval(&outside);
                if f_c <= f_r {
                    simplex.replace_worst(outside, f_c);
                    false
                } else {
                    true
                }
            } else {
                let inside = affine(&centroid, &worst, CONTRACTION);
                let f_c = simplex.eval(&inside);
                if f_c < f_worst {
                    simplex.replace_worst(inside, f_c);
                    false
                } else {
                    true
                }
            };
            if shrink {
                let best = simplex.points[0].clone();
                for i in 1..=dim {
                    let p = affine(&best, &simplex.points[i], SHRINK);
                    simplex.values[i] = simplex.eval(&p);
                    simplex.points[i] = p;
                }
            }
        }
        simplex.sort();
    }

    Ok(LocalResult {
        x: simplex.points[0].clone(),
        f: simplex.values[0],
        iterations,
        converged,
    })
}

/// Runs Nelder–Mead from `cfg.n_starts` uniform draws on the box and keeps
/// the lowest local minimum (earliest start on ties). Starts run in parallel;
/// each start owns a seeded substream, so the result does not depend on the
/// number of workers.
pub fn multi_start<F>(f: &F, cfg: &OptimConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let starts = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| nelder_mead(f, &cfg.start_point(s), cfg))
        .collect::<Result<Vec<_>>>()?;
    let best_start = starts.iter().enumerate().fold(
        0,
        |best, (i, r)| if r.f < starts[best].f { i } else { best },
    );
    Ok(OptimResult {
        best_x: starts[best_start].x.clone(),
        best_f: starts[best_start].f,
        best_start,
        starts,
    })
}
