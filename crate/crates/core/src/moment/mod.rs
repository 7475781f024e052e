//! Empirical IPCW moment operator and the minimum-distance objective.
//!
//! For a row `i` with weight `omega_i = delta_i / G(Y_i)`,
//!
//! ```text
//! A(beta, w) = (1/n) sum_i (omega_i 1{log Y_i <= Z_i' beta} - u) 1{W_i <= w}
//! Q(beta)    = (1/n) sum_j A(beta, W_j)^2
//! ```
//!
//! The event comparison is done on the log scale so extreme `beta` never
//! overflows `exp`.

pub mod kernel;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::km::KmCurve;
use crate::model::{Dataset, Observation, QuantileLevel};

pub use kernel::{
    kernel_registry, InstrumentPoints, KernelFactory, KernelRegistry, MomentKernel, DEFAULT_KERNEL,
};

/// Row order that depends only on row contents, so that every sum below is
/// accumulated in the same order for any permutation of the input.
fn canonical_order(dataset: &Dataset) -> Vec<usize> {
    let obs = dataset.observations();
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&obs[a], &obs[b]);
        x.y.total_cmp(&y.y)
            .then(x.delta.cmp(&y.delta))
            .then_with(|| cmp_slices(&x.z, &y.z))
            .then_with(|| cmp_slices(&x.w, &y.w))
    });
    order
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Precomputed per-dataset state shared by every objective call.
///
/// Rows are held in a canonical content-based order; per-row accessors such
/// as [`MomentContext::weights`] follow that order, not the input order.
pub struct MomentContext {
    n: usize,
    k: usize,
    u: QuantileLevel,
    log_y: Vec<f64>,
    /// Row-major regressors.
    z: Vec<f64>,
    instruments: InstrumentPoints,
    weights: Vec<f64>,
    curve: KmCurve,
    clipping_fired: bool,
    kernel: Box<dyn MomentKernel>,
}

impl std::fmt::Debug for MomentContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentContext")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("u", &self.u)
            .field("kernel", &self.kernel.name())
            .field("clipping_fired", &self.clipping_fired)
            .finish()
    }
}

impl MomentContext {
    /// Builds the context with IPCW weights from `curve` and the named kernel
    /// from the built-in registry.
    pub fn new(dataset: &Dataset, curve: KmCurve, u: QuantileLevel, kernel: &str) -> Result<Self> {
        let factory = kernel_registry().get(kernel)?;
        Self::with_factory(dataset, curve, u, factory)
    }

    pub fn with_factory(
        dataset: &Dataset,
        curve: KmCurve,
        u: QuantileLevel,
        factory: &dyn KernelFactory,
    ) -> Result<Self> {
        dataset.ensure_valid()?;
        let mut clipping_fired = false;
        let weights = dataset
            .observations()
            .iter()
            .map(|o| {
                if o.delta {
                    let (g, clipped) = curve.eval_flagged(o.y);
                    clipping_fired |= clipped;
                    1.0 / g
                } else {
                    0.0
                }
            })
            .collect();
        if clipping_fired {
            log::warn!(
                "censoring survival estimate clipped at {} for some uncensored rows",
                curve.floor_epsilon()
            );
        }
        Self::assemble(dataset, weights, curve, u, factory, clipping_fired)
    }

    /// Context with every uncensored weight fixed to 1, bypassing the
    /// survival curve entirely.
    pub fn unweighted(dataset: &Dataset, u: QuantileLevel, kernel: &str) -> Result<Self> {
        dataset.ensure_valid()?;
        let factory = kernel_registry().get(kernel)?;
        let weights = dataset
            .observations()
            .iter()
            .map(|o| if o.delta { 1.0 } else { 0.0 })
            .collect();
        Self::assemble(
            dataset,
            weights,
            KmCurve::constant(crate::km::DEFAULT_FLOOR_EPSILON),
            u,
            factory,
            false,
        )
    }

    fn assemble(
        dataset: &Dataset,
        weights: Vec<f64>,
        curve: KmCurve,
        u: QuantileLevel,
        factory: &dyn KernelFactory,
        clipping_fired: bool,
    ) -> Result<Self> {
        let all = dataset.observations();
        let order = canonical_order(dataset);
        let obs: Vec<&Observation> = order.iter().map(|&i| &all[i]).collect();
        let instruments = InstrumentPoints {
            n: obs.len(),
            l: dataset.l(),
            values: obs.iter().flat_map(|o| o.w.iter().copied()).collect(),
        };
        let kernel = factory.prepare(&instruments)?;
        Ok(Self {
            n: obs.len(),
            k: dataset.k(),
            u,
            log_y: obs.iter().map(|o| o.y.ln()).collect(),
            z: obs.iter().flat_map(|o| o.z.iter().copied()).collect(),
            instruments,
            weights: order.iter().map(|&i| weights[i]).collect(),
            curve,
            clipping_fired,
            kernel,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn u(&self) -> QuantileLevel {
        self.u
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn curve(&self) -> &KmCurve {
        &self.curve
    }

    pub fn clipping_fired(&self) -> bool {
        self.clipping_fired
    }

    pub fn kernel_name(&self) -> &'static str {
        self.kernel.name()
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: self.k,
                got: beta.len(),
            });
        }
        Ok(())
    }

    /// `1{Y_i <= exp(Z_i' beta)}` for row `i`.
    fn event_below(&self, i: usize, beta: &[f64]) -> bool {
        let zi = &self.z[i * self.k..(i + 1) * self.k];
        let index: f64 = zi.iter().zip(beta).map(|(a, b)| a * b).sum();
        self.log_y[i] <= index
    }

    /// Per-row contributions `omega_i 1{...} - u`.
    fn contributions(&self, beta: &[f64], out: &mut [f64]) {
        let u = self.u.value();
        for (i, slot) in out.iter_mut().enumerate() {
            let hit = if self.event_below(i, beta) { 1.0 } else { 0.0 };
            *slot = self.weights[i] * hit - u;
        }
    }

    /// The moment operator at an arbitrary evaluation point `w`.
    pub fn a_hat(&self, beta: &[f64], w: &[f64]) -> Result<f64> {
        self.check_beta(beta)?;
        if w.len() != self.instruments.l {
            return Err(Error::DimensionMismatch {
                what: "instrument point",
                expected: self.instruments.l,
                got: w.len(),
            });
        }
        let u = self.u.value();
        let mut acc = 0.0;
        for i in 0..self.n {
            let below = self.instruments.row(i).iter().zip(w).all(|(a, b)| a <= b);
            if below {
                let hit = if self.event_below(i, beta) { 1.0 } else { 0.0 };
                acc += self.weights[i] * hit - u;
            }
        }
        Ok(acc / self.n as f64)
    }

    /// The moment operator at every sample instrument point (canonical order).
    pub fn moments_at_sample(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        let mut contrib = vec![0.0; self.n];
        let mut sums = vec![0.0; self.n];
        self.contributions(beta, &mut contrib);
        self.kernel.dominance_sums(&contrib, &mut sums);
        let n = self.n as f64;
        Ok(sums.into_iter().map(|s| s / n).collect())
    }

    /// Minimum-distance objective; always `>= 0`.
    pub fn objective(&self, beta: &[f64]) -> Result<f64> {
        let moments = self.moments_at_sample(beta)?;
        Ok(moments.iter().map(|a| a * a).sum::<f64>() / self.n as f64)
    }
}
