//! Dominance-sum kernels.
//!
//! Every objective evaluation reduces to `out[j] = sum_i c[i] * 1{W_i <= W_j}`
//! with componentwise `<=`. The instrument points never change during a fit,
//! so each kernel preprocesses them once and then answers many queries with
//! different `c`. Kernels are interchangeable and are looked up by name.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Row-major instrument matrix (`n` rows of length `l`).
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentPoints {
    pub n: usize,
    pub l: usize,
    pub values: Vec<f64>,
}

impl InstrumentPoints {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.l..(i + 1) * self.l]
    }

    /// `W_i <= W_j` in every coordinate.
    pub fn dominated(&self, i: usize, j: usize) -> bool {
        self.row(i).iter().zip(self.row(j)).all(|(a, b)| a <= b)
    }

    /// Columns that take more than one value.
    pub fn varying_columns(&self) -> Vec<usize> {
        (0..self.l)
            .filter(|&c| {
                let first = self.values.get(c).copied();
                (0..self.n).any(|i| Some(self.values[i * self.l + c]) != first)
            })
            .collect()
    }
}

/// A kernel prepared for one fixed set of instrument points.
pub trait MomentKernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Writes `out[j] = sum_i contrib[i] * 1{W_i <= W_j}`.
    fn dominance_sums(&self, contrib: &[f64], out: &mut [f64]);
}

/// Builds a [`MomentKernel`] for a given instrument layout.
pub trait KernelFactory: Send + Sync {
    fn prepare(&self, points: &InstrumentPoints) -> Result<Box<dyn MomentKernel>>;

    fn description(&self) -> &'static str;
}

pub type KernelRegistry = Registry<dyn KernelFactory>;

pub const DEFAULT_KERNEL: &str = "auto";

impl KernelRegistry {
    pub fn with_default_kernels() -> Self {
        let mut reg = Registry::new("moment kernel");
        reg.register("naive", Box::new(NaiveFactory) as Box<dyn KernelFactory>)
            .register("dominance", Box::new(DominanceFactory))
            .register("sweep", Box::new(SweepFactory))
            .register("auto", Box::new(AutoFactory));
        reg
    }
}

/// Process-wide registry holding the built-in kernels.
pub fn kernel_registry() -> &'static KernelRegistry {
    static REGISTRY: OnceLock<KernelRegistry> = OnceLock::new();
    REGISTRY.get_or_init(KernelRegistry::with_default_kernels)
}

// ---------------------------------------------------------------------------
// naive: the defining double loop, O(n^2 L) per query.

pub struct NaiveFactory;

struct NaiveKernel {
    points: InstrumentPoints,
}

impl KernelFactory for NaiveFactory {
    fn prepare(&self, points: &InstrumentPoints) -> Result<Box<dyn MomentKernel>> {
        Ok(Box::new(NaiveKernel {
            points: points.clone(),
        }))
    }

    fn description(&self) -> &'static str {
        "direct double loop over rows and evaluation points"
    }
}

impl MomentKernel for NaiveKernel {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn dominance_sums(&self, contrib: &[f64], out: &mut [f64]) {
        let n = self.points.n;
        for (j, slot) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (i, &c) in contrib.iter().enumerate().take(n) {
                if self.points.dominated(i, j) {
                    acc += c;
                }
            }
            *slot = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// dominance: precomputed bitset per evaluation point, O(n^2 / 64) memory.
// Sums in ascending row order, so it reproduces `naive` bit for bit.

pub struct DominanceFactory;

struct DominanceKernel {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl KernelFactory for DominanceFactory {
    fn prepare(&self, points: &InstrumentPoints) -> Result<Box<dyn MomentKernel>> {
        let n = points.n;
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for j in 0..n {
            let row = &mut bits[j * words..(j + 1) * words];
            for i in 0..n {
                if points.dominated(i, j) {
                    row[i / 64] |= 1u64 << (i % 64);
                }
            }
        }
        Ok(Box::new(DominanceKernel { n, words, bits }))
    }

    fn description(&self) -> &'static str {
        "precomputed dominance bitsets, any instrument dimension"
    }
}

impl MomentKernel for DominanceKernel {
    fn name(&self) -> &'static str {
        "dominance"
    }

    fn dominance_sums(&self, contrib: &[f64], out: &mut [f64]) {
        for (j, slot) in out.iter_mut().enumerate().take(self.n) {
            let row = &self.bits[j * self.words..(j + 1) * self.words];
            let mut acc = 0.0;
            for (w, &word) in row.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    acc += contrib[w * 64 + b];
                    bits &= bits - 1;
                }
            }
            *slot = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// sweep: at most two varying instrument columns. Sort by the first, sweep
// tie groups, and keep a Fenwick tree over ranks of the second column.
// O(n log n) per query.

pub struct SweepFactory;

#[derive(Debug)]
struct SweepKernel {
    n: usize,
    /// Row indices sorted by the first varying column.
    order: Vec<usize>,
    /// Group boundaries in `order` (rows with equal first coordinate).
    groups: Vec<(usize, usize)>,
    /// 1-based rank of each row's second coordinate; all 1 when absent.
    rank: Vec<usize>,
    n_ranks: usize,
}

impl KernelFactory for SweepFactory {
    fn prepare(&self, points: &InstrumentPoints) -> Result<Box<dyn MomentKernel>> {
        let varying = points.varying_columns();
        if varying.len() > 2 {
            return Err(Error::KernelUnsupported {
                kernel: "sweep",
                reason: format!("{} varying instrument columns (max 2)", varying.len()),
            });
        }
        let n = points.n;
        let l = points.l;
        let col = |i: usize, c: Option<&usize>| c.map_or(0.0, |&c| points.values[i * l + c]);

        let first = varying.first();
        let second = varying.get(1);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col(a, first).total_cmp(&col(b, first)));

        let mut groups = Vec::new();
        let mut start = 0;
        while start < n {
            let key = col(order[start], first);
            let mut end = start + 1;
            while end < n && col(order[end], first) == key {
                end += 1;
            }
            groups.push((start, end));
            start = end;
        }

        let mut distinct: Vec<f64> = (0..n).map(|i| col(i, second)).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let rank = (0..n)
            .map(|i| distinct.partition_point(|&v| v < col(i, second)) + 1)
            .collect();

        Ok(Box::new(SweepKernel {
            n,
            order,
            groups,
            rank,
            n_ranks: distinct.len(),
        }))
    }

    fn description(&self) -> &'static str {
        "sorted sweep with a Fenwick tree, up to two varying instrument columns"
    }
}

impl MomentKernel for SweepKernel {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn dominance_sums(&self, contrib: &[f64], out: &mut [f64]) {
        let mut tree = vec![0.0; self.n_ranks + 1];
        for &(start, end) in &self.groups {
            for &i in &self.order[start..end] {
                let mut r = self.rank[i];
                while r <= self.n_ranks {
                    tree[r] += contrib[i];
                    r += r & r.wrapping_neg();
                }
            }
            for &j in &self.order[start..end] {
                let mut r = self.rank[j];
                let mut acc = 0.0;
                while r > 0 {
                    acc += tree[r];
                    r &= r - 1;
                }
                out[j] = acc;
            }
        }
        debug_assert_eq!(self.order.len(), self.n);
    }
}

// ---------------------------------------------------------------------------
// auto: sweep when the layout allows, otherwise dominance bitsets.

pub struct AutoFactory;

/// Above this many rows the dominance bitsets (n^2 bits) are not built.
const DOMINANCE_MAX_ROWS: usize = 20_000;

impl KernelFactory for AutoFactory {
    fn prepare(&self, points: &InstrumentPoints) -> Result<Box<dyn MomentKernel>> {
        if points.varying_columns().len() <= 2 {
            SweepFactory.prepare(points)
        } else if points.n <= DOMINANCE_MAX_ROWS {
            DominanceFactory.prepare(points)
        } else {
            NaiveFactory.prepare(points)
        }
    }

    fn description(&self) -> &'static str {
        "sweep if at most two instrument columns vary, else dominance"
    }
}
