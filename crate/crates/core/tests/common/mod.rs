//! Independent oracles shared by the integration tests. Nothing here calls
//! into the estimator internals it is used to check.

#![allow(dead_code)]

use std::collections::HashMap;

use civqr_core::{Dataset, Observation};
use num_rational::Rational64;

/// `G(t) = prod_{s <= t} (1 - dN(s)/Y(s))` straight from the counting-process
/// definitions, scanning all rows for every candidate jump time. Factors are
/// formed as `(Y - dN) / Y` in ascending `s`.
pub fn km_brute_f64(rows: &[(f64, bool)], t: f64) -> f64 {
    let mut times: Vec<f64> = rows.iter().map(|r| r.0).filter(|&s| s <= t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut g = 1.0;
    for s in times {
        let n_le = |x: f64| rows.iter().filter(|r| r.0 <= x && !r.1).count();
        let n_lt = rows.iter().filter(|r| r.0 < s && !r.1).count();
        let dn = n_le(s) - n_lt;
        let at_risk = rows.iter().filter(|r| r.0 >= s).count();
        if dn > 0 {
            g *= (at_risk - dn) as f64 / at_risk as f64;
        }
    }
    g
}

/// Same product in exact rational arithmetic.
pub fn km_brute_rational(rows: &[(f64, bool)], t: f64) -> Rational64 {
    let mut times: Vec<f64> = rows.iter().map(|r| r.0).filter(|&s| s <= t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut g = Rational64::from_integer(1);
    for s in times {
        let dn = rows.iter().filter(|r| r.0 == s && !r.1).count() as i64;
        let at_risk = rows.iter().filter(|r| r.0 >= s).count() as i64;
        g *= Rational64::new(at_risk - dn, at_risk);
    }
    g
}

pub fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn rows_of(d: &Dataset) -> Vec<(f64, bool)> {
    d.observations().iter().map(|o| (o.y, o.delta)).collect()
}

pub fn dataset_of(rows: &[(f64, bool)]) -> Dataset {
    Dataset::new(
        rows.iter()
            .map(|&(y, d)| Observation::new(y, d, vec![1.0], vec![1.0]))
            .collect(),
    )
}

/// Every dataset with `n <= max_n`, every censoring pattern, and times drawn
/// from `{1, .., min(n, 3)}^n` plus the all-distinct layout.
pub fn all_small_datasets(max_n: usize) -> Vec<Vec<(f64, bool)>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let levels = n.min(3);
        let mut time_layouts: Vec<Vec<f64>> = Vec::new();
        let combos = levels.pow(n as u32);
        for mut code in 0..combos {
            let mut t = Vec::with_capacity(n);
            for _ in 0..n {
                t.push((code % levels + 1) as f64);
                code /= levels;
            }
            time_layouts.push(t);
        }
        time_layouts.push((1..=n).map(|i| i as f64 * 1.5).collect());
        for times in &time_layouts {
            for mask in 0..(1u32 << n) {
                out.push(
                    times
                        .iter()
                        .enumerate()
                        .map(|(i, &t)| (t, mask >> i & 1 == 1))
                        .collect(),
                );
            }
        }
    }
    out
}

pub fn probe_points(rows: &[(f64, bool)]) -> Vec<f64> {
    let mut p = vec![0.0, 0.5, 100.0];
    for &(t, _) in rows {
        p.extend([t, t - 0.25, t + 0.25]);
    }
    p
}

/// Plain objective: the defining double sum with caller-supplied weights.
pub struct PlainObjective {
    n: usize,
    u: f64,
    log_y: Vec<f64>,
    z: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// dominated[j][i] = W_i <= W_j componentwise
    dominated: Vec<Vec<bool>>,
}

impl PlainObjective {
    pub fn new(d: &Dataset, u: f64, weights: Vec<f64>) -> Self {
        let obs = d.observations();
        let dominated = obs
            .iter()
            .map(|oj| {
                obs.iter()
                    .map(|oi| oi.w.iter().zip(&oj.w).all(|(a, b)| a <= b))
                    .collect()
            })
            .collect();
        Self {
            n: obs.len(),
            u,
            log_y: obs.iter().map(|o| o.y.ln()).collect(),
            z: obs.iter().map(|o| o.z.clone()).collect(),
            weights,
            dominated,
        }
    }

    /// IPCW weights from the brute-force product-limit oracle.
    pub fn ipcw(d: &Dataset, u: f64) -> Self {
        let rows = rows_of(d);
        let w = rows
            .iter()
            .map(|&(y, delta)| {
                if delta {
                    1.0 / km_brute_f64(&rows, y)
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(d, u, w)
    }

    /// Every uncensored row weighted 1, no survival curve involved.
    pub fn unweighted(d: &Dataset, u: f64) -> Self {
        let w = d
            .observations()
            .iter()
            .map(|o| if o.delta { 1.0 } else { 0.0 })
            .collect();
        Self::new(d, u, w)
    }

    pub fn hits(&self, beta: &[f64]) -> Vec<bool> {
        (0..self.n)
            .map(|i| {
                let idx: f64 = self.z[i].iter().zip(beta).map(|(a, b)| a * b).sum();
                self.log_y[i] <= idx
            })
            .collect()
    }

    pub fn value_from_hits(&self, hits: &[bool]) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n {
            let mut a = 0.0;
            for i in 0..self.n {
                if self.dominated[j][i] {
                    a += if hits[i] { self.weights[i] } else { 0.0 } - self.u;
                }
            }
            a /= self.n as f64;
            total += a * a;
        }
        total / self.n as f64
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        self.value_from_hits(&self.hits(beta))
    }

    /// The objective with every contribution replaced by its absolute
    /// value; scales the rounding error of any summation order.
    pub fn abs_scale(&self, beta: &[f64]) -> f64 {
        let hits = self.hits(beta);
        let mut total = 0.0;
        for j in 0..self.n {
            let mut a = 0.0;
            for i in 0..self.n {
                if self.dominated[j][i] {
                    a += (if hits[i] { self.weights[i] } else { 0.0 } - self.u).abs();
                }
            }
            a /= self.n as f64;
            total += a * a;
        }
        total / self.n as f64
    }

    /// Minimum over the grid `lower + step * m` inside the box. The objective
    /// depends on `beta` only through the hit pattern, so patterns are memoised.
    pub fn grid_min(&self, lower: &[f64], upper: &[f64], step: f64) -> (f64, Vec<f64>) {
        let axes: Vec<Vec<f64>> = lower
            .iter()
            .zip(upper)
            .map(|(lo, hi)| {
                let m = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=m).map(|i| lo + step * i as f64).collect()
            })
            .collect();
        let mut best = (f64::INFINITY, Vec::new());
        let mut seen: HashMap<Vec<bool>, f64> = HashMap::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            let point: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
            let hits = self.hits(&point);
            let v = match seen.get(&hits) {
                Some(&v) => v,
                None => {
                    let v = self.value_from_hits(&hits);
                    seen.insert(hits, v);
                    v
                }
            };
            if v < best.0 {
                best = (v, point);
            }
            let mut c = 0;
            loop {
                if c == idx.len() {
                    return best;
                }
                idx[c] += 1;
                if idx[c] < axes[c].len() {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }
}

/// Noiseless exogenous sample: `T = exp(z' (u, u, u))` on the full cross of
/// an equispaced `u` grid (`n_u` points) and a `levels x levels` grid of
/// `(z2, z3)`, with `W = Z` and no censoring.
pub fn noiseless_grid_sample(n_u: usize, levels: usize) -> Dataset {
    let grid = |m: usize, j: usize| (j as f64 + 0.5) / m as f64;
    let mut rows = Vec::with_capacity(n_u * levels * levels);
    for a in 0..levels {
        for b in 0..levels {
            let z = vec![1.0, grid(levels, a), grid(levels, b)];
            for j in 0..n_u {
                let t = (grid(n_u, j) * z.iter().sum::<f64>()).exp();
                rows.push(Observation::new(t, true, z.clone(), z.clone()));
            }
        }
    }
    Dataset::new(rows)
}

pub mod strategies {
    use civqr_core::{Dataset, Observation, QuantileLevel};
    use proptest::prelude::*;

    pub const CASES: u32 = 1000;

    pub fn config() -> ProptestConfig {
        ProptestConfig::with_cases(CASES)
    }

    /// Small datasets with deliberately coarse values so ties are common.
    pub fn dataset(max_n: usize, k: usize, l: usize) -> impl Strategy<Value = Dataset> {
        let row = (
            1u8..=8,
            any::<bool>(),
            prop::collection::vec(0u8..4, k - 1),
            prop::collection::vec(0u8..4, l),
        )
            .prop_map(|(y, d, z, w)| {
                let mut zz = vec![1.0];
                zz.extend(z.iter().map(|&v| v as f64 * 0.5));
                Observation::new(
                    y as f64 * 0.75,
                    d,
                    zz,
                    w.iter().map(|&v| v as f64).collect(),
                )
            });
        prop::collection::vec(row, 1..=max_n)
            .prop_map(Dataset::new)
            .prop_filter("needs an uncensored row", |d| d.n_uncensored() > 0)
    }

    pub fn any_shape(max_n: usize) -> impl Strategy<Value = Dataset> {
        (1usize..=3, 1usize..=3).prop_flat_map(move |(k, l)| dataset(max_n, k, l))
    }

    pub fn beta_for(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, k)
    }

    pub fn level() -> impl Strategy<Value = QuantileLevel> {
        (0.01f64..0.99).prop_map(|u| QuantileLevel::new(u).unwrap())
    }
}
