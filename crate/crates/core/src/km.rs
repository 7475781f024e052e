//! Product-limit estimate of the censoring survival function `G(s) = P(C >= s)`.
//!
//! The counting process jumps at censored rows (`delta == false`); the risk
//! set at `s` holds every row with `y >= s` whatever its event flag. Values
//! are right-continuous: the jump at exactly `t` is part of `G(t)`.

use serde::{Deserialize, Serialize};

use crate::model::Dataset;

pub const DEFAULT_FLOOR_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    jump_times: Vec<f64>,
    survival_values: Vec<f64>,
    floor_epsilon: f64,
}

impl KmCurve {
    /// The curve `G == 1`.
    pub fn constant(floor_epsilon: f64) -> Self {
        Self {
            jump_times: Vec::new(),
            survival_values: Vec::new(),
            floor_epsilon,
        }
    }

    pub fn fit(dataset: &Dataset) -> Self {
        Self::fit_with_floor(dataset, DEFAULT_FLOOR_EPSILON)
    }

    pub fn fit_with_floor(dataset: &Dataset, floor_epsilon: f64) -> Self {
        let mut rows: Vec<(f64, bool)> = dataset
            .observations()
            .iter()
            .map(|o| (o.y, o.delta))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));

        let n = rows.len();
        let mut jump_times = Vec::new();
        let mut survival_values = Vec::new();
        let mut survival = 1.0;
        let mut start = 0;
        while start < n {
            let time = rows[start].0;
            let mut end = start;
            let mut censored = 0usize;
            while end < n && rows[end].0 == time {
                censored += usize::from(!rows[end].1);
                end += 1;
            }
            if censored > 0 {
                let at_risk = n - start;
                survival *= (at_risk - censored) as f64 / at_risk as f64;
                jump_times.push(time);
                survival_values.push(survival);
            }
            start = end;
        }
        Self {
            jump_times,
            survival_values,
            floor_epsilon,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn survival_values(&self) -> &[f64] {
        &self.survival_values
    }

    pub fn floor_epsilon(&self) -> f64 {
        self.floor_epsilon
    }

    /// Unclipped `G(t)`, including the jump at `t`.
    pub fn raw(&self, t: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&s| s <= t);
        if idx == 0 {
            1.0
        } else {
            self.survival_values[idx - 1]
        }
    }

    /// `G(t)` clipped below at the floor, plus whether the clip fired.
    pub fn eval_flagged(&self, t: f64) -> (f64, bool) {
        let g = self.raw(t);
        if g < self.floor_epsilon {
            (self.floor_epsilon, true)
        } else {
            (g, false)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_flagged(t).0
    }
}
