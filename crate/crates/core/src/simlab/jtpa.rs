//! Synthetic job-training-shaped data for smoke tests.
//!
//! SYNTHETIC: mimics the layout of a randomized training experiment with
//! noncompliance (binary assignment, binary participation, age, duration in
//! days, interview-driven censoring). It is not real data. Proportions of
//! assignment and participation follow the published sample counts
//! (524 of 802 assigned; 339 of 524 and 36 of 278 participating).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Dataset, Observation};
use crate::rng;

pub const P_ASSIGNED: f64 = 524.0 / 802.0;
pub const P_TREATED_IF_ASSIGNED: f64 = 339.0 / 524.0;
pub const P_TREATED_IF_CONTROL: f64 = 36.0 / 278.0;
/// Interview (censoring) times are uniform on this range of days.
pub const FOLLOW_UP_DAYS: (f64, f64) = (450.0, 750.0);

/// Structural coefficients `(intercept, treatment, age)` at quantile `u`.
pub fn jtpa_like_beta(u: f64) -> [f64; 3] {
    [2.5 + 6.5 * u, -0.4, -0.01]
}

/// Flat record with named columns, as it would appear in a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JtpaLikeRow {
    pub days: f64,
    pub employed: u8,
    pub treatment: u8,
    pub assignment: u8,
    pub age: f64,
}

pub fn jtpa_like_rows(n: usize, seed: u64) -> Vec<JtpaLikeRow> {
    let mut rng = rng::from_seed(seed);
    (0..n)
        .map(|_| {
            let assigned = rng.random::<f64>() < P_ASSIGNED;
            let u: f64 = rng.random();
            // participation propensity shares U half of the time: endogenous
            let v = if rng.random::<bool>() {
                1.0 - u
            } else {
                rng.random()
            };
            let p = if assigned {
                P_TREATED_IF_ASSIGNED
            } else {
                P_TREATED_IF_CONTROL
            };
            let treated = v < p;
            let age = rng.random_range(22..46) as f64;
            let b = jtpa_like_beta(u);
            let t = (b[0] + b[1] * f64::from(u8::from(treated)) + b[2] * age).exp();
            let c = rng.random_range(FOLLOW_UP_DAYS.0..FOLLOW_UP_DAYS.1);
            JtpaLikeRow {
                days: t.min(c),
                employed: u8::from(t <= c),
                treatment: u8::from(treated),
                assignment: u8::from(assigned),
                age,
            }
        })
        .collect()
}

/// `Z = (1, treatment, age)`, `W = (1, assignment, age)`.
pub fn jtpa_like(n: usize, seed: u64) -> Dataset {
    Dataset::new(
        jtpa_like_rows(n, seed)
            .into_iter()
            .map(|r| {
                Observation::new(
                    r.days,
                    r.employed == 1,
                    vec![1.0, f64::from(r.treatment), r.age],
                    vec![1.0, f64::from(r.assignment), r.age],
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_censoring() {
        let d = jtpa_like(20_000, 3);
        assert!(d.validate().is_valid());
        assert_eq!((d.k(), d.l()), (3, 3));
        let cens = d.censored_fraction();
        assert!((0.27..0.37).contains(&cens), "{cens}");
        let (mut assigned, mut treated_a, mut control, mut treated_c) = (0.0, 0.0, 0.0, 0.0);
        for o in d.observations() {
            if o.w[1] == 1.0 {
                assigned += 1.0;
                treated_a += o.z[1];
            } else {
                control += 1.0;
                treated_c += o.z[1];
            }
        }
        assert!((treated_a / assigned - P_TREATED_IF_ASSIGNED).abs() < 0.02);
        assert!((treated_c / control - P_TREATED_IF_CONTROL).abs() < 0.02);
    }
}
