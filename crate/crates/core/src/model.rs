//! Observational data model: follow-up time, event flag, regressors and instruments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subject: `y = min(T, C)`, `delta = (T <= C)`, regressors `z`, instruments `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub delta: bool,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl Observation {
    pub fn new(y: f64, delta: bool, z: Vec<f64>, w: Vec<f64>) -> Self {
        Self { y, delta, z, w }
    }
}

/// An i.i.d. sample in ingestion order.
///
/// Construction never fails; [`Dataset::validate`] reports the violations and
/// downstream estimators call [`Dataset::ensure_valid`] before doing any work.
/// Dimensions are taken from the first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<Observation>,
    k: usize,
    l: usize,
}

/// A single broken invariant, with the offending row where applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NonPositiveDuration {
        row: usize,
    },
    NonFinite {
        row: usize,
        field: &'static str,
    },
    RegressorLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    InstrumentLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    NoUncensored,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty dataset"),
            Violation::NonPositiveDuration { row } => {
                write!(f, "nonpositive duration at row {row}")
            }
            Violation::NonFinite { row, field } => {
                write!(f, "non-finite {field} at row {row}")
            }
            Violation::RegressorLength { row, expected, got } => write!(
                f,
                "regressor length {got} at row {row} (expected {expected})"
            ),
            Violation::InstrumentLength { row, expected, got } => write!(
                f,
                "instrument length {got} at row {row} (expected {expected})"
            ),
            Violation::NoUncensored => write!(f, "no uncensored observations"),
        }
    }
}

/// Result of [`Dataset::validate`]; empty means the dataset is usable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }

    /// True if any message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.to_string().contains(needle))
    }
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Self {
        let (k, l) = observations
            .first()
            .map(|o| (o.z.len(), o.w.len()))
            .unwrap_or((0, 0));
        Self { observations, k, l }
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Regressor dimension K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Instrument dimension L.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_uncensored(&self) -> usize {
        self.observations.iter().filter(|o| o.delta).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        1.0 - self.n_uncensored() as f64 / self.len() as f64
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.observations.is_empty() {
            violations.push(Violation::Empty);
            return ValidationReport { violations };
        }
        for (row, o) in self.observations.iter().enumerate() {
            if !o.y.is_finite() {
                violations.push(Violation::NonFinite {
                    row,
                    field: "duration",
                });
            } else if o.y <= 0.0 {
                violations.push(Violation::NonPositiveDuration { row });
            }
            if o.z.len() != self.k {
                violations.push(Violation::RegressorLength {
                    row,
                    expected: self.k,
                    got: o.z.len(),
                });
            }
            if o.w.len() != self.l {
                violations.push(Violation::InstrumentLength {
                    row,
                    expected: self.l,
                    got: o.w.len(),
                });
            }
            if o.z.iter().any(|v| !v.is_finite()) {
                violations.push(Violation::NonFinite {
                    row,
                    field: "regressor",
                });
            }
            if o.w.iter().any(|v| !v.is_finite()) {
                violations.push(Violation::NonFinite {
                    row,
                    field: "instrument",
                });
            }
        }
        if !self.observations.iter().any(|o| o.delta) {
            violations.push(Violation::NoUncensored);
        }
        ValidationReport { violations }
    }

    /// Fails with the first violation found.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        match report.violations.first() {
            None => Ok(()),
            Some(Violation::NoUncensored) => Err(Error::NoUncensored),
            Some(v) => Err(Error::InvalidData(v.to_string())),
        }
    }

    /// Rows picked by index, with repetition allowed.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            observations: rows.iter().map(|&i| self.observations[i].clone()).collect(),
            k: self.k,
            l: self.l,
        }
    }

    /// Copy of the dataset whose instruments are replaced by the regressors.
    pub fn with_instruments_from_regressors(&self) -> Dataset {
        Dataset {
            observations: self
                .observations
                .iter()
                .map(|o| Observation::new(o.y, o.delta, o.z.clone(), o.z.clone()))
                .collect(),
            k: self.k,
            l: self.k,
        }
    }
}

/// Quantile level strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(u: f64) -> Result<Self> {
        if u > 0.0 && u < 1.0 {
            Ok(Self(u))
        } else {
            Err(Error::InvalidConfig(format!(
                "quantile level {u} is not in (0, 1)"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QuantileLevel {
    type Error = Error;

    fn try_from(u: f64) -> Result<Self> {
        Self::new(u)
    }
}

impl From<QuantileLevel> for f64 {
    fn from(u: QuantileLevel) -> f64 {
        u.0
    }
}
