//! Data-generating designs for the simulation study.
//!
//! All designs share `Z = (1, Z2, Z3)`, `W = (1, W2, Z3)`,
//! `T = exp(U (1 + Z2 + Z3))` (that is `beta0(U) = (U, U, U)`) and
//! exponential censoring `C ~ Exp(lambda)` with mean `1 / lambda`.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Exp, Exp1, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Observation, QuantileLevel};
use crate::registry::Registry;
use crate::rng::{self, StreamRng};

/// One draw of the design-specific variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariates {
    pub u: f64,
    pub w2: f64,
    pub z2: f64,
    pub z3: f64,
}

/// A design: how `(U, W2, Z2, Z3)` are drawn.
pub trait Design: Send + Sync {
    fn description(&self) -> &'static str;

    fn draw(&self, rng: &mut StreamRng) -> Covariates;
}

pub type DesignRegistry = Registry<dyn Design>;

fn step(w2: f64, u: f64) -> f64 {
    if w2 + 0.5 * u - 1.0 > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `W2 ~ Exp(1)`, `Z2 = 1{W2 + 0.5U - 1 > 0}`, `Z3 ~ U(0,1)`.
pub struct ExponentialInstrument;

impl Design for ExponentialInstrument {
    fn description(&self) -> &'static str {
        "W2 ~ Exp(1), Z2 = 1{W2 + 0.5U - 1 > 0}, Z3 ~ U(0,1)"
    }

    fn draw(&self, rng: &mut StreamRng) -> Covariates {
        let u: f64 = rng.random();
        let w2: f64 = Exp1.sample(rng);
        let z3: f64 = rng.random();
        Covariates {
            u,
            w2,
            z2: step(w2, u),
            z3,
        }
    }
}

/// `W2 ~ LogNormal(0,1)`, `Z2 = W2 + 0.5U + 0.2 V` with `V ~ U(0,1)`, `Z3 ~ Exp(1)`.
pub struct LogNormalInstrument;

impl Design for LogNormalInstrument {
    fn description(&self) -> &'static str {
        "W2 ~ LogNormal(0,1), Z2 = W2 + 0.5U + 0.2 U(0,1), Z3 ~ Exp(1)"
    }

    fn draw(&self, rng: &mut StreamRng) -> Covariates {
        let u: f64 = rng.random();
        let w2 = LogNormal::new(0.0, 1.0)
            .expect("valid lognormal")
            .sample(rng);
        let v: f64 = rng.random();
        let z3: f64 = Exp1.sample(rng);
        Covariates {
            u,
            w2,
            z2: w2 + 0.5 * u + 0.2 * v,
            z3,
        }
    }
}

/// `W2 ~ Bernoulli(0.5)`, `Z2 = 1{W2 + 0.5U - 1 > 0}`, `Z3 ~ U(0,1)`.
///
/// Since `0 < 0.5U < 1`, this makes `Z2 == W2` on every row.
pub struct BinaryInstrument;

impl Design for BinaryInstrument {
    fn description(&self) -> &'static str {
        "W2 ~ Bernoulli(0.5), Z2 = 1{W2 + 0.5U - 1 > 0}, Z3 ~ U(0,1)"
    }

    fn draw(&self, rng: &mut StreamRng) -> Covariates {
        let u: f64 = rng.random();
        let w2 = if Bernoulli::new(0.5).expect("valid p").sample(rng) {
            1.0
        } else {
            0.0
        };
        let z3: f64 = rng.random();
        Covariates {
            u,
            w2,
            z2: step(w2, u),
            z3,
        }
    }
}

impl DesignRegistry {
    pub fn with_default_designs() -> Self {
        let mut reg = Registry::new("simulation design");
        reg.register("1", Box::new(ExponentialInstrument) as Box<dyn Design>)
            .register("2", Box::new(LogNormalInstrument))
            .register("3", Box::new(BinaryInstrument));
        reg
    }
}

pub fn design_registry() -> &'static DesignRegistry {
    static REGISTRY: OnceLock<DesignRegistry> = OnceLock::new();
    REGISTRY.get_or_init(DesignRegistry::with_default_designs)
}

/// Censoring rates the published lambda values are meant to produce.
pub const CALIBRATED_LAMBDAS: [(u8, f64, f64); 6] = [
    (1, 0.0068, 0.20),
    (1, 0.176, 0.40),
    (2, 0.0173, 0.20),
    (2, 0.065, 0.40),
    (3, 0.07, 0.20),
    (3, 0.175, 0.40),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub design_id: u8,
    /// Exponential censoring rate.
    pub lambda: f64,
    pub n: usize,
    pub u: QuantileLevel,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        design_registry().get(&self.design_id.to_string())?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "censoring rate must be positive, got {}",
                self.lambda
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample size must be positive".into()));
        }
        Ok(())
    }

    /// `beta0(u) = (u, u, u)`.
    pub fn true_beta(&self) -> Vec<f64> {
        vec![self.u.value(); 3]
    }
}

/// Unobserved quantities behind a generated row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latent {
    pub u: f64,
    pub t: f64,
    pub c: f64,
}

fn draw_row(
    design: &dyn Design,
    censoring: &Exp<f64>,
    rng: &mut StreamRng,
) -> (Observation, Latent) {
    let cov = design.draw(rng);
    let t = (cov.u * (1.0 + cov.z2 + cov.z3)).exp();
    let c = censoring.sample(rng);
    let delta = t <= c;
    let obs = Observation::new(
        if delta { t } else { c },
        delta,
        vec![1.0, cov.z2, cov.z3],
        vec![1.0, cov.w2, cov.z3],
    );
    (obs, Latent { u: cov.u, t, c })
}

/// Generated sample together with its latent draws.
pub fn gen_design_with_latents(design: &SimDesign) -> Result<(Dataset, Vec<Latent>)> {
    design.validate()?;
    let generator = design_registry().get(&design.design_id.to_string())?;
    let censoring = Exp::new(design.lambda).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = rng::from_seed(design.seed);
    let (rows, latents) = (0..design.n)
        .map(|_| draw_row(generator, &censoring, &mut rng))
        .unzip();
    Ok((Dataset::new(rows), latents))
}

pub fn gen_design(design: &SimDesign) -> Result<Dataset> {
    gen_design_with_latents(design).map(|(d, _)| d)
}

pub const CENSORING_RATE_DRAWS: usize = 1_000_000;
const CENSORING_RATE_SEED: u64 = 0x00C0_FFEE;

/// Monte Carlo estimate of `P(delta = 0)` from `draws` rows.
pub fn censoring_rate_with(design_id: u8, lambda: f64, draws: usize, seed: u64) -> Result<f64> {
    let generator = design_registry().get(&design_id.to_string())?;
    let censoring = Exp::new(lambda).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if draws == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    let mut rng = rng::from_seed(seed);
    let censored = (0..draws)
        .filter(|_| !draw_row(generator, &censoring, &mut rng).0.delta)
        .count();
    Ok(censored as f64 / draws as f64)
}

/// Censoring probability of a design at rate `lambda`, from 10^6 draws.
pub fn censoring_rate(design_id: u8, lambda: f64) -> Result<f64> {
    censoring_rate_with(design_id, lambda, CENSORING_RATE_DRAWS, CENSORING_RATE_SEED)
}
