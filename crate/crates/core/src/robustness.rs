//! How thresholding holds up when the seller learns the reserve from data,
//! and how a misperceived value law shifts the seller's virtual values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};
use crate::seller::erm_reserve;
use crate::strategy::{bid_distribution, make_thresholded, BidStrategy, ThresholdedParams};

/// Overbid floor as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Constant { epsilon: f64 },
    /// `scale * n^(-exponent)`
    Power { scale: f64, exponent: f64 },
}

impl EpsilonSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Self::Constant { epsilon } => epsilon,
            Self::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
        }
    }

    /// `n^(-1/3)`
    pub fn cube_root() -> Self {
        Self::Power { scale: 1.0, exponent: 1.0 / 3.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErmExperimentConfig {
    pub distribution: ValueDistribution,
    pub r: f64,
    pub epsilon: EpsilonSchedule,
    pub n: usize,
    pub delta: f64,
    pub replications: usize,
    pub seed: u64,
}

impl ErmExperimentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.n == 0 {
            return Err(Error::EmptySample);
        }
        if !(self.epsilon.at(self.n) > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmResult {
    pub replication: usize,
    pub n: usize,
    pub epsilon: f64,
    pub reserve_bid: f64,
    /// Reserve value implied by the ERM reserve.
    pub x_hat: f64,
    pub bound: f64,
    pub c_n: f64,
    pub x_max: f64,
    pub feasible: bool,
    pub violated: bool,
}

/// DKW deviation `sqrt(ln(2/delta) / 2) / sqrt(n)`.
pub fn dkw_width(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Smallest density on a 1024-point grid of `[lo, r]`.
pub fn min_density_below(d: &ValueDistribution, r: f64) -> f64 {
    let lo = d.support_lo();
    (0..1024)
        .map(|i| d.pdf(lo + (r - lo) * i as f64 / 1023.0))
        .fold(f64::INFINITY, f64::min)
}

/// One ERM reserve per replication, against a bidder thresholding at `r`
/// with overbid floor `epsilon_n`.
pub fn erm_experiment(cfg: &ErmExperimentConfig, threads: Option<usize>) -> Result<Vec<ErmResult>> {
    cfg.validate()?;
    let d = &cfg.distribution;
    let n = cfg.n;
    let epsilon = cfg.epsilon.at(n);
    // a floor above the threshold bid cannot be met; such a bidder stays truthful
    let params = ThresholdedParams { r: cfg.r, epsilon, gamma: BidStrategy::Truthful };
    let (strategy, buildable) = match make_thresholded(d, params) {
        Ok(s) => (s, true),
        Err(Error::InfeasibleEpsilon { .. }) => (BidStrategy::Truthful, false),
        Err(e) => return Err(e),
    };
    let bd = bid_distribution(d, &strategy);
    let c_n = dkw_width(n, cfg.delta);
    let gamma_f = min_density_below(d, cfg.r);
    let bound = 2.0 * cfg.r * c_n / (epsilon * gamma_f);
    let f_r = d.cdf(cfg.r);

    let one = |rep: usize| -> Result<ErmResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        let values: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let x_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bids: Vec<f64> = values.iter().map(|&x| strategy.bid(x)).collect();
        let reserve_bid = erm_reserve(&bids)?;
        let x_hat = bd.inverse(reserve_bid);
        Ok(ErmResult {
            replication: rep,
            n,
            epsilon,
            reserve_bid,
            x_hat,
            bound,
            c_n,
            x_max,
            feasible: buildable && epsilon > x_max * c_n / f_r,
            violated: x_hat >= bound,
        })
    };
    let run = || (0..cfg.replications).into_par_iter().map(one).collect::<Result<Vec<_>>>();
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run),
        None => run(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmSummary {
    pub replications: usize,
    pub violation_frequency: f64,
    /// Fraction of draws where the overbid floor fails its feasibility condition.
    pub infeasible_frequency: f64,
    pub median_x_hat: f64,
}

pub fn summarize(results: &[ErmResult]) -> ErmSummary {
    let k = results.len().max(1) as f64;
    let mut xs: Vec<f64> = results.iter().map(|r| r.x_hat).collect();
    xs.sort_by(f64::total_cmp);
    let median = match xs.len() {
        0 => f64::NAN,
        m if m % 2 == 1 => xs[m / 2],
        m => 0.5 * (xs[m / 2 - 1] + xs[m / 2]),
    };
    ErmSummary {
        replications: results.len(),
        violation_frequency: results.iter().filter(|r| r.violated).count() as f64 / k,
        infeasible_frequency: results.iter().filter(|r| !r.feasible).count() as f64 / k,
        median_x_hat: median,
    }
}

/// Shift of the seller's virtual value of the bid `beta(x)` when it believes
/// values follow `dg` while they follow `df`: `beta'(x) (1/lambda_G - 1/lambda_F)`.
pub fn perceived_virtual_value_gap(
    df: &ValueDistribution,
    dg: &ValueDistribution,
    s: &BidStrategy,
    x: f64,
) -> Result<f64> {
    let lf = df.hazard_rate(x)?;
    let lg = dg.hazard_rate(x)?;
    Ok(s.derivative(x) * (1.0 / lg - 1.0 / lf))
}
