//! Value distributions, virtual values, hazard rates, monopoly prices, and
//! the distribution of the highest competing bid.
//!
//! Unbounded laws (lognormal, exponential) are truncated at a high quantile
//! (default `1 - 1e-9`) and renormalized so that every integral runs over a
//! finite support. Empirical and tabulated laws are piecewise-linear CDFs
//! whose density is the slope of the interpolant.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quad;
use crate::roots;
use crate::strategy::BidDistribution;

pub const DEFAULT_TRUNCATION: f64 = 1.0 - 1e-9;
const MONOPOLY_GRID: usize = 4096;
const TIE_REL: f64 = 1e-10;

fn default_truncation() -> f64 {
    DEFAULT_TRUNCATION
}

/// JSON descriptor of a value distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
        #[serde(default = "default_truncation")]
        truncation_quantile: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default = "default_truncation")]
        truncation_quantile: f64,
    },
    /// Sorted (or unsorted) distinct samples.
    Empirical { samples: Vec<f64> },
    /// Grid of `(x, F(x))` pairs.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
enum Law {
    Uniform,
    Lognormal { mu: f64, sigma: f64, q: f64 },
    Exponential { rate: f64, q: f64 },
    PiecewiseLinear { xs: Arc<[f64]>, ps: Arc<[f64]> },
}

/// A continuous value law on a finite support `[lo, hi]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct ValueDistribution {
    spec: Arc<DistSpec>,
    law: Law,
    lo: f64,
    hi: f64,
    monopoly: OnceLock<f64>,
}

impl PartialEq for ValueDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl From<ValueDistribution> for DistSpec {
    fn from(d: ValueDistribution) -> Self {
        (*d.spec).clone()
    }
}

impl TryFrom<DistSpec> for ValueDistribution {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        let invalid = |m: &str| Err(Error::InvalidDistribution(m.to_string()));
        let (law, lo, hi) = match &spec {
            DistSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return invalid("uniform requires finite lo < hi");
                }
                (Law::Uniform, *lo, *hi)
            }
            DistSpec::Lognormal { mu, sigma, truncation_quantile: q } => {
                if !(mu.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                    return invalid("lognormal requires finite mu and sigma > 0");
                }
                if !(*q > 0.5 && *q < 1.0) {
                    return invalid("truncation quantile must lie in (0.5, 1)");
                }
                let hi = (mu + sigma * std_normal_upper_quantile(1.0 - q)).exp();
                (Law::Lognormal { mu: *mu, sigma: *sigma, q: *q }, 0.0, hi)
            }
            DistSpec::Exponential { rate, truncation_quantile: q } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return invalid("exponential requires rate > 0");
                }
                if !(*q > 0.5 && *q < 1.0) {
                    return invalid("truncation quantile must lie in (0.5, 1)");
                }
                let hi = -(1.0 - q).ln() / rate;
                (Law::Exponential { rate: *rate, q: *q }, 0.0, hi)
            }
            DistSpec::Empirical { samples } => {
                let mut xs = samples.clone();
                if xs.len() < 2 {
                    return invalid("empirical law needs at least two samples");
                }
                if xs.iter().any(|x| !x.is_finite()) {
                    return invalid("empirical samples must be finite");
                }
                xs.sort_by(f64::total_cmp);
                if xs.windows(2).any(|w| w[0] == w[1]) {
                    return invalid("repeated sample values form an atom");
                }
                let n = xs.len();
                let ps: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
                let (lo, hi) = (xs[0], xs[n - 1]);
                (Law::PiecewiseLinear { xs: xs.into(), ps: ps.into() }, lo, hi)
            }
            DistSpec::Tabulated { points } => {
                if points.len() < 2 {
                    return invalid("tabulated law needs at least two points");
                }
                let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
                let mut ps: Vec<f64> = points.iter().map(|p| p.1).collect();
                if xs.windows(2).any(|w| !(w[0] < w[1])) {
                    return invalid("tabulated x must be strictly increasing");
                }
                if ps.windows(2).any(|w| !(w[0] < w[1])) {
                    return invalid("tabulated F must be strictly increasing (no gaps in the support)");
                }
                let last = ps.len() - 1;
                if ps[0].abs() > 1e-12 || (ps[last] - 1.0).abs() > 1e-12 {
                    return invalid("tabulated F must run from 0 to 1");
                }
                ps[0] = 0.0;
                ps[last] = 1.0;
                let (lo, hi) = (xs[0], xs[last]);
                (Law::PiecewiseLinear { xs: xs.into(), ps: ps.into() }, lo, hi)
            }
        };
        Ok(Self { spec: Arc::new(spec), law, lo, hi, monopoly: OnceLock::new() })
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// `z` with `P(Z > z) = tail`, accurate for small tails.
fn std_normal_upper_quantile(tail: f64) -> f64 {
    -std_normal().inverse_cdf(tail)
}

fn lerp_segment(xs: &[f64], ps: &[f64], x: f64) -> (f64, f64) {
    // index of the segment [xs[i], xs[i+1]] containing x
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(xs.len() - 2);
    let slope = (ps[i + 1] - ps[i]) / (xs[i + 1] - xs[i]);
    (ps[i] + slope * (x - xs[i]), slope)
}

impl ValueDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        DistSpec::Uniform { lo, hi }.try_into()
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        DistSpec::Lognormal { mu, sigma, truncation_quantile: DEFAULT_TRUNCATION }.try_into()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        DistSpec::Exponential { rate, truncation_quantile: DEFAULT_TRUNCATION }.try_into()
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        DistSpec::Empirical { samples }.try_into()
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        DistSpec::Tabulated { points }.try_into()
    }

    pub fn spec(&self) -> &DistSpec {
        &self.spec
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn support_lo(&self) -> f64 {
        self.lo
    }

    pub fn support_hi(&self) -> f64 {
        self.hi
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.law {
            Law::Uniform => (x - self.lo) / (self.hi - self.lo),
            Law::Lognormal { mu, sigma, q } => {
                let z = (x.ln() - mu) / sigma;
                (std_normal().cdf(z) / q).min(1.0)
            }
            Law::Exponential { rate, q } => (-(-rate * x).exp_m1() / q).min(1.0),
            Law::PiecewiseLinear { xs, ps } => lerp_segment(xs, ps, x).0.clamp(0.0, 1.0),
        }
    }

    /// Survival function `1 - F(x)`, computed without cancellation in the tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 1.0;
        }
        if x >= self.hi {
            return 0.0;
        }
        match &self.law {
            Law::Uniform => (self.hi - x) / (self.hi - self.lo),
            Law::Lognormal { mu, sigma, q } => {
                let z = (x.ln() - mu) / sigma;
                ((std_normal().sf(z) - (1.0 - q)) / q).clamp(0.0, 1.0)
            }
            Law::Exponential { rate, q } => (((-rate * x).exp() - (1.0 - q)) / q).clamp(0.0, 1.0),
            Law::PiecewiseLinear { .. } => 1.0 - self.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        match &self.law {
            Law::Uniform => 1.0 / (self.hi - self.lo),
            Law::Lognormal { mu, sigma, q } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - mu) / sigma;
                std_normal().pdf(z) / (x * sigma * q)
            }
            Law::Exponential { rate, q } => rate * (-rate * x).exp() / q,
            Law::PiecewiseLinear { xs, ps } => lerp_segment(xs, ps, x).1,
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.lo;
        }
        if p >= 1.0 {
            return self.hi;
        }
        let x = match &self.law {
            Law::Uniform => self.lo + p * (self.hi - self.lo),
            Law::Lognormal { mu, sigma, q } => {
                let pq = p * q;
                let z = if pq > 0.5 {
                    std_normal_upper_quantile((1.0 - q) + q * (1.0 - p))
                } else {
                    std_normal().inverse_cdf(pq)
                };
                (mu + sigma * z).exp()
            }
            Law::Exponential { rate, q } => -(-p * q).ln_1p() / rate,
            Law::PiecewiseLinear { xs, ps } => {
                let i = ps.partition_point(|&v| v <= p).saturating_sub(1).min(ps.len() - 2);
                xs[i] + (p - ps[i]) * (xs[i + 1] - xs[i]) / (ps[i + 1] - ps[i])
            }
        };
        x.clamp(self.lo, self.hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Interior points where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.law {
            Law::PiecewiseLinear { xs, .. } => xs[1..xs.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    fn check_support(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * (self.hi - self.lo).max(1.0);
        if x.is_nan() || x < self.lo - slack || x > self.hi + slack {
            return Err(Error::Domain { x, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    /// `psi(x) = x - (1 - F(x)) / f(x)`.
    pub fn virtual_value(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        let f = self.pdf(x);
        if !(f > 0.0) {
            return Err(Error::SingularDensity { x });
        }
        Ok(x - self.sf(x) / f)
    }

    /// `lambda(x) = f(x) / (1 - F(x))`.
    pub fn hazard_rate(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        let s = self.sf(x);
        if s <= 1e-12 {
            return Err(Error::TailSingularity { x });
        }
        Ok(self.pdf(x) / s)
    }

    /// Revenue of a posted price to one bidder, `r (1 - F(r))`.
    pub fn price_revenue(&self, r: f64) -> f64 {
        r * self.sf(r)
    }

    /// Global maximizer of `r (1 - F(r))`, smallest among ties.
    pub fn monopoly_price(&self) -> f64 {
        *self.monopoly.get_or_init(|| self.compute_monopoly_price())
    }

    fn compute_monopoly_price(&self) -> f64 {
        let obj = |r: f64| self.price_revenue(r);
        let (r, _) = roots::grid_argmax(&obj, self.lo, self.hi, MONOPOLY_GRID, TIE_REL);
        // polish on the sign change of d/dr [r S(r)] = S(r) - r f(r)
        let step = (self.hi - self.lo) / (MONOPOLY_GRID - 1) as f64;
        let slope = |x: f64| self.sf(x) - x * self.pdf(x);
        roots::polish_peak(&obj, slope, r, step, self.lo, self.hi, TIE_REL)
    }

    /// True when the virtual value is nondecreasing on a 1024-point interior grid.
    pub fn is_regular(&self) -> bool {
        let n = 1024;
        let span = self.hi - self.lo;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..n {
            let x = self.lo + span * i as f64 / n as f64;
            match self.virtual_value(x) {
                Ok(v) => {
                    if v < prev - 1e-9 * v.abs().max(1.0) {
                        return false;
                    }
                    prev = v;
                }
                Err(_) => continue,
            }
        }
        true
    }

    /// `E[g(X) 1(a <= X <= b)]`, integrated in quantile space `u = F(x)`.
    pub fn expect_between<G: Fn(f64) -> f64>(&self, g: G, a: f64, b: f64) -> f64 {
        let (ua, ub) = (self.cdf(a), self.cdf(b));
        if ub <= ua {
            return 0.0;
        }
        let breaks: Vec<f64> = self.kinks().iter().map(|&k| self.cdf(k)).collect();
        quad::integrate_with_breaks(|u| g(self.quantile(u)), ua, ub, &breaks)
    }
}

/// Law of the highest competing bid faced by one bidder.
#[derive(Debug, Clone)]
pub enum CompetitionDistribution {
    /// Highest of `count` truthful bids, `G = F^count`. `count = 0` is the
    /// degenerate law `G = 1`.
    MaxOfTruthful { dist: ValueDistribution, count: u32 },
    /// Highest of independent strategic bids, `G = prod F_Bj`.
    MaxOfStrategies(Vec<BidDistribution>),
    /// Highest bid among opponents clearing their own reserves; bids below
    /// a reserve are dropped. Used for eager second-price auctions.
    MaxOfClearing { bidders: Vec<BidDistribution>, reserves: Vec<f64> },
    /// An arbitrary continuous law used directly as G.
    Explicit(ValueDistribution),
}

impl CompetitionDistribution {
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::MaxOfTruthful { count, .. } => *count == 0,
            Self::MaxOfStrategies(v) => v.is_empty(),
            Self::MaxOfClearing { bidders, .. } => bidders.is_empty(),
            Self::Explicit(_) => false,
        }
    }

    pub fn cdf(&self, b: f64) -> f64 {
        match self {
            Self::MaxOfTruthful { dist, count } => dist.cdf(b).powi(*count as i32),
            Self::MaxOfStrategies(bds) => bds.iter().map(|bd| bd.cdf(b)).product(),
            Self::MaxOfClearing { bidders, reserves } => bidders
                .iter()
                .zip(reserves)
                .map(|(bd, &r)| bd.cdf(b.max(r)))
                .product(),
            Self::Explicit(d) => d.cdf(b),
        }
    }

    pub fn pdf(&self, b: f64) -> f64 {
        match self {
            Self::MaxOfTruthful { dist, count } => match *count {
                0 => 0.0,
                1 => dist.pdf(b),
                m => m as f64 * dist.cdf(b).powi(m as i32 - 1) * dist.pdf(b),
            },
            Self::MaxOfStrategies(bds) => {
                let cdfs: Vec<f64> = bds.iter().map(|bd| bd.cdf(b)).collect();
                (0..bds.len())
                    .map(|j| {
                        let others: f64 = cdfs.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, c)| c).product();
                        bds[j].pdf(b) * others
                    })
                    .sum()
            }
            Self::MaxOfClearing { bidders, reserves } => {
                let cdfs: Vec<f64> = bidders.iter().zip(reserves).map(|(bd, &r)| bd.cdf(b.max(r))).collect();
                (0..bidders.len())
                    .filter(|&j| b >= reserves[j])
                    .map(|j| {
                        let others: f64 = cdfs.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, c)| c).product();
                        bidders[j].pdf(b) * others
                    })
                    .sum()
            }
            Self::Explicit(d) => d.pdf(b),
        }
    }

    /// Bid levels where G or g is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::MaxOfTruthful { dist, .. } | Self::Explicit(dist) => {
                let mut k = dist.kinks();
                k.extend([dist.support_lo(), dist.support_hi()]);
                k
            }
            Self::MaxOfStrategies(bds) => bds.iter().flat_map(|bd| bd.kinks()).collect(),
            Self::MaxOfClearing { bidders, reserves } => bidders
                .iter()
                .flat_map(|bd| bd.kinks())
                .chain(reserves.iter().copied())
                .collect(),
        }
    }
}

/// Distribution of the highest of `m` truthful bids drawn from `d`.
pub fn max_of_truthful(d: &ValueDistribution, m: u32) -> CompetitionDistribution {
    CompetitionDistribution::MaxOfTruthful { dist: d.clone(), count: m }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unif() -> ValueDistribution {
        ValueDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn virtual_value_examples() {
        assert!((unif().virtual_value(0.5).unwrap()).abs() < 1e-15);
        assert!((unif().virtual_value(1.0).unwrap() - 1.0).abs() < 1e-15);
        let e = ValueDistribution::exponential(1.0).unwrap();
        // truncation at 1 - 1e-9 perturbs psi by about 1e-9 e^2
        assert!((e.virtual_value(2.0).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn virtual_value_errors() {
        assert!(matches!(unif().virtual_value(1.5), Err(Error::Domain { .. })));
        let ln = ValueDistribution::lognormal(0.0, 1.0).unwrap();
        assert!(matches!(ln.virtual_value(0.0), Err(Error::SingularDensity { .. })));
    }

    #[test]
    fn hazard_rate_examples() {
        let e = ValueDistribution::exponential(1.0).unwrap();
        assert!((e.hazard_rate(3.0).unwrap() - 1.0).abs() < 1e-6);
        assert!((unif().hazard_rate(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((unif().hazard_rate(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(unif().hazard_rate(1.0), Err(Error::TailSingularity { .. })));
    }

    #[test]
    fn monopoly_price_examples() {
        assert!((unif().monopoly_price() - 0.5).abs() < 1e-10);
        assert_eq!(ValueDistribution::uniform(1.0, 2.0).unwrap().monopoly_price(), 1.0);
        let e = ValueDistribution::exponential(1.0).unwrap();
        assert!((e.monopoly_price() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn max_of_truthful_examples() {
        let g1 = max_of_truthful(&unif(), 1);
        for x in [0.0, 0.2, 0.7, 1.0] {
            assert_eq!(g1.cdf(x), x);
        }
        assert_eq!(max_of_truthful(&unif(), 2).cdf(0.5), 0.25);
        let ln = ValueDistribution::lognormal(0.25, 1.0).unwrap();
        let x = ln.quantile(0.3);
        assert!((max_of_truthful(&ln, 1).cdf(x) - 0.3).abs() < 1e-12);
        let g0 = max_of_truthful(&unif(), 0);
        assert!(g0.is_degenerate());
        assert_eq!(g0.cdf(0.1), 1.0);
        assert_eq!(g0.pdf(0.1), 0.0);
    }

    #[test]
    fn lognormal_truncation() {
        let ln = ValueDistribution::lognormal(0.25, 1.0).unwrap();
        let (lo, hi) = ln.support();
        assert_eq!(lo, 0.0);
        assert!((ln.cdf(hi) - 1.0).abs() < 1e-12);
        assert!(ln.sf(hi * 0.999_999) > 0.0);
        let mass = quad::integrate_with_breaks(|x| ln.pdf(x), lo, hi, &[1.0, 5.0, 20.0]);
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn construction_rejects_atoms_and_gaps() {
        assert!(ValueDistribution::empirical(vec![0.1, 0.2, 0.2]).is_err());
        assert!(ValueDistribution::empirical(vec![0.1]).is_err());
        assert!(ValueDistribution::tabulated(vec![(0.0, 0.0), (0.5, 0.5), (0.7, 0.5), (1.0, 1.0)]).is_err());
        assert!(ValueDistribution::tabulated(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        assert!(ValueDistribution::uniform(1.0, 1.0).is_err());
        assert!(ValueDistribution::lognormal(0.0, -1.0).is_err());
    }

    #[test]
    fn empirical_interpolates_between_samples() {
        let d = ValueDistribution::empirical(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(d.cdf(0.5), 0.25);
        assert_eq!(d.cdf(2.0), 0.75);
        assert_eq!(d.pdf(2.0), 0.25);
        assert_eq!(d.quantile(0.75), 2.0);
    }

    #[test]
    fn json_descriptors() {
        let d: ValueDistribution = serde_json::from_str(r#"{"kind":"uniform","lo":0,"hi":1}"#).unwrap();
        assert_eq!(d.support(), (0.0, 1.0));
        let ln: ValueDistribution = serde_json::from_str(r#"{"kind":"lognormal","mu":0.25,"sigma":1.0}"#).unwrap();
        assert_eq!(
            ln.spec(),
            &DistSpec::Lognormal { mu: 0.25, sigma: 1.0, truncation_quantile: DEFAULT_TRUNCATION }
        );
        let back = serde_json::to_string(&d).unwrap();
        assert!(back.contains("\"kind\":\"uniform\""));
        assert!(serde_json::from_str::<ValueDistribution>(r#"{"kind":"uniform","lo":1,"hi":0}"#).is_err());
    }
}
