//! Auction outcomes: exact expectations by quadrature and Monte Carlo play.
//!
//! Expected utility and payment of a bidder facing a competing-bid law `G`
//! are one-dimensional integrals over its value. They are taken in quantile
//! coordinates `u = F(x)`, where the integrands stay bounded even when a
//! thresholded bid grows like `1 / (1 - F(x))` near the top of the support.
//!
//! Monte Carlo play runs in fixed-size batches. Batch `k` draws from a ChaCha8
//! stream `k` keyed by the seed, and batch sums are combined in batch order,
//! so results depend on `(seed, rounds)` only, not on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{CompetitionDistribution, ValueDistribution};
use crate::error::{Error, Result};
use crate::quad;
use crate::seller::{erm_reserve, exact_reserve};
use crate::strategy::{bid_distribution, h_beta, BidDistribution, BidStrategy, StrategySpec};

const BATCH: u64 = 1 << 15;
const INVERSE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Second price; the top bidder wins iff it clears its own reserve.
    LazySp,
    /// Second price among the bidders clearing their own reserves.
    EagerSp,
    /// Highest nonnegative virtual bid wins. Virtual bids come from the exact
    /// bid laws, so the reserve policy plays no part.
    Myerson,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReservePolicy {
    /// Monopoly price of each bidder's exact bid law.
    #[default]
    ExactMonopolyPerBidder,
    /// Empirical monopoly price from `n_samples` fresh bids per bidder.
    ErmPerBidder { n_samples: usize, seed: u64 },
    Fixed { reserves: Vec<f64> },
    /// Reserves at the lowest possible bid, so that every bid clears.
    None,
}


#[derive(Debug, Clone)]
pub struct Bidder {
    pub dist: ValueDistribution,
    pub strategy: BidStrategy,
}

impl Bidder {
    pub fn new(dist: ValueDistribution, strategy: BidStrategy) -> Self {
        Self { dist, strategy }
    }

    pub fn truthful(dist: ValueDistribution) -> Self {
        Self { dist, strategy: BidStrategy::Truthful }
    }

    pub fn bid_distribution(&self) -> BidDistribution {
        bid_distribution(&self.dist, &self.strategy)
    }
}

#[derive(Debug, Clone)]
pub struct AuctionConfig {
    pub mechanism: Mechanism,
    pub bidders: Vec<Bidder>,
    pub reserve_policy: ReservePolicy,
    pub seller_welfare_benevolent: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BidderSpec {
    pub distribution: ValueDistribution,
    #[serde(default = "truthful")]
    pub strategy: StrategySpec,
}

fn truthful() -> StrategySpec {
    StrategySpec::Truthful
}

/// JSON form of [`AuctionConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuctionConfigSpec {
    pub mechanism: Mechanism,
    pub bidders: Vec<BidderSpec>,
    #[serde(default)]
    pub reserve_policy: ReservePolicy,
    #[serde(default = "yes")]
    pub seller_welfare_benevolent: bool,
}

impl AuctionConfigSpec {
    pub fn build(&self) -> Result<AuctionConfig> {
        let bidders = self
            .bidders
            .iter()
            .map(|b| Ok(Bidder::new(b.distribution.clone(), b.strategy.build(&b.distribution)?)))
            .collect::<Result<Vec<_>>>()?;
        let cfg = AuctionConfig {
            mechanism: self.mechanism,
            bidders,
            reserve_policy: self.reserve_policy.clone(),
            seller_welfare_benevolent: self.seller_welfare_benevolent,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl AuctionConfig {
    pub fn new(mechanism: Mechanism, bidders: Vec<Bidder>) -> Self {
        Self { mechanism, bidders, reserve_policy: ReservePolicy::default(), seller_welfare_benevolent: true }
    }

    pub fn with_reserve_policy(mut self, policy: ReservePolicy) -> Self {
        self.reserve_policy = policy;
        self
    }

    pub fn welfare_benevolent(mut self, yes: bool) -> Self {
        self.seller_welfare_benevolent = yes;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<AuctionConfigSpec>(text)?.build()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bidders.is_empty() {
            return Err(Error::InvalidConfig("at least one bidder is required".into()));
        }
        match &self.reserve_policy {
            ReservePolicy::Fixed { reserves } if reserves.len() != self.bidders.len() => Err(Error::InvalidConfig(
                format!("{} fixed reserves for {} bidders", reserves.len(), self.bidders.len()),
            )),
            ReservePolicy::ErmPerBidder { n_samples: 0, .. } => {
                Err(Error::InvalidConfig("ERM reserves need at least one sample".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn bid_distributions(&self) -> Vec<BidDistribution> {
        self.bidders.iter().map(Bidder::bid_distribution).collect()
    }

    /// Stage one: the reserve price posted to each bidder.
    pub fn resolve_reserves(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let bds = self.bid_distributions();
        Ok(match &self.reserve_policy {
            ReservePolicy::ExactMonopolyPerBidder => bds.iter().map(|bd| exact_reserve(bd).reserve_price).collect(),
            ReservePolicy::ErmPerBidder { n_samples, seed } => bds
                .iter()
                .enumerate()
                .map(|(i, bd)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(i as u64);
                    let bids: Vec<f64> = (0..*n_samples).map(|_| bd.sample(&mut rng)).collect();
                    erm_reserve(&bids)
                })
                .collect::<Result<Vec<_>>>()?,
            ReservePolicy::Fixed { reserves } => reserves.clone(),
            ReservePolicy::None => {
                let floor = bds.iter().map(BidDistribution::min_bid).fold(f64::INFINITY, f64::min);
                vec![floor; bds.len()]
            }
        })
    }
}

/// Integral of `phi(x) f(x)` over `[x_from, hi]`, in quantile coordinates,
/// split at the given value-space break points.
fn value_integral<P: Fn(f64) -> f64>(d: &ValueDistribution, x_from: f64, breaks: &[f64], phi: P) -> f64 {
    let u0 = d.cdf(x_from);
    if u0 >= 1.0 {
        return 0.0;
    }
    let mut ub: Vec<f64> = breaks.iter().map(|&x| d.cdf(x)).collect();
    ub.extend(d.kinks().iter().map(|&x| d.cdf(x)));
    quad::integrate_with_breaks(|u| phi(d.quantile(u)), u0, 1.0, &ub)
}

fn competition_breaks(s: &BidStrategy, d: &ValueDistribution, g: &CompetitionDistribution) -> Vec<f64> {
    let (lo, hi) = d.support();
    let mut b = s.kinks();
    b.extend(g.kinks().into_iter().map(|k| s.inverse(k, lo, hi)));
    b
}

fn h_or_bid(d: &ValueDistribution, s: &BidStrategy, x: f64) -> f64 {
    h_beta(d, s, x).unwrap_or_else(|_| s.bid(x))
}

/// `E[(X - h_beta(X)) G(beta(X)) 1(X >= x_beta)]`.
pub fn expected_utility_quadrature(
    d: &ValueDistribution,
    s: &BidStrategy,
    g: &CompetitionDistribution,
    x_beta: f64,
) -> f64 {
    let breaks = competition_breaks(s, d, g);
    value_integral(d, x_beta, &breaks, |x| (x - h_or_bid(d, s, x)) * g.cdf(s.bid(x)))
}

/// `E[psi_B(B) G(B) 1(B >= r)]` written in value space.
pub fn expected_payment_quadrature(
    d: &ValueDistribution,
    s: &BidStrategy,
    g: &CompetitionDistribution,
    reserve: f64,
) -> f64 {
    let bd = bid_distribution(d, s);
    if reserve > bd.max_bid() {
        return 0.0;
    }
    let x_r = bd.inverse(reserve);
    let breaks = competition_breaks(s, d, g);
    value_integral(d, x_r, &breaks, |x| h_or_bid(d, s, x) * g.cdf(s.bid(x)))
}

/// `E[X G(beta(X)) 1(X >= x_beta)]`, the welfare generated by one bidder.
pub fn expected_allocated_value(
    d: &ValueDistribution,
    s: &BidStrategy,
    g: &CompetitionDistribution,
    x_beta: f64,
) -> f64 {
    let breaks = competition_breaks(s, d, g);
    value_integral(d, x_beta, &breaks, |x| x * g.cdf(s.bid(x)))
}

/// Probability of winning, `E[G(beta(X)) 1(X >= x_beta)]`.
pub fn win_probability(d: &ValueDistribution, s: &BidStrategy, g: &CompetitionDistribution, x_beta: f64) -> f64 {
    let breaks = competition_breaks(s, d, g);
    value_integral(d, x_beta, &breaks, |x| g.cdf(s.bid(x)))
}

/// Extra utility of a lone thresholding bidder in a symmetric Myerson
/// auction: `F(m)^(K-1) E[X 1(X <= m)]` with `m` the monopoly price.
pub fn myerson_uplift_closed_form(d: &ValueDistribution, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    if !d.is_regular() {
        return Err(Error::Unsupported("uplift formula needs a regular distribution".into()));
    }
    let m = d.monopoly_price();
    let tail = d.expect_between(|x| x, d.support_lo(), m);
    Ok(d.cdf(m).powi(k as i32 - 1) * tail)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStderr {
    pub utility: Vec<f64>,
    pub payment: Vec<f64>,
    pub win_probability: Vec<f64>,
    pub seller_revenue: f64,
    pub welfare: f64,
    pub allocation_probability: f64,
}

/// Expected per-round outcome. Standard errors are zero for quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStats {
    pub method: String,
    pub rounds: u64,
    pub reserves: Vec<f64>,
    pub utility: Vec<f64>,
    pub payment: Vec<f64>,
    pub win_probability: Vec<f64>,
    pub seller_revenue: f64,
    pub welfare: f64,
    pub allocation_probability: f64,
    pub stderr: OutcomeStderr,
}

impl OutcomeStats {
    fn zero_stderr(k: usize) -> OutcomeStderr {
        OutcomeStderr {
            utility: vec![0.0; k],
            payment: vec![0.0; k],
            win_probability: vec![0.0; k],
            ..OutcomeStderr::default()
        }
    }
}

/// Per-round virtual-value machinery for Myerson auctions.
struct Virtualizer<'a> {
    bidder: &'a Bidder,
}

impl Virtualizer<'_> {
    fn h(&self, x: f64) -> f64 {
        h_or_bid(&self.bidder.dist, &self.bidder.strategy, x)
    }

    /// Smallest value whose virtual bid is at least `t` (strictly above when `strict`).
    fn threshold_value(&self, t: f64, strict: bool) -> f64 {
        let (lo, hi) = self.bidder.dist.support();
        let above = |x: f64| if strict { self.h(x) > t } else { self.h(x) >= t };
        if above(lo) {
            return lo;
        }
        if !above(hi) {
            return hi;
        }
        let (mut a, mut b) = (lo, hi);
        let tol = INVERSE_TOL * (hi - lo).max(1.0);
        for _ in 0..200 {
            if b - a <= tol {
                break;
            }
            let m = 0.5 * (a + b);
            if above(m) {
                b = m;
            } else {
                a = m;
            }
        }
        b
    }

    /// `P(psi_B < t)` and `P(psi_B <= t)`.
    fn below(&self, t: f64) -> (f64, f64) {
        let d = &self.bidder.dist;
        (d.cdf(self.threshold_value(t, false)), d.cdf(self.threshold_value(t, true)))
    }
}

/// Exact expected outcome of the configured auction.
pub fn quadrature_outcome(cfg: &AuctionConfig) -> Result<OutcomeStats> {
    let reserves = cfg.resolve_reserves()?;
    let k = cfg.bidders.len();
    let bds = cfg.bid_distributions();
    let mut utility = vec![0.0; k];
    let mut payment = vec![0.0; k];
    let mut win = vec![0.0; k];
    let mut welfare = 0.0;
    match cfg.mechanism {
        Mechanism::LazySp | Mechanism::EagerSp => {
            for (i, b) in cfg.bidders.iter().enumerate() {
                let others: Vec<BidDistribution> =
                    bds.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, bd)| bd.clone()).collect();
                let g = if cfg.mechanism == Mechanism::LazySp {
                    CompetitionDistribution::MaxOfStrategies(others)
                } else {
                    let rs = reserves.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| *r).collect();
                    CompetitionDistribution::MaxOfClearing { bidders: others, reserves: rs }
                };
                let x_r = bds[i].inverse(reserves[i]);
                let x_r = if reserves[i] > bds[i].max_bid() { b.dist.support_hi() } else { x_r };
                utility[i] = expected_utility_quadrature(&b.dist, &b.strategy, &g, x_r);
                payment[i] = expected_payment_quadrature(&b.dist, &b.strategy, &g, reserves[i]);
                win[i] = win_probability(&b.dist, &b.strategy, &g, x_r);
                welfare += expected_allocated_value(&b.dist, &b.strategy, &g, x_r);
            }
        }
        Mechanism::Myerson => {
            let virt: Vec<Virtualizer> = cfg.bidders.iter().map(|b| Virtualizer { bidder: b }).collect();
            for (i, b) in cfg.bidders.iter().enumerate() {
                let vi = &virt[i];
                let alloc = |x: f64| {
                    let h = vi.h(x);
                    let sells = if cfg.seller_welfare_benevolent { h >= 0.0 } else { h > 0.0 };
                    if !sells {
                        return 0.0;
                    }
                    virt.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(j, vj)| {
                            let (lt, le) = vj.below(h);
                            // equal virtual bids go to the smaller index
                            if j < i {
                                lt
                            } else {
                                le
                            }
                        })
                        .product::<f64>()
                };
                let mut breaks = b.strategy.kinks();
                breaks.push(vi.threshold_value(0.0, false));
                let d = &b.dist;
                utility[i] = value_integral(d, d.support_lo(), &breaks, |x| (x - vi.h(x)) * alloc(x));
                payment[i] = value_integral(d, d.support_lo(), &breaks, |x| vi.h(x) * alloc(x));
                win[i] = value_integral(d, d.support_lo(), &breaks, alloc);
                welfare += value_integral(d, d.support_lo(), &breaks, |x| x * alloc(x));
            }
        }
    }
    Ok(OutcomeStats {
        method: "quadrature".into(),
        rounds: 0,
        reserves,
        seller_revenue: payment.iter().sum(),
        allocation_probability: win.iter().sum(),
        utility,
        payment,
        win_probability: win,
        welfare,
        stderr: OutcomeStats::zero_stderr(k),
    })
}

/// Running sums of per-round quantities and their squares.
#[derive(Debug, Clone)]
struct Partial {
    n: u64,
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Partial {
    fn new(width: usize) -> Self {
        Self { n: 0, sum: vec![0.0; width], sq: vec![0.0; width] }
    }

    fn push(&mut self, row: &[f64]) {
        self.n += 1;
        for (k, v) in row.iter().enumerate() {
            self.sum[k] += v;
            self.sq[k] += v * v;
        }
    }

    fn merge(&mut self, other: &Partial) {
        self.n += other.n;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sq[k] += other.sq[k];
        }
    }

    fn mean_stderr(&self, k: usize) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum[k] / n;
        let var = (self.sq[k] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

struct Round<'a> {
    cfg: &'a AuctionConfig,
    reserves: &'a [f64],
    virt: Vec<Virtualizer<'a>>,
}

impl Round<'_> {
    /// Plays one round. Returns the winner with its payment and value.
    fn play(&self, values: &[f64], bids: &[f64]) -> Option<(usize, f64)> {
        let k = bids.len();
        match self.cfg.mechanism {
            Mechanism::LazySp => {
                let w = argmax(bids, |_| true)?;
                if bids[w] < self.reserves[w] {
                    return None;
                }
                let second = (0..k).filter(|&j| j != w).map(|j| bids[j]).fold(f64::NEG_INFINITY, f64::max);
                Some((w, second.max(self.reserves[w])))
            }
            Mechanism::EagerSp => {
                let clears = |j: usize| bids[j] >= self.reserves[j];
                let w = argmax(bids, clears)?;
                let second =
                    (0..k).filter(|&j| j != w && clears(j)).map(|j| bids[j]).fold(f64::NEG_INFINITY, f64::max);
                Some((w, second.max(self.reserves[w])))
            }
            Mechanism::Myerson => {
                let v: Vec<f64> = (0..k).map(|j| self.virt[j].h(values[j])).collect();
                let w = argmax(&v, |_| true)?;
                let sells = if self.cfg.seller_welfare_benevolent { v[w] >= 0.0 } else { v[w] > 0.0 };
                if !sells {
                    return None;
                }
                let second = (0..k).filter(|&j| j != w).map(|j| v[j]).fold(0.0, f64::max);
                // a lower-index rival with an equal virtual bid would have won,
                // so a tie with such a rival requires beating it strictly
                let strict = (0..w).any(|j| v[j] == second) && second > 0.0;
                let x_pay = self.virt[w].threshold_value(second, strict);
                Some((w, self.cfg.bidders[w].strategy.bid(x_pay)))
            }
        }
    }
}

/// Index of the largest entry among those passing `keep`; ties go to the smallest index.
fn argmax<K: Fn(usize) -> bool>(xs: &[f64], keep: K) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &x) in xs.iter().enumerate() {
        if keep(j) && best.is_none_or(|b| x > xs[b]) {
            best = Some(j);
        }
    }
    best
}

/// Monte Carlo estimate on the global rayon pool.
pub fn mc_simulate(cfg: &AuctionConfig, n_rounds: u64, seed: u64) -> Result<OutcomeStats> {
    mc_simulate_threads(cfg, n_rounds, seed, None)
}

/// Monte Carlo estimate using at most `threads` workers. The result does
/// not depend on `threads`.
pub fn mc_simulate_threads(
    cfg: &AuctionConfig,
    n_rounds: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<OutcomeStats> {
    if n_rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let reserves = cfg.resolve_reserves()?;
    let k = cfg.bidders.len();
    let round = Round { cfg, reserves: &reserves, virt: cfg.bidders.iter().map(|b| Virtualizer { bidder: b }).collect() };
    // columns: utility[k], payment[k], win[k], revenue, welfare, sold
    let width = 3 * k + 3;
    let n_batches = n_rounds.div_ceil(BATCH);
    let run_batch = |batch: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        let len = BATCH.min(n_rounds - batch * BATCH);
        let mut acc = Partial::new(width);
        let mut values = vec![0.0; k];
        let mut bids = vec![0.0; k];
        let mut row = vec![0.0; width];
        for _ in 0..len {
            for (j, b) in cfg.bidders.iter().enumerate() {
                values[j] = b.dist.sample(&mut rng);
                bids[j] = b.strategy.bid(values[j]);
            }
            row.iter_mut().for_each(|v| *v = 0.0);
            if let Some((w, pay)) = round.play(&values, &bids) {
                row[w] = values[w] - pay;
                row[k + w] = pay;
                row[2 * k + w] = 1.0;
                row[3 * k] = pay;
                row[3 * k + 1] = values[w];
                row[3 * k + 2] = 1.0;
            }
            acc.push(&row);
        }
        acc
    };
    let run_all = || (0..n_batches).into_par_iter().map(run_batch).collect::<Vec<_>>();
    let partials = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run_all),
        None => run_all(),
    };
    let mut total = Partial::new(width);
    for p in &partials {
        total.merge(p);
    }
    let col = |c: usize| total.mean_stderr(c);
    let split = |from: usize| -> (Vec<f64>, Vec<f64>) { (from..from + k).map(col).unzip() };
    let (utility, u_se) = split(0);
    let (payment, p_se) = split(k);
    let (win, w_se) = split(2 * k);
    let (seller_revenue, rev_se) = col(3 * k);
    let (welfare, wel_se) = col(3 * k + 1);
    let (allocation_probability, alloc_se) = col(3 * k + 2);
    Ok(OutcomeStats {
        method: "monte_carlo".into(),
        rounds: n_rounds,
        reserves: reserves.clone(),
        utility,
        payment,
        win_probability: win,
        seller_revenue,
        welfare,
        allocation_probability,
        stderr: OutcomeStderr {
            utility: u_se,
            payment: p_se,
            win_probability: w_se,
            seller_revenue: rev_se,
            welfare: wel_se,
            allocation_probability: alloc_se,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::max_of_truthful;
    use crate::strategy::{make_thresholded, ThresholdedParams};

    fn unif() -> ValueDistribution {
        ValueDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn thr(r: f64) -> BidStrategy {
        make_thresholded(&unif(), ThresholdedParams::truthful_beyond(r)).unwrap()
    }

    #[test]
    fn utility_examples() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let u = expected_utility_quadrature(&d, &BidStrategy::Truthful, &g, 0.5);
        assert!((u - 1.0 / 12.0).abs() < 1e-12);
        let u = expected_utility_quadrature(&d, &thr(0.5), &g, 0.0);
        assert!((u - 0.1316).abs() < 5e-5, "{u}");
        let u = expected_utility_quadrature(&d, &thr(0.7968), &g, 0.0);
        assert!((u - 0.1468).abs() < 1e-4, "{u}");
    }

    #[test]
    fn payment_examples() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let m = expected_payment_quadrature(&d, &BidStrategy::Truthful, &g, 0.5);
        assert!((m - 5.0 / 24.0).abs() < 1e-12);
        let m = expected_payment_quadrature(&d, &thr(0.5), &g, 0.25);
        assert!((m - 5.0 / 24.0).abs() < 1e-10);
        assert_eq!(expected_payment_quadrature(&d, &BidStrategy::Truthful, &g, 1.2), 0.0);
    }

    #[test]
    fn uplift_examples() {
        let d = unif();
        assert!((myerson_uplift_closed_form(&d, 2).unwrap() - 1.0 / 16.0).abs() < 1e-10);
        assert!((myerson_uplift_closed_form(&d, 3).unwrap() - 1.0 / 32.0).abs() < 1e-10);
        let d12 = ValueDistribution::uniform(1.0, 2.0).unwrap();
        assert_eq!(myerson_uplift_closed_form(&d12, 2).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_outcomes_uniform() {
        let d = unif();
        let truthful = AuctionConfig::new(Mechanism::LazySp, vec![Bidder::truthful(d.clone()), Bidder::truthful(d.clone())]);
        let o = quadrature_outcome(&truthful).unwrap();
        assert!((o.utility[0] - 1.0 / 12.0).abs() < 1e-10);
        assert!((o.seller_revenue - 5.0 / 12.0).abs() < 1e-10);
        assert!((o.welfare - 7.0 / 12.0).abs() < 1e-10);

        let cfg = AuctionConfig::new(Mechanism::LazySp, vec![Bidder::new(d.clone(), thr(0.5)), Bidder::truthful(d.clone())]);
        let o = quadrature_outcome(&cfg).unwrap();
        assert!((o.reserves[0] - 0.25).abs() < 1e-12);
        assert!((o.utility[1] - 1.0 / 12.0).abs() < 1e-9);
        assert!((o.seller_revenue - 5.0 / 12.0).abs() < 1e-9);
        assert!((o.welfare - 0.6316).abs() < 1e-4);

        let my = AuctionConfig { mechanism: Mechanism::Myerson, ..cfg.clone() };
        let o = quadrature_outcome(&my).unwrap();
        assert!((o.utility[0] - 7.0 / 48.0).abs() < 1e-7, "{:?}", o.utility);
        assert!((o.seller_revenue - 5.0 / 12.0).abs() < 1e-7);

        let eager = AuctionConfig { mechanism: Mechanism::EagerSp, ..cfg };
        let o = quadrature_outcome(&eager).unwrap();
        assert!((o.utility[0] - 7.0 / 48.0).abs() < 1e-7, "{:?}", o.utility);
    }

    #[test]
    fn monte_carlo_is_thread_independent() {
        let d = unif();
        let cfg = AuctionConfig::new(Mechanism::LazySp, vec![Bidder::new(d.clone(), thr(0.5)), Bidder::truthful(d)]);
        let a = mc_simulate_threads(&cfg, 100_000, 7, Some(1)).unwrap();
        let b = mc_simulate_threads(&cfg, 100_000, 7, Some(4)).unwrap();
        assert_eq!(a, b);
        assert!((a.utility[0] - 0.1316).abs() < 4.0 * a.stderr.utility[0]);
        let identity = a.seller_revenue + a.utility.iter().sum::<f64>();
        assert!((a.welfare - identity).abs() < 1e-9);
        assert!(mc_simulate(&cfg, 0, 1).is_err());
    }

    #[test]
    fn config_json() {
        let text = r#"{
            "mechanism": "lazy_sp",
            "bidders": [
                {"distribution": {"kind": "uniform", "lo": 0, "hi": 1},
                 "strategy": {"kind": "thresholded", "r": 0.5}},
                {"distribution": {"kind": "uniform", "lo": 0, "hi": 1}}
            ],
            "reserve_policy": {"kind": "exact_monopoly_per_bidder"}
        }"#;
        let cfg = AuctionConfig::from_json(text).unwrap();
        assert_eq!(cfg.bidders.len(), 2);
        assert!(cfg.seller_welfare_benevolent);
        let bad = r#"{"mechanism":"lazy_sp","bidders":[{"distribution":{"kind":"uniform","lo":0,"hi":1}}],
            "reserve_policy":{"kind":"fixed","reserves":[0.1,0.2]}}"#;
        assert!(AuctionConfig::from_json(bad).is_err());
        assert!(AuctionConfig::from_json(r#"{"mechanism":"lazy_sp","bidders":[]}"#).is_err());
    }
}
