//! First-order conditions for strategic bidding and the solvers built on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auction::{
    expected_payment_quadrature, expected_utility_quadrature, mc_simulate, AuctionConfig, Bidder, Mechanism,
};
use crate::dist::{max_of_truthful, CompetitionDistribution, ValueDistribution};
use crate::error::{Error, Result};
use crate::quad::Quadrature;
use crate::roots::{self, Root};
use crate::seller::exact_reserve;
use crate::strategy::{bid_distribution, h_beta, make_thresholded, BidStrategy, Func, ThresholdedParams};

/// Tighter than the default so residuals sit well below solver tolerances.
const FINE: Quadrature = Quadrature { rel_tol: 1e-12, abs_tol: 1e-16, max_depth: 40 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Search interval; each solver has its own default when unset.
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub scan_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { bracket_lo: None, bracket_hi: None, abs_tol: 1e-10, max_iter: 200, scan_points: 4096 }
    }
}

impl SolverConfig {
    fn bracket(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let (a, b) = (self.bracket_lo.unwrap_or(lo), self.bracket_hi.unwrap_or(hi));
        if !(a < b) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("bad solver bracket [{a}, {b}] or tolerance")));
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub r_star: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub alpha_star: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

impl From<Root> for ThresholdSolution {
    fn from(r: Root) -> Self {
        Self { r_star: r.x, residual: r.residual, iterations: r.iterations, bracket: r.bracket }
    }
}

impl From<Root> for LinearSolution {
    fn from(r: Root) -> Self {
        Self { alpha_star: r.x, residual: r.residual, iterations: r.iterations, bracket: r.bracket }
    }
}

/// A perturbation direction `rho` with its derivative.
#[derive(Clone)]
pub struct Direction {
    pub rho: Func,
    pub rho_prime: Func,
}

impl std::fmt::Debug for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Direction")
    }
}

impl Direction {
    pub fn new<R, D>(rho: R, rho_prime: D) -> Self
    where
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { rho: Arc::new(rho), rho_prime: Arc::new(rho_prime) }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0)
    }

    /// `rho(x) = x`
    pub fn identity() -> Self {
        Self::new(|x| x, |_| 1.0)
    }

    /// Legendre polynomial of degree `k <= 4`, rescaled from [-1, 1] to [lo, hi].
    pub fn legendre(k: usize, lo: f64, hi: f64) -> Self {
        assert!(k <= 4, "Legendre directions go up to degree 4");
        let scale = 2.0 / (hi - lo);
        let t = move |x: f64| scale * (x - lo) - 1.0;
        let p = move |t: f64| match k {
            0 => 1.0,
            1 => t,
            2 => 0.5 * (3.0 * t * t - 1.0),
            3 => 0.5 * (5.0 * t.powi(3) - 3.0 * t),
            _ => (35.0 * t.powi(4) - 30.0 * t * t + 3.0) / 8.0,
        };
        let dp = move |t: f64| match k {
            0 => 0.0,
            1 => 1.0,
            2 => 3.0 * t,
            3 => 0.5 * (15.0 * t * t - 3.0),
            _ => (140.0 * t.powi(3) - 60.0 * t) / 8.0,
        };
        Self::new(move |x| p(t(x)), move |x| dp(t(x)) * scale)
    }

    /// Linear combination `sum_k c_k P_k` of rescaled Legendre polynomials.
    pub fn legendre_mix(coeffs: &[f64], lo: f64, hi: f64) -> Self {
        let parts: Vec<(f64, Direction)> =
            coeffs.iter().enumerate().map(|(k, &c)| (c, Self::legendre(k, lo, hi))).collect();
        let parts2 = parts.clone();
        Self::new(
            move |x| parts.iter().map(|(c, d)| c * (d.rho)(x)).sum(),
            move |x| parts2.iter().map(|(c, d)| c * (d.rho_prime)(x)).sum(),
        )
    }

    pub fn apply(&self, s: &BidStrategy, t: f64) -> BidStrategy {
        s.perturbed(t, self.rho.clone(), self.rho_prime.clone())
    }
}

/// Utility of a bidder whose seller posts the monopoly price of its bid law.
pub fn utility_at_monopoly_reserve(d: &ValueDistribution, s: &BidStrategy, g: &CompetitionDistribution) -> f64 {
    let res = exact_reserve(&bid_distribution(d, s));
    expected_utility_quadrature(d, s, g, res.reserve_value)
}

/// Derivative of [`utility_at_monopoly_reserve`] along `beta + t rho` at `t = 0`,
/// from the boundary-corrected first-variation formula.
pub fn directional_derivative(
    d: &ValueDistribution,
    s: &BidStrategy,
    dir: &Direction,
    g: &CompetitionDistribution,
) -> Result<f64> {
    let (lo, hi) = d.support();
    let x_b = exact_reserve(&bid_distribution(d, s)).reserve_value;
    let h = |x: f64| h_beta(d, s, x).unwrap_or(f64::NAN);
    let step = 1e-5 * (hi - lo);
    let (a, b) = ((x_b - step).max(lo), (x_b + step).min(hi));
    let h_prime = (h(b) - h(a)) / (b - a);
    if !(h_prime.abs() > 1e-9) {
        return Err(Error::DegenerateCrossing { x: x_b });
    }
    let rho = &dir.rho;
    let mut breaks = s.kinks();
    breaks.extend(d.kinks());
    let u0 = d.cdf(x_b);
    let interior = FINE.integrate_with_breaks(
        |u| {
            let x = d.quantile(u);
            let bid = s.bid(x);
            g.pdf(bid) * (x - bid) * rho(x)
        },
        u0,
        1.0,
        &breaks.iter().map(|&x| d.cdf(x)).collect::<Vec<_>>(),
    );
    let (f, sf) = (d.pdf(x_b), d.sf(x_b));
    let g_at = g.cdf(s.bid(x_b));
    let boundary = g_at * (x_b * f / h_prime - sf) * rho(x_b);
    let slope_term = (dir.rho_prime)(x_b) * x_b * sf * g_at / h_prime;
    Ok(interior + boundary - slope_term)
}

/// Central difference `(U(beta + t rho) - U(beta - t rho)) / 2t` with
/// `t = 1e-4` times the support width.
pub fn finite_difference_derivative(
    d: &ValueDistribution,
    s: &BidStrategy,
    dir: &Direction,
    g: &CompetitionDistribution,
) -> f64 {
    let (lo, hi) = d.support();
    let t = 1e-4 * (hi - lo);
    let up = utility_at_monopoly_reserve(d, &dir.apply(s, t), g);
    let down = utility_at_monopoly_reserve(d, &dir.apply(s, -t), g);
    (up - down) / (2.0 * t)
}

/// `E[X / (1 - F(X)) g(gamma(r) (1 - F(r)) / (1 - F(X))) 1(X <= r)]`
fn below_threshold_pull(d: &ValueDistribution, g: &CompetitionDistribution, r: f64, gamma_r: f64) -> f64 {
    let scale = gamma_r * d.sf(r);
    let ur = d.cdf(r);
    let breaks: Vec<f64> = d.kinks().iter().map(|&x| d.cdf(x)).collect();
    FINE.integrate_with_breaks(
        |u| {
            let x = d.quantile(u);
            let s = d.sf(x);
            x / s * g.pdf(scale / s)
        },
        0.0,
        ur,
        &breaks,
    )
}

/// Derivative of the utility of `thresholded(r, gamma)` when `gamma` moves
/// along `rho` with the threshold held fixed (epsilon = 0).
pub fn thresholded_directional_derivative(
    d: &ValueDistribution,
    gamma: &BidStrategy,
    r: f64,
    dir: &Direction,
    g: &CompetitionDistribution,
) -> f64 {
    let rho = &dir.rho;
    let mut breaks: Vec<f64> = gamma.kinks();
    breaks.extend(d.kinks());
    let ub: Vec<f64> = breaks.iter().map(|&x| d.cdf(x)).collect();
    let interior = FINE.integrate_with_breaks(
        |u| {
            let x = d.quantile(u);
            let bid = gamma.bid(x);
            (x - bid) * g.pdf(bid) * rho(x)
        },
        d.cdf(r),
        1.0,
        &ub,
    );
    let gamma_r = gamma.bid(r);
    let pull = below_threshold_pull(d, g, r, gamma_r);
    interior + rho(r) * d.sf(r) * (pull - g.cdf(gamma_r))
}

/// First-order residual of the threshold with truthful continuation,
/// `E[X/(1-F) g(r (1-F(r))/(1-F(X))) 1(X <= r)] - G(r)`.
pub fn threshold_first_order_residual(d: &ValueDistribution, g: &CompetitionDistribution, r: f64) -> f64 {
    below_threshold_pull(d, g, r, r) - g.cdf(r)
}

/// `d/dr` of the utility of `thresholded(r, truthful)`.
pub fn threshold_utility_derivative(d: &ValueDistribution, g: &CompetitionDistribution, r: f64) -> f64 {
    let psi = r - d.sf(r) / d.pdf(r);
    -d.pdf(r) * psi * threshold_first_order_residual(d, g, r)
}

/// `I(r) = E[psi(X) G(r (1 - F(r)) / (1 - F(X))) 1(X <= r)]`.
pub fn threshold_residual(d: &ValueDistribution, g: &CompetitionDistribution, r: f64) -> f64 {
    let scale = r * d.sf(r);
    let breaks: Vec<f64> = d.kinks().iter().map(|&x| d.cdf(x)).collect();
    FINE.integrate_with_breaks(
        |u| {
            let x = d.quantile(u);
            let s = d.sf(x);
            let f = d.pdf(x);
            let psi = if f > 0.0 { x - s / f } else { x };
            psi * g.cdf(scale / s)
        },
        0.0,
        d.cdf(r),
        &breaks,
    )
}

/// Finds the first upward sign change of `residual` on `[from, to]`, then
/// refines it.
fn scan_and_solve<F: Fn(f64) -> f64>(residual: F, from: f64, to: f64, cfg: &SolverConfig, what: &str) -> Result<Root> {
    let (a, b) = cfg.bracket(from, to)?;
    let (lo, hi) = roots::first_upcrossing(&residual, a, b, cfg.scan_points)
        .ok_or_else(|| Error::NoInteriorSolution(format!("{what}: residual never turns positive on [{a}, {b}]")))?;
    let mut root = roots::secant_bisect(&residual, lo, hi, cfg.abs_tol, cfg.max_iter)?;
    root.bracket = (lo, hi);
    Ok(root)
}

/// Best threshold with truthful continuation for one strategic bidder.
pub fn one_strategic_threshold(
    d: &ValueDistribution,
    g: &CompetitionDistribution,
    cfg: &SolverConfig,
) -> Result<ThresholdSolution> {
    let (lo, hi) = d.support();
    let from = d.monopoly_price() + 1e-6;
    let to = hi - 1e-6 * (hi - lo);
    let root = scan_and_solve(|r| threshold_residual(d, g, r), from, to, cfg, "one-strategic threshold")?;
    Ok(root.into())
}

/// `E[psi(X) F(X)^(K-1) 1(X <= r)]`
pub fn nash_residual(d: &ValueDistribution, k: u32, r: f64) -> f64 {
    let breaks: Vec<f64> = d.kinks().iter().map(|&x| d.cdf(x)).collect();
    FINE.integrate_with_breaks(
        |u| {
            let x = d.quantile(u);
            let f = d.pdf(x);
            let psi = if f > 0.0 { x - d.sf(x) / f } else { x };
            psi * u.powi(k as i32 - 1)
        },
        0.0,
        d.cdf(r),
        &breaks,
    )
}

/// Common threshold of the symmetric equilibrium among `k` thresholding bidders.
pub fn nash_threshold(d: &ValueDistribution, k: u32, cfg: &SolverConfig) -> Result<ThresholdSolution> {
    if k < 2 {
        return Err(Error::InvalidConfig("a Nash threshold needs at least two bidders".into()));
    }
    let hi = d.support_hi();
    let from = d.monopoly_price() + 1e-6;
    let root = scan_and_solve(|r| nash_residual(d, k, r), from, hi, cfg, "Nash threshold")?;
    Ok(root.into())
}

/// `(1 - a) E[g(a X) X^2 1(X >= m)] - m (1 - F(m)) G(a m)` with `m` the monopoly price.
pub fn linear_residual(d: &ValueDistribution, g: &CompetitionDistribution, alpha: f64) -> f64 {
    let m = d.monopoly_price();
    let breaks: Vec<f64> = d.kinks().iter().map(|&x| d.cdf(x)).collect();
    let mut bid_breaks: Vec<f64> = g.kinks().iter().map(|&b| d.cdf(b / alpha)).collect();
    bid_breaks.extend(breaks);
    let e = FINE.integrate_with_breaks(
        |u| {
            let x = d.quantile(u);
            g.pdf(alpha * x) * x * x
        },
        d.cdf(m),
        1.0,
        &bid_breaks,
    );
    (1.0 - alpha) * e - m * d.sf(m) * g.cdf(alpha * m)
}

/// Best shading factor among linear strategies `beta(x) = alpha x`.
pub fn optimal_linear_alpha(
    d: &ValueDistribution,
    g: &CompetitionDistribution,
    cfg: &SolverConfig,
) -> Result<LinearSolution> {
    let (a, b) = cfg.bracket(0.01, 1.0)?;
    let mut root = roots::secant_bisect(|al| linear_residual(d, g, al), a, b, cfg.abs_tol, cfg.max_iter)?;
    root.bracket = (a, b);
    Ok(root.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueEquivalence {
    pub seller_revenue_nash: f64,
    pub seller_revenue_no_reserve: f64,
    pub buyer_utility_nash: f64,
    pub buyer_utility_no_reserve: f64,
}

/// Seller revenue and per-buyer utility when all `k` bidders play the Nash
/// threshold against monopoly reserves, next to truthful bidding without reserves.
pub fn nash_revenue_equivalence_check(d: &ValueDistribution, k: u32) -> Result<RevenueEquivalence> {
    let r = nash_threshold(d, k, &SolverConfig::default())?.r_star;
    let s = make_thresholded(d, ThresholdedParams::truthful_beyond(r))?;
    let bd = bid_distribution(d, &s);
    let g_nash = CompetitionDistribution::MaxOfStrategies(vec![bd.clone(); k as usize - 1]);
    let res = exact_reserve(&bd);
    let pay_nash = expected_payment_quadrature(d, &s, &g_nash, res.reserve_price);
    let u_nash = expected_utility_quadrature(d, &s, &g_nash, res.reserve_value);

    let g_plain = max_of_truthful(d, k - 1);
    let lo = d.support_lo();
    let pay_plain = expected_payment_quadrature(d, &BidStrategy::Truthful, &g_plain, lo);
    let u_plain = expected_utility_quadrature(d, &BidStrategy::Truthful, &g_plain, lo);
    Ok(RevenueEquivalence {
        seller_revenue_nash: k as f64 * pay_nash,
        seller_revenue_no_reserve: k as f64 * pay_plain,
        buyer_utility_nash: u_nash,
        buyer_utility_no_reserve: u_plain,
    })
}

/// One Monte Carlo evaluation per candidate strategy of the first bidder,
/// all with the same seed so that the comparison uses common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub c: f64,
    pub utility: f64,
    pub stderr: f64,
}

fn mc_grid<I>(d: &ValueDistribution, opponents: &[Bidder], candidates: I, rounds: u64, seed: u64) -> Result<Vec<GridPoint>>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    candidates
        .into_iter()
        .map(|(alpha, c)| {
            let mut bidders = vec![Bidder::new(d.clone(), BidStrategy::affine(alpha, c))];
            bidders.extend(opponents.iter().cloned());
            let o = mc_simulate(&AuctionConfig::new(Mechanism::LazySp, bidders), rounds, seed)?;
            Ok(GridPoint { alpha, c, utility: o.utility[0], stderr: o.stderr.utility[0] })
        })
        .collect()
}

/// Monte Carlo utility of `alpha x` for each `alpha`, in a lazy second-price
/// auction with monopoly reserves.
pub fn mc_grid_search_linear(
    d: &ValueDistribution,
    opponents: &[Bidder],
    alphas: &[f64],
    rounds: u64,
    seed: u64,
) -> Result<Vec<GridPoint>> {
    mc_grid(d, opponents, alphas.iter().map(|&a| (a, 0.0)), rounds, seed)
}

/// Experimental: Monte Carlo utility of `alpha x + c` over a product grid.
pub fn mc_grid_search_affine(
    d: &ValueDistribution,
    opponents: &[Bidder],
    alphas: &[f64],
    cs: &[f64],
    rounds: u64,
    seed: u64,
) -> Result<Vec<GridPoint>> {
    let pairs: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| cs.iter().map(move |&c| (a, c))).collect();
    mc_grid(d, opponents, pairs, rounds, seed)
}

/// Grid point with the highest utility.
pub fn best_grid_point(points: &[GridPoint]) -> Option<GridPoint> {
    points.iter().copied().fold(None, |best, p| match best {
        Some(b) if b.utility >= p.utility => Some(b),
        _ => Some(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unif() -> ValueDistribution {
        ValueDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn derivative_truthful_uniform() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let dd = directional_derivative(&d, &BidStrategy::Truthful, &Direction::identity(), &g).unwrap();
        assert!((dd + 0.125).abs() < 1e-8, "{dd}");
        let fd = finite_difference_derivative(&d, &BidStrategy::Truthful, &Direction::identity(), &g);
        assert!((dd - fd).abs() < 1e-3, "{dd} vs {fd}");
        let zero = directional_derivative(&d, &BidStrategy::Truthful, &Direction::zero(), &g).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn derivative_vanishes_at_optimal_linear() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let dd = directional_derivative(&d, &BidStrategy::linear(0.7), &Direction::identity(), &g).unwrap();
        assert!(dd.abs() < 1e-6, "{dd}");
    }

    #[test]
    fn degenerate_crossing_for_thresholded() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let s = make_thresholded(&d, ThresholdedParams::truthful_beyond(0.5)).unwrap();
        assert!(matches!(
            directional_derivative(&d, &s, &Direction::identity(), &g),
            Err(Error::DegenerateCrossing { .. })
        ));
    }

    #[test]
    fn linear_alpha() {
        let d = unif();
        let sol = optimal_linear_alpha(&d, &max_of_truthful(&d, 1), &SolverConfig::default()).unwrap();
        assert!((sol.alpha_star - 0.7).abs() < 1e-9);
        assert!(sol.residual.abs() < 1e-8);
        let sol = optimal_linear_alpha(&d, &max_of_truthful(&d, 2), &SolverConfig::default()).unwrap();
        assert!((sol.alpha_star - 15.0 / 17.0).abs() < 1e-9);
    }

    #[test]
    fn one_strategic_uniform() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let sol = one_strategic_threshold(&d, &g, &SolverConfig::default()).unwrap();
        let oracle = roots::bisect(|r| (1.0 - r) - (-2.0 * r).exp(), 0.6, 0.99, 1e-15, 200).unwrap().x;
        assert!((sol.r_star - oracle).abs() < 1e-9, "{} vs {oracle}", sol.r_star);
        assert!(threshold_first_order_residual(&d, &g, sol.r_star).abs() < 1e-8);
    }

    #[test]
    fn nash_uniform_sequence() {
        let d = unif();
        for (k, want) in [(2, 0.75), (3, 2.0 / 3.0), (4, 0.625), (5, 0.6)] {
            let sol = nash_threshold(&d, k, &SolverConfig::default()).unwrap();
            assert!((sol.r_star - want).abs() < 1e-9, "K={k}: {}", sol.r_star);
            assert!(sol.residual.abs() < 1e-9);
        }
    }

    #[test]
    fn revenue_equivalence_uniform() {
        let d = unif();
        let two = nash_revenue_equivalence_check(&d, 2).unwrap();
        assert!((two.seller_revenue_nash - 1.0 / 3.0).abs() < 1e-8);
        assert!((two.seller_revenue_no_reserve - 1.0 / 3.0).abs() < 1e-10);
        assert!((two.buyer_utility_nash - 1.0 / 6.0).abs() < 1e-8);
        assert!((two.buyer_utility_no_reserve - 1.0 / 6.0).abs() < 1e-10);
        let three = nash_revenue_equivalence_check(&d, 3).unwrap();
        assert!((three.seller_revenue_nash - 0.5).abs() < 1e-8);
        assert!((three.buyer_utility_nash - three.buyer_utility_no_reserve).abs() < 1e-8);
    }

    #[test]
    fn legendre_directions() {
        let p2 = Direction::legendre(2, 0.0, 1.0);
        assert!(((p2.rho)(1.0) - 1.0).abs() < 1e-15);
        assert!(((p2.rho)(0.5) + 0.5).abs() < 1e-15);
        let h = 1e-6;
        for k in 0..=4 {
            let dir = Direction::legendre(k, 0.0, 2.0);
            let fd = ((dir.rho)(0.7 + h) - (dir.rho)(0.7 - h)) / (2.0 * h);
            assert!((fd - (dir.rho_prime)(0.7)).abs() < 1e-6);
        }
    }
}
