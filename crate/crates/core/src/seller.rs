//! Reserve prices set by the seller, from a known bid law or from a sample.

use serde::{Deserialize, Serialize};

use crate::auction::expected_payment_quadrature;
use crate::dist::{CompetitionDistribution, ValueDistribution};
use crate::error::{Error, Result};
use crate::roots;
use crate::strategy::{BidDistribution, BidStrategy};

const RESERVE_GRID: usize = 4096;
const TIE_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveResult {
    pub reserve_price: f64,
    /// Value whose bid equals the reserve price.
    pub reserve_value: f64,
    pub objective_at_reserve: f64,
}

/// Monopoly price of a bid law: the smallest maximizer of `b (1 - F_B(b))`.
pub fn exact_reserve(bd: &BidDistribution) -> ReserveResult {
    let obj = |b: f64| b * bd.sf(b);
    let (lo, hi) = (bd.min_bid(), bd.max_bid());
    let (grid_best, _) = roots::grid_argmax(&obj, lo, hi, RESERVE_GRID, TIE_REL);
    let step = (hi - lo) / (RESERVE_GRID - 1) as f64;
    let slope = |b: f64| bd.sf(b) - b * bd.pdf(b);
    let reserve_price = roots::polish_peak(&obj, slope, grid_best, step, lo, hi, TIE_REL);
    let objective_at_reserve = obj(reserve_price);
    ReserveResult { reserve_price, reserve_value: bd.inverse(reserve_price), objective_at_reserve }
}

/// Empirical monopoly price. A bid equal to the reserve clears it, so the
/// candidates are the sample points themselves.
pub fn erm_reserve(bids: &[f64]) -> Result<f64> {
    if bids.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = bids.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut best = (sorted[0], f64::NEG_INFINITY);
    let mut i = 0;
    while i < n {
        let b = sorted[i];
        let v = b * (n - i) as f64 / n as f64;
        if v > best.1 {
            best = (b, v);
        }
        while i < n && sorted[i] == b {
            i += 1;
        }
    }
    Ok(best.0)
}

/// `b (1 - F_B(b))` on a grid of bids.
pub fn revenue_objective_curve(bd: &BidDistribution, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter().map(|&b| (b, b * bd.sf(b))).collect()
}

/// Expected payment of one bidder as a function of its own reserve price.
pub fn payment_curve(
    d: &ValueDistribution,
    s: &BidStrategy,
    g: &CompetitionDistribution,
    grid: &[f64],
) -> Vec<(f64, f64)> {
    grid.iter().map(|&r| (r, expected_payment_quadrature(d, s, g, r))).collect()
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::max_of_truthful;
    use crate::strategy::{bid_distribution, make_thresholded, ThresholdedParams};

    fn unif() -> ValueDistribution {
        ValueDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn thr(r: f64) -> BidStrategy {
        make_thresholded(&unif(), ThresholdedParams::truthful_beyond(r)).unwrap()
    }

    #[test]
    fn exact_reserve_examples() {
        let d = unif();
        let t = exact_reserve(&bid_distribution(&d, &BidStrategy::Truthful));
        assert!((t.reserve_price - 0.5).abs() < 1e-9);
        assert!((t.reserve_value - 0.5).abs() < 1e-9);

        let t = exact_reserve(&bid_distribution(&d, &thr(0.5)));
        assert!((t.reserve_price - 0.25).abs() < 1e-12);
        assert!(t.reserve_value.abs() < 1e-12);

        let t = exact_reserve(&bid_distribution(&d, &thr(0.75)));
        assert!((t.reserve_price - 0.1875).abs() < 1e-12);
        assert!(t.reserve_value.abs() < 1e-12);
    }

    #[test]
    fn erm_examples() {
        assert_eq!(erm_reserve(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(erm_reserve(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(erm_reserve(&[5.0, 5.0, 5.0]).unwrap(), 5.0);
        assert_eq!(erm_reserve(&[0.3]).unwrap(), 0.3);
        assert!(matches!(erm_reserve(&[]), Err(Error::EmptySample)));
        // 1 * 1 ties 2 * 0.5: the smaller candidate wins
        assert_eq!(erm_reserve(&[1.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn objective_curve_examples() {
        let d = unif();
        let c = revenue_objective_curve(&bid_distribution(&d, &BidStrategy::Truthful), &[0.5]);
        assert!((c[0].1 - 0.25).abs() < 1e-15);
        let bd = bid_distribution(&d, &thr(0.5));
        let c = revenue_objective_curve(&bd, &linspace(0.25, 0.5, 51));
        assert!((c[0].1 - 0.25).abs() < 1e-12);
        assert!(c.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    }

    #[test]
    fn payment_curve_examples() {
        let d = unif();
        let g = max_of_truthful(&d, 1);
        let grid = linspace(0.0, 1.0, 101);
        let curve = payment_curve(&d, &BidStrategy::Truthful, &g, &grid);
        let best = curve.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best.0 - 0.5).abs() < 1e-12);

        let thr_pay = payment_curve(&d, &thr(0.5), &g, &[0.25])[0].1;
        assert!((thr_pay - best.1).abs() < 1e-8);
        assert!((thr_pay - 5.0 / 24.0).abs() < 1e-8);
        assert_eq!(payment_curve(&d, &BidStrategy::Truthful, &g, &[1.5])[0].1, 0.0);
    }
}
