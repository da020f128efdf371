use auction_lab::auction::{expected_payment_quadrature, mc_simulate_threads, AuctionConfig, Bidder, Mechanism};
use auction_lab::dist::{max_of_truthful, ValueDistribution};
use auction_lab::optimize::{nash_residual, nash_threshold, SolverConfig};
use auction_lab::quad::integrate;
use auction_lab::seller::{erm_reserve, exact_reserve, linspace};
use auction_lab::strategy::{bid_distribution, h_beta, make_thresholded, BidStrategy, ThresholdedParams};
use auction_lab::Error;
use proptest::prelude::*;

fn value_law() -> impl Strategy<Value = ValueDistribution> {
    prop_oneof![
        (0.0..2.0f64, 0.5..3.0f64).prop_map(|(lo, w)| ValueDistribution::uniform(lo, lo + w).unwrap()),
        (-0.5..0.5f64, 0.3..1.2f64).prop_map(|(mu, s)| ValueDistribution::lognormal(mu, s).unwrap()),
        (0.5..3.0f64).prop_map(|rate| ValueDistribution::exponential(rate).unwrap()),
    ]
}

/// Uniform law with a shading strategy that stays increasing on it.
fn shaded_uniform() -> impl Strategy<Value = (ValueDistribution, BidStrategy)> {
    (0.0..1.0f64, 0.5..2.0f64, 0.2..1.0f64, 0.0..0.3f64).prop_map(|(lo, w, alpha, c)| {
        (ValueDistribution::uniform(lo, lo + w).unwrap(), BidStrategy::affine(alpha, c))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantile_inverts_cdf(d in value_law(), u in 0.001..0.999f64) {
        let x = d.quantile(u);
        prop_assert!((d.cdf(x) - u).abs() < 1e-9);
        prop_assert!((d.cdf(x) + d.sf(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone(d in value_law(), a in 0.001..0.999f64, b in 0.001..0.999f64) {
        let (x, y) = (d.quantile(a.min(b)), d.quantile(a.max(b)));
        prop_assert!(d.cdf(x) <= d.cdf(y));
        prop_assert!(x <= y);
    }

    #[test]
    fn bid_law_is_pushforward((d, s) in shaded_uniform(), u in 0.01..0.99f64) {
        let bd = bid_distribution(&d, &s);
        let x = d.quantile(u);
        prop_assert!((bd.cdf(s.bid(x)) - u).abs() < 1e-9);
        prop_assert!((bd.inverse(s.bid(x)) - x).abs() < 1e-9);
    }

    #[test]
    fn seller_virtual_value_of_bids((d, s) in shaded_uniform(), u in 0.01..0.95f64) {
        let bd = bid_distribution(&d, &s);
        let x = d.quantile(u);
        let b = s.bid(x);
        let psi_b = b - bd.sf(b) / bd.pdf(b);
        prop_assert!((psi_b - h_beta(&d, &s, x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn thresholded_is_flat_below_threshold(
        d in value_law(), q in 0.1..0.9f64, eps_frac in 0.0..0.5f64, v in 0.0..1.0f64,
    ) {
        let r = d.quantile(q).max(d.monopoly_price());
        let params = ThresholdedParams { r, epsilon: eps_frac * r, gamma: BidStrategy::Truthful };
        let s = make_thresholded(&d, params).unwrap();
        let x = d.support_lo() + v * (r - d.support_lo());
        prop_assert_eq!(h_beta(&d, &s, x).unwrap(), eps_frac * r);
        prop_assert!((s.bid(r) - r).abs() < 1e-12);
        let x2 = d.support_lo() + 0.5 * v * (r - d.support_lo());
        prop_assert!(s.bid(x2) <= s.bid(x));
    }

    #[test]
    fn thresholding_moves_reserve_to_bottom(d in value_law()) {
        let m = d.monopoly_price();
        let s = make_thresholded(&d, ThresholdedParams::truthful_beyond(m)).unwrap();
        let bd = bid_distribution(&d, &s);
        let res = exact_reserve(&bd);
        prop_assert!((res.reserve_price - bd.min_bid()).abs() <= 1e-9 * bd.min_bid().max(1.0));
    }

    #[test]
    fn thresholding_keeps_payment(lo in 0.0..1.0f64, w in 0.5..2.0f64, opponents in 1u32..4) {
        let d = ValueDistribution::uniform(lo, lo + w).unwrap();
        let g = max_of_truthful(&d, opponents);
        let m = d.monopoly_price();
        let truthful = expected_payment_quadrature(&d, &BidStrategy::Truthful, &g, m);
        let s = make_thresholded(&d, ThresholdedParams::truthful_beyond(m)).unwrap();
        let reserve = exact_reserve(&bid_distribution(&d, &s)).reserve_price;
        let thresholded = expected_payment_quadrature(&d, &s, &g, reserve);
        prop_assert!((thresholded - truthful).abs() < 1e-8, "{} vs {}", thresholded, truthful);
    }

    #[test]
    fn erm_reserve_is_best_sample_point(bids in prop::collection::vec(0.0..10.0f64, 1..60)) {
        let r = erm_reserve(&bids).unwrap();
        let n = bids.len() as f64;
        let value = |t: f64| t * bids.iter().filter(|&&b| b >= t).count() as f64 / n;
        prop_assert!(bids.contains(&r));
        prop_assert!(r <= bids.iter().copied().fold(f64::MIN, f64::max));
        for &b in &bids {
            prop_assert!(value(b) < value(r) || (value(b) == value(r) && b >= r));
        }
    }

    #[test]
    fn nash_residual_vanishes_at_solution(lo in 0.0..1.0f64, w in 0.5..2.0f64, k in 2u32..6) {
        let d = ValueDistribution::uniform(lo, lo + w).unwrap();
        match nash_threshold(&d, k, &SolverConfig::default()) {
            Ok(sol) => {
                prop_assert!(nash_residual(&d, k, sol.r_star).abs() < 1e-9);
                prop_assert!(sol.r_star > d.monopoly_price() && sol.r_star < lo + w);
            }
            // the seller already prices at the bottom, so nothing is left to flatten
            Err(Error::NoInteriorSolution(_)) => prop_assert!(w <= lo + 1e-9),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn polynomials_integrate_exactly(a in -2.0..2.0f64, w in 0.1..3.0f64, c in prop::array::uniform4(-3.0..3.0f64)) {
        let p = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let anti = |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
        let b = a + w;
        prop_assert!((integrate(p, a, b) - (anti(b) - anti(a))).abs() < 1e-10);
    }

    #[test]
    fn linspace_hits_both_ends(lo in -5.0..5.0f64, w in 0.0..5.0f64, n in 2usize..50) {
        let g = linspace(lo, lo + w, n);
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(g[0], lo);
        prop_assert_eq!(g[n - 1], lo + w);
        prop_assert!(g.windows(2).all(|p| p[0] <= p[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn simulation_ignores_thread_count(seed in any::<u64>(), threads in 1usize..5) {
        let d = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let s = make_thresholded(&d, ThresholdedParams::truthful_beyond(0.5)).unwrap();
        let cfg = AuctionConfig::new(Mechanism::LazySp, vec![Bidder::new(d.clone(), s), Bidder::truthful(d)]);
        let a = mc_simulate_threads(&cfg, 70_000, seed, Some(threads)).unwrap();
        let b = mc_simulate_threads(&cfg, 70_000, seed, Some(1)).unwrap();
        prop_assert_eq!(a, b);
    }
}
