//! Exact and sample-based reserve prices, and the seller objective curves.

use auction_lab::dist::ValueDistribution;
use auction_lab::seller::{erm_reserve, exact_reserve, linspace, revenue_objective_curve};
use auction_lab::strategy::{bid_distribution, make_thresholded, BidStrategy, ThresholdedParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> auction_lab::Result<()> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    let strategies = [
        ("truthful", BidStrategy::Truthful),
        ("linear 0.7", BidStrategy::linear(0.7)),
        ("thresholded 0.5", make_thresholded(&d, ThresholdedParams::truthful_beyond(0.5))?),
        ("thresholded 0.75", make_thresholded(&d, ThresholdedParams::truthful_beyond(0.75))?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, s) in &strategies {
        let bd = bid_distribution(&d, s);
        let exact = exact_reserve(&bd);
        let bids: Vec<f64> = (0..5_000).map(|_| bd.sample(&mut rng)).collect();
        println!(
            "{name:<18} exact {:.5} objective {:.5}   ERM from 5000 bids {:.5}",
            exact.reserve_price,
            exact.objective_at_reserve,
            erm_reserve(&bids)?
        );
        let curve = revenue_objective_curve(&bd, &linspace(bd.min_bid(), bd.max_bid(), 6));
        let pts: Vec<String> = curve.iter().map(|(b, v)| format!("({b:.3}, {v:.3})")).collect();
        println!("{:<18} {}", "", pts.join(" "));
    }
    Ok(())
}
