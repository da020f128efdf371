//! Lognormal values (mu = 0.25, sigma = 1) against one truthful opponent.

use auction_lab::auction::{mc_simulate, AuctionConfig, Bidder, Mechanism, ReservePolicy};
use auction_lab::cli::lognormal_utilities;
use auction_lab::dist::ValueDistribution;
use auction_lab::strategy::{make_thresholded, BidStrategy, ThresholdedParams};

fn main() -> auction_lab::Result<()> {
    let d = ValueDistribution::lognormal(0.25, 1.0)?;
    let (truthful, thresholded, no_reserve) = lognormal_utilities()?;
    println!("monopoly price {:.5}", d.monopoly_price());
    println!("exact: truthful {truthful:.5}, thresholded {thresholded:.5}, no reserve {no_reserve:.5}");

    let thr = make_thresholded(&d, ThresholdedParams::truthful_beyond(d.monopoly_price()))?;
    let pair = |s: BidStrategy| AuctionConfig::new(Mechanism::LazySp, vec![Bidder::new(d.clone(), s), Bidder::truthful(d.clone())]);
    let runs = [
        ("truthful", pair(BidStrategy::Truthful)),
        ("thresholded", pair(thr)),
        ("no reserve", pair(BidStrategy::Truthful).with_reserve_policy(ReservePolicy::None)),
    ];
    for (name, cfg) in runs {
        let o = mc_simulate(&cfg, 500_000, 9)?;
        println!("simulated {name:<12} utility {:.5} ± {:.5}", o.utility[0], o.stderr.utility[0]);
    }
    Ok(())
}
