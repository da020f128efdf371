//! Lazy, eager and Myerson auctions with a thresholding bidder, by
//! simulation and by quadrature.

use auction_lab::auction::{mc_simulate, quadrature_outcome, AuctionConfig, Bidder, Mechanism};
use auction_lab::dist::ValueDistribution;
use auction_lab::strategy::{make_thresholded, BidStrategy, ThresholdedParams};

fn main() -> auction_lab::Result<()> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    let thr = make_thresholded(&d, ThresholdedParams::truthful_beyond(0.5))?;
    let rounds = 400_000;
    for mech in [Mechanism::LazySp, Mechanism::EagerSp, Mechanism::Myerson] {
        for (name, s) in [("truthful", BidStrategy::Truthful), ("thresholded", thr.clone())] {
            let cfg = AuctionConfig::new(mech, vec![Bidder::new(d.clone(), s), Bidder::truthful(d.clone())]);
            let mc = mc_simulate(&cfg, rounds, 42)?;
            let exact = quadrature_outcome(&cfg)?;
            println!(
                "{mech:?} {name:<12} utility {:.5} ± {:.5} (exact {:.5})  revenue {:.5} ± {:.5} (exact {:.5})",
                mc.utility[0],
                mc.stderr.utility[0],
                exact.utility[0],
                mc.seller_revenue,
                mc.stderr.seller_revenue,
                exact.seller_revenue
            );
        }
    }
    Ok(())
}
