//! A bidder with uniform values against one truthful opponent, before and
//! after flattening its virtual value below the monopoly price.

use auction_lab::auction::{quadrature_outcome, AuctionConfig, Bidder, Mechanism};
use auction_lab::dist::ValueDistribution;
use auction_lab::seller::exact_reserve;
use auction_lab::strategy::{bid_distribution, h_beta, make_thresholded, BidStrategy, ThresholdedParams};

fn main() -> auction_lab::Result<()> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    let thr = make_thresholded(&d, ThresholdedParams::truthful_beyond(d.monopoly_price()))?;

    println!("{:>6} {:>10} {:>10}", "x", "bid", "h(x)");
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        println!("{x:>6.2} {:>10.5} {:>10.5}", thr.bid(x), h_beta(&d, &thr, x)?);
    }

    for (name, s) in [("truthful", BidStrategy::Truthful), ("thresholded", thr)] {
        let res = exact_reserve(&bid_distribution(&d, &s));
        let cfg = AuctionConfig::new(Mechanism::LazySp, vec![Bidder::new(d.clone(), s), Bidder::truthful(d.clone())]);
        let out = quadrature_outcome(&cfg)?;
        println!(
            "{name:<12} reserve {:.4} (value {:.4})  utility {:.6}  payment {:.6}  welfare {:.6}",
            res.reserve_price, res.reserve_value, out.utility[0], out.payment[0], out.welfare
        );
    }
    Ok(())
}
