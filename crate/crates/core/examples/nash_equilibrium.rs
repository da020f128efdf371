//! Symmetric thresholding equilibrium among K uniform bidders.

use auction_lab::dist::ValueDistribution;
use auction_lab::optimize::{nash_revenue_equivalence_check, nash_threshold, SolverConfig};

fn main() -> auction_lab::Result<()> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    println!("{:>3} {:>10} {:>14} {:>14} {:>14} {:>14}", "K", "r*", "revenue", "revenue (no r)", "utility", "utility (no r)");
    for k in 2..=6 {
        let r = nash_threshold(&d, k, &SolverConfig::default())?.r_star;
        let eq = nash_revenue_equivalence_check(&d, k)?;
        println!(
            "{k:>3} {r:>10.6} {:>14.8} {:>14.8} {:>14.8} {:>14.8}",
            eq.seller_revenue_nash, eq.seller_revenue_no_reserve, eq.buyer_utility_nash, eq.buyer_utility_no_reserve
        );
    }
    Ok(())
}
