//! Best shading factor and best threshold for one strategic bidder, plus a
//! check of the first-variation formula against finite differences.

use auction_lab::dist::{max_of_truthful, ValueDistribution};
use auction_lab::optimize::{
    directional_derivative, finite_difference_derivative, one_strategic_threshold, optimal_linear_alpha,
    thresholded_directional_derivative, Direction, SolverConfig,
};
use auction_lab::strategy::BidStrategy;

fn main() -> auction_lab::Result<()> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    for opponents in 1..=3 {
        let g = max_of_truthful(&d, opponents);
        let alpha = optimal_linear_alpha(&d, &g, &SolverConfig::default())?;
        let thr = one_strategic_threshold(&d, &g, &SolverConfig::default())?;
        println!(
            "{opponents} truthful opponent(s): alpha* = {:.6}, r* = {:.6} (residual {:.1e})",
            alpha.alpha_star, thr.r_star, thr.residual
        );
    }

    let g = max_of_truthful(&d, 1);
    let s = BidStrategy::linear(0.6);
    for k in 0..=4 {
        let dir = Direction::legendre(k, 0.0, 1.0);
        let exact = directional_derivative(&d, &s, &dir, &g)?;
        let fd = finite_difference_derivative(&d, &s, &dir, &g);
        println!("direction P{k}: formula {exact:+.6}  finite difference {fd:+.6}");
    }

    let r = one_strategic_threshold(&d, &g, &SolverConfig::default())?.r_star;
    for k in 0..=2 {
        let v = thresholded_directional_derivative(&d, &BidStrategy::Truthful, r, &Direction::legendre(k, 0.0, 1.0), &g);
        println!("stationarity at r*, direction P{k}: {v:+.2e}");
    }
    Ok(())
}
