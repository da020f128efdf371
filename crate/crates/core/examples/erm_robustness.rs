//! Sample-based reserves against a thresholding bidder whose overbid floor
//! shrinks with the sample size.

use auction_lab::dist::ValueDistribution;
use auction_lab::robustness::{erm_experiment, summarize, EpsilonSchedule, ErmExperimentConfig};

fn main() -> auction_lab::Result<()> {
    for n in [100, 1_000, 10_000, 100_000] {
        let cfg = ErmExperimentConfig {
            distribution: ValueDistribution::uniform(0.0, 1.0)?,
            r: 0.5,
            epsilon: EpsilonSchedule::cube_root(),
            n,
            delta: 0.05,
            replications: 200,
            seed: 2024,
        };
        let res = erm_experiment(&cfg, None)?;
        let s = summarize(&res);
        println!(
            "n = {n:>6}: epsilon {:.4}, bound {:.4}, median reserve value {:.6}, violations {:.3}, infeasible {:.3}",
            res[0].epsilon, res[0].bound, s.median_x_hat, s.violation_frequency, s.infeasible_frequency
        );
    }
    Ok(())
}
