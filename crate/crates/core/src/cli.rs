//! Command-line front end.
//!
//! Every command writes its files into one output directory (`--out`, or
//! `AUCTIONLAB_OUT` when set) together with a `manifest.json` describing the
//! run. Floating-point CSV fields carry 17 significant digits.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::auction::{
    expected_utility_quadrature, mc_simulate_threads, myerson_uplift_closed_form, quadrature_outcome, AuctionConfig,
    AuctionConfigSpec, Bidder, Mechanism, OutcomeStats,
};
use crate::dist::{max_of_truthful, CompetitionDistribution, ValueDistribution};
use crate::optimize::{
    nash_revenue_equivalence_check, nash_threshold, one_strategic_threshold, optimal_linear_alpha, SolverConfig,
};
use crate::robustness::{erm_experiment, summarize, EpsilonSchedule, ErmExperimentConfig, ErmResult};
use crate::seller::{exact_reserve, linspace, payment_curve, revenue_objective_curve};
use crate::strategy::{make_thresholded, BidStrategy, StrategySpec, ThresholdedParams};

pub const OUT_ENV: &str = "AUCTIONLAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "auction-lab", version, about = "Bid shading against revenue-maximizing sellers")]
pub struct Cli {
    /// Output directory (overridden by AUCTIONLAB_OUT)
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads for Monte Carlo and ERM replications
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute a table of reference numbers and compare
    Reproduce {
        #[arg(long, value_enum)]
        table: Table,
    },
    /// Monte Carlo play of an auction config, next to its exact expectation
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve a first-order condition for the config's first bidder
    Solve {
        #[arg(value_enum)]
        what: SolveKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Seller objective and payment curves for every bidder's strategy
    Curves {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 201)]
        grid_size: usize,
    },
    /// ERM reserve experiment against a thresholding bidder
    Erm {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Table {
    UniformOneStrategic,
    LognormalOneStrategic,
    NashUniform,
    MyersonUplift,
    ErmRobustness,
}

impl Table {
    fn id(self) -> &'static str {
        match self {
            Self::UniformOneStrategic => "uniform_one_strategic",
            Self::LognormalOneStrategic => "lognormal_one_strategic",
            Self::NashUniform => "nash_uniform",
            Self::MyersonUplift => "myerson_uplift",
            Self::ErmRobustness => "erm_robustness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveKind {
    Linear,
    Threshold,
    Nash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub git_like_version: String,
}

/// One line of a reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproRow {
    pub quantity: String,
    pub paper_value: f64,
    pub computed_value: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ReproRow {
    fn close(quantity: &str, paper_value: f64, computed_value: f64, tolerance: f64) -> Self {
        let abs_error = (computed_value - paper_value).abs();
        Self {
            quantity: quantity.into(),
            paper_value,
            computed_value,
            abs_error,
            tolerance,
            pass: abs_error <= tolerance,
        }
    }

    /// Passes when `computed_value <= limit`.
    fn at_most(quantity: &str, limit: f64, computed_value: f64) -> Self {
        Self {
            quantity: quantity.into(),
            paper_value: limit,
            computed_value,
            abs_error: (computed_value - limit).max(0.0),
            tolerance: 0.0,
            pass: computed_value <= limit,
        }
    }

    /// Passes when the condition holds; encoded as 1 or 0.
    fn holds(quantity: &str, condition: bool) -> Self {
        let v = if condition { 1.0 } else { 0.0 };
        Self { quantity: quantity.into(), paper_value: 1.0, computed_value: v, abs_error: 1.0 - v, tolerance: 0.0, pass: condition }
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn uniform_rows() -> crate::Result<Vec<ReproRow>> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    let g = max_of_truthful(&d, 1);
    let m = d.monopoly_price();
    let truthful = expected_utility_quadrature(&d, &BidStrategy::Truthful, &g, m);
    let thr = make_thresholded(&d, ThresholdedParams::truthful_beyond(m))?;
    let thresholded = expected_utility_quadrature(&d, &thr, &g, d.support_lo());
    let r_star = one_strategic_threshold(&d, &g, &SolverConfig::default())?.r_star;
    let best = make_thresholded(&d, ThresholdedParams::truthful_beyond(r_star))?;
    let optimal = expected_utility_quadrature(&d, &best, &g, d.support_lo());
    let alpha = optimal_linear_alpha(&d, &g, &SolverConfig::default())?.alpha_star;

    let pair = |s: BidStrategy| AuctionConfig::new(Mechanism::LazySp, vec![Bidder::new(d.clone(), s), Bidder::truthful(d.clone())]);
    let w0 = quadrature_outcome(&pair(BidStrategy::Truthful))?.welfare;
    let w1 = quadrature_outcome(&pair(thr))?.welfare;
    Ok(vec![
        ReproRow::close("truthful_utility", 1.0 / 12.0, truthful, 1e-6),
        ReproRow::close("thresholded_monopoly_utility", 0.1316, thresholded, 5e-4),
        ReproRow::close("thresholded_increase_fraction", 0.57, thresholded / truthful - 1.0, 0.01),
        ReproRow::close("optimal_threshold", 0.8, r_star, 0.01),
        ReproRow::close("optimal_threshold_utility", 0.1468, optimal, 5e-4),
        ReproRow::close("optimal_threshold_increase_fraction", 0.76, optimal / truthful - 1.0, 0.01),
        ReproRow::close("optimal_linear_alpha", 0.7, alpha, 1e-6),
        ReproRow::close("welfare_truthful", 0.583, w0, 1e-3),
        ReproRow::close("welfare_thresholded", 0.632, w1, 1e-3),
    ])
}

/// Lognormal bidder against one truthful lognormal opponent.
pub fn lognormal_utilities() -> crate::Result<(f64, f64, f64)> {
    let d = ValueDistribution::lognormal(0.25, 1.0)?;
    let g = max_of_truthful(&d, 1);
    let m = d.monopoly_price();
    let lo = d.support_lo();
    let truthful = expected_utility_quadrature(&d, &BidStrategy::Truthful, &g, m);
    let thr = make_thresholded(&d, ThresholdedParams::truthful_beyond(m))?;
    let thresholded = expected_utility_quadrature(&d, &thr, &g, lo);
    let no_reserve = expected_utility_quadrature(&d, &BidStrategy::Truthful, &g, lo);
    Ok((truthful, thresholded, no_reserve))
}

fn lognormal_rows() -> crate::Result<Vec<ReproRow>> {
    let (t, th, nr) = lognormal_utilities()?;
    Ok(vec![
        ReproRow::close("truthful_utility", 0.791, t, 0.01),
        ReproRow::close("thresholded_utility", 1.025, th, 0.01),
        ReproRow::close("no_reserve_utility", 1.100, nr, 0.01),
        ReproRow::close("thresholded_increase_fraction", 0.295, th / t - 1.0, 0.03),
    ])
}

fn nash_rows() -> crate::Result<Vec<ReproRow>> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    let mut rows = Vec::new();
    for (k, want) in [(2u32, 0.75), (3, 2.0 / 3.0), (4, 0.625), (5, 0.6)] {
        let r = nash_threshold(&d, k, &SolverConfig::default())?.r_star;
        rows.push(ReproRow::close(&format!("nash_threshold_k{k}"), want, r, 1e-8));
    }
    let two = nash_revenue_equivalence_check(&d, 2)?;
    rows.push(ReproRow::close("nash_revenue_k2", 1.0 / 3.0, two.seller_revenue_nash, 1e-8));
    rows.push(ReproRow::close("nash_buyer_utility_k2", 1.0 / 6.0, two.buyer_utility_nash, 1e-8));
    let three = nash_revenue_equivalence_check(&d, 3)?;
    rows.push(ReproRow::close("nash_revenue_k3", 0.5, three.seller_revenue_nash, 1e-8));
    rows.push(ReproRow::close(
        "nash_buyer_utility_k3",
        three.buyer_utility_no_reserve,
        three.buyer_utility_nash,
        1e-8,
    ));
    Ok(rows)
}

fn myerson_rows() -> crate::Result<Vec<ReproRow>> {
    let d = ValueDistribution::uniform(0.0, 1.0)?;
    let thr = make_thresholded(&d, ThresholdedParams::truthful_beyond(d.monopoly_price()))?;
    let cfg = |mech, s: BidStrategy| AuctionConfig::new(mech, vec![Bidder::new(d.clone(), s), Bidder::truthful(d.clone())]);
    let my_thr = quadrature_outcome(&cfg(Mechanism::Myerson, thr.clone()))?.utility[0];
    let my_tru = quadrature_outcome(&cfg(Mechanism::Myerson, BidStrategy::Truthful))?.utility[0];
    let eager_thr = quadrature_outcome(&cfg(Mechanism::EagerSp, thr))?.utility[0];
    Ok(vec![
        ReproRow::close("myerson_thresholded_utility", 7.0 / 48.0, my_thr, 1e-6),
        ReproRow::close("myerson_uplift_closed_form_k2", 1.0 / 16.0, myerson_uplift_closed_form(&d, 2)?, 1e-9),
        ReproRow::close("myerson_uplift_quadrature_k2", 1.0 / 16.0, my_thr - my_tru, 1e-6),
        ReproRow::close("eager_thresholded_utility", 7.0 / 48.0, eager_thr, 1e-6),
    ])
}

/// Uniform values, threshold at 0.5, `delta = 0.05`, `epsilon_n = n^(-1/3)`.
pub fn erm_reference_config(n: usize, replications: usize, seed: u64) -> crate::Result<ErmExperimentConfig> {
    Ok(ErmExperimentConfig {
        distribution: ValueDistribution::uniform(0.0, 1.0)?,
        r: 0.5,
        epsilon: EpsilonSchedule::cube_root(),
        n,
        delta: 0.05,
        replications,
        seed,
    })
}

fn erm_rows(threads: Option<usize>) -> crate::Result<(Vec<ReproRow>, Vec<ErmResult>)> {
    let mut all = Vec::new();
    let mut medians = Vec::new();
    let mut rows = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let res = erm_experiment(&erm_reference_config(n, 200, 2024)?, threads)?;
        let s = summarize(&res);
        if n == 10_000 {
            rows.push(ReproRow::at_most("violation_frequency_n1e4", 0.10, s.violation_frequency));
        }
        medians.push(s.median_x_hat);
        all.extend(res);
    }
    rows.push(ReproRow::holds("median_x_hat_decreases_1e3_to_1e4", medians[1] < medians[0]));
    rows.push(ReproRow::holds("median_x_hat_decreases_1e4_to_1e5", medians[2] < medians[1]));
    Ok((rows, all))
}

/// Rows of a reproduction table; the ERM table also returns its raw replications.
pub fn reproduce_table(table: Table, threads: Option<usize>) -> crate::Result<(Vec<ReproRow>, Vec<ErmResult>)> {
    Ok(match table {
        Table::UniformOneStrategic => (uniform_rows()?, Vec::new()),
        Table::LognormalOneStrategic => (lognormal_rows()?, Vec::new()),
        Table::NashUniform => (nash_rows()?, Vec::new()),
        Table::MyersonUplift => (myerson_rows()?, Vec::new()),
        Table::ErmRobustness => erm_rows(threads)?,
    })
}

fn write_repro_csv(path: &Path, rows: &[ReproRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["quantity", "paper_value", "computed_value", "abs_error", "tolerance", "pass"])?;
    for r in rows {
        w.write_record([
            r.quantity.clone(),
            fmt_f(r.paper_value),
            fmt_f(r.computed_value),
            fmt_f(r.abs_error),
            fmt_f(r.tolerance),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_erm_csv(path: &Path, results: &[ErmResult]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["replication", "n", "epsilon", "x_hat", "bound", "feasible", "violated"])?;
    for r in results {
        w.write_record([
            r.replication.to_string(),
            r.n.to_string(),
            fmt_f(r.epsilon),
            fmt_f(r.x_hat),
            fmt_f(r.bound),
            r.feasible.to_string(),
            r.violated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_pairs(path: &Path, header: [&str; 2], rows: &[(f64, f64)]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([fmt_f(*a), fmt_f(*b)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_auction(path: &Path) -> anyhow::Result<(AuctionConfigSpec, AuctionConfig)> {
    let text = read_text(path)?;
    let spec: AuctionConfigSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing auction config {}", path.display()))?;
    let cfg = spec.build().with_context(|| format!("invalid auction config {}", path.display()))?;
    Ok((spec, cfg))
}

#[derive(Debug, Default, Deserialize)]
struct SolverSection {
    #[serde(default)]
    solver: Option<SolverConfig>,
}

/// Output of `solve`: the solution plus which bidder it applies to.
#[derive(Debug, Serialize)]
#[serde(untagged)]
enum SolveOutput {
    Linear(crate::optimize::LinearSolution),
    Threshold(crate::optimize::ThresholdSolution),
}

fn competition_for_first(cfg: &AuctionConfig) -> CompetitionDistribution {
    CompetitionDistribution::MaxOfStrategies(cfg.bid_distributions().into_iter().skip(1).collect())
}

#[derive(Debug, Serialize)]
struct SimulateOutput<'a> {
    config: &'a AuctionConfigSpec,
    rounds: u64,
    seed: u64,
    monte_carlo: OutcomeStats,
    quadrature: Option<OutcomeStats>,
}

fn strategy_label(spec: &StrategySpec) -> &'static str {
    match spec {
        StrategySpec::Truthful => "truthful",
        StrategySpec::Linear { .. } => "linear",
        StrategySpec::Affine { .. } => "affine",
        StrategySpec::Thresholded { .. } => "thresholded",
        StrategySpec::FromTarget { .. } => "from_target",
        StrategySpec::Tabulated { .. } => "tabulated",
    }
}

fn output_dir(cli: &Cli) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cli.out.clone(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs a parsed command line. Returns the process exit status.
pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let out = output_dir(&cli);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifest = RunManifest {
        command: String::new(),
        config_path: None,
        seed: None,
        output_dir: out.clone(),
        git_like_version: format!("auction-lab {}", env!("CARGO_PKG_VERSION")),
    };
    let mut status = 0u8;
    match &cli.command {
        Command::Reproduce { table } => {
            manifest.command = format!("reproduce {}", table.id());
            let (rows, erm) = reproduce_table(*table, cli.threads)?;
            write_repro_csv(&out.join(format!("reproduce_{}.csv", table.id())), &rows)?;
            if !erm.is_empty() {
                write_erm_csv(&out.join("erm.csv"), &erm)?;
            }
            for r in &rows {
                println!(
                    "{:<40} reference {:>12.6} computed {:>12.6} {}",
                    r.quantity,
                    r.paper_value,
                    r.computed_value,
                    if r.pass { "ok" } else { "FAIL" }
                );
            }
            if rows.iter().any(|r| !r.pass) {
                status = 1;
            }
        }
        Command::Simulate { config, rounds, seed } => {
            manifest.command = "simulate".into();
            manifest.config_path = Some(config.clone());
            manifest.seed = Some(*seed);
            if *rounds == 0 {
                bail!("--rounds must be at least 1");
            }
            let (spec, cfg) = load_auction(config)?;
            let mc = mc_simulate_threads(&cfg, *rounds, *seed, cli.threads)?;
            // exact values use the same stage-one reserves as the simulation
            let quadrature = quadrature_outcome(&cfg).ok().filter(|_| {
                !matches!(cfg.reserve_policy, crate::auction::ReservePolicy::ErmPerBidder { .. })
            });
            let output = SimulateOutput { config: &spec, rounds: *rounds, seed: *seed, monte_carlo: mc, quadrature };
            write_json(&out.join("outcome.json"), &output)?;
            println!("wrote {}", out.join("outcome.json").display());
        }
        Command::Solve { what, config } => {
            manifest.command = format!("solve {what:?}").to_lowercase();
            manifest.config_path = Some(config.clone());
            let text = read_text(config)?;
            let (_, cfg) = load_auction(config)?;
            let solver = serde_json::from_str::<SolverSection>(&text)?.solver.unwrap_or_default();
            let d = cfg.bidders[0].dist.clone();
            let result = match what {
                SolveKind::Linear => SolveOutput::Linear(optimal_linear_alpha(&d, &competition_for_first(&cfg), &solver)?),
                SolveKind::Threshold => {
                    SolveOutput::Threshold(one_strategic_threshold(&d, &competition_for_first(&cfg), &solver)?)
                }
                SolveKind::Nash => SolveOutput::Threshold(nash_threshold(&d, cfg.bidders.len() as u32, &solver)?),
            };
            let name = format!("solve_{what:?}.json").to_lowercase();
            write_json(&out.join(&name), &result)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Curves { config, grid_size } => {
            manifest.command = "curves".into();
            manifest.config_path = Some(config.clone());
            let (spec, cfg) = load_auction(config)?;
            let bds = cfg.bid_distributions();
            let mut used: HashMap<&str, usize> = HashMap::new();
            for (i, b) in cfg.bidders.iter().enumerate() {
                let label = strategy_label(&spec.bidders[i].strategy);
                let seen = used.entry(label).or_insert(0);
                let name = if *seen == 0 { label.to_string() } else { format!("{label}_{i}") };
                *seen += 1;
                let bd = &bds[i];
                let grid = linspace(bd.min_bid(), bd.max_bid(), *grid_size);
                write_pairs(
                    &out.join(format!("curves_{name}.csv")),
                    ["reserve", "objective"],
                    &revenue_objective_curve(bd, &grid),
                )?;
                let g = CompetitionDistribution::MaxOfStrategies(
                    bds.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect(),
                );
                write_pairs(
                    &out.join(format!("curves_{name}_payment.csv")),
                    ["reserve", "payment"],
                    &payment_curve(&b.dist, &b.strategy, &g, &grid),
                )?;
                let res = exact_reserve(bd);
                println!("{name}: reserve price {:.6}, reserve value {:.6}", res.reserve_price, res.reserve_value);
            }
        }
        Command::Erm { config, seed } => {
            manifest.command = "erm".into();
            manifest.config_path = Some(config.clone());
            let text = read_text(config)?;
            let mut ecfg: ErmExperimentConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing ERM config {}", config.display()))?;
            if let Some(s) = seed {
                ecfg.seed = *s;
            }
            manifest.seed = Some(ecfg.seed);
            let res = erm_experiment(&ecfg, cli.threads)?;
            write_erm_csv(&out.join("erm.csv"), &res)?;
            let s = summarize(&res);
            println!(
                "replications {} violation frequency {:.4} infeasible frequency {:.4} median x_hat {:.6}",
                s.replications, s.violation_frequency, s.infeasible_frequency, s.median_x_hat
            );
        }
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(status)
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
