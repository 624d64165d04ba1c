//! Command-line front end: run experiments from JSON configs and print the
//! closed-form batch sizes and policy-regret bounds.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context};
use clap::{Parser, Subcommand, ValueEnum};

use bandit_lab::harness::{load_config, run_experiment, RunOptions};
use bandit_lab::minibatch::{
    batch_size_exp3, batch_size_exp3s, batch_size_general, policy_regret_bound, RegretRate,
};

#[derive(Parser)]
#[command(
    name = "bandit-lab",
    about = "Simulation lab for bandit learning against adaptive adversaries",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory for CSV/JSON/SVG files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
        /// Skip SVG plot generation.
        #[arg(long)]
        no_plots: bool,
    },
    /// Print the closed-form policy-regret bound
    /// tau*C*(T/tau)^q + T*m/tau + (s+1)*tau.
    Bound {
        /// Constant of the inner learner's regret rate C*J^q.
        #[arg(long = "C")]
        c: f64,
        /// Exponent of the regret rate, in (0, 1).
        #[arg(long)]
        q: f64,
        /// Horizon.
        #[arg(long = "T")]
        t: usize,
        /// Adversary memory bound.
        #[arg(long, default_value_t = 0)]
        m: usize,
        /// Competitor switch budget.
        #[arg(long, default_value_t = 0)]
        s: usize,
        /// Batch size (default: the optimal closed-form choice).
        #[arg(long)]
        tau: Option<usize>,
    },
    /// Print the closed-form batch size for a learner's regret rate.
    BatchSize {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Number of arms (exp3/exp3s).
        #[arg(long)]
        k: Option<usize>,
        /// Competitor switch budget (exp3s).
        #[arg(long)]
        s: Option<usize>,
        /// Rate constant (general).
        #[arg(long = "C")]
        c: Option<f64>,
        /// Rate exponent (general).
        #[arg(long)]
        q: Option<f64>,
        /// Horizon.
        #[arg(long = "T")]
        t: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exp3,
    Exp3s,
    General,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            jobs,
            no_plots,
        } => {
            let experiment =
                load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            let options = RunOptions {
                out_dir: out,
                jobs,
                plots: !no_plots,
            };
            let output = run_experiment(&experiment, &options)?;

            for row in &output.summary {
                println!(
                    "T={} tau={} {}: mean={} stderr={} (n={})",
                    row.horizon, row.tau, row.metric, row.mean, row.stderr, row.n
                );
            }
            for entry in &output.skipped {
                println!("skipped {}: {}", entry.metric, entry.reason);
            }
            for check in &output.bound_checks {
                println!(
                    "bound check T={} tau={}: mean={} + 3*stderr={} vs bound={} -> {}",
                    check.horizon,
                    check.tau,
                    check.mean,
                    check.stderr,
                    check.bound,
                    if check.pass { "PASS" } else { "FAIL" }
                );
            }
            println!("wrote {}", output.csv_path.display());
            println!("wrote {}", output.summary_path.display());
            for path in &output.plot_paths {
                println!("wrote {}", path.display());
            }

            let violations = output.violations();
            if violations > 0 {
                bail!("{violations} bound check(s) failed");
            }
            Ok(())
        }
        Command::Bound { c, q, t, m, s, tau } => {
            ensure!(c > 0.0 && c.is_finite(), "--C must be positive and finite");
            ensure!(q > 0.0 && q < 1.0, "--q must lie in (0, 1)");
            ensure!(t >= 1, "--T must be at least 1");
            let rate = RegretRate::new(c, q);
            let tau = tau.unwrap_or_else(|| batch_size_general(rate, t));
            ensure!(tau >= 1, "--tau must be at least 1");
            println!("tau = {tau}");
            println!("bound = {}", policy_regret_bound(rate, tau, t, m, s));
            Ok(())
        }
        Command::BatchSize {
            algo,
            k,
            s,
            c,
            q,
            t,
        } => {
            ensure!(t >= 1, "--T must be at least 1");
            let tau = match algo {
                Algo::Exp3 => {
                    let k = k.context("--k is required for --algo exp3")?;
                    ensure!(k >= 2, "--k must be at least 2");
                    batch_size_exp3(k, t)
                }
                Algo::Exp3s => {
                    let k = k.context("--k is required for --algo exp3s")?;
                    let s = s.context("--s is required for --algo exp3s")?;
                    ensure!(k >= 2, "--k must be at least 2");
                    ensure!(s >= 1, "--s must be at least 1");
                    batch_size_exp3s(k, s, t)
                }
                Algo::General => {
                    let c = c.context("--C is required for --algo general")?;
                    let q = q.context("--q is required for --algo general")?;
                    ensure!(c > 0.0 && c.is_finite(), "--C must be positive and finite");
                    ensure!(q > 0.0 && q < 1.0, "--q must lie in (0, 1)");
                    batch_size_general(RegretRate::new(c, q), t)
                }
            };
            println!("{tau}");
            Ok(())
        }
    }
}
