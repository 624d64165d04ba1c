//! Experiment harness: JSON configs in, CSV / JSON / SVG out.
//!
//! A config names an oracle, a learner, an optional mini-batching wrapper,
//! a list of horizons, and a seed range. The harness runs every
//! `(horizon, seed)` cell in a worker pool, computes the requested regret
//! metrics per run, and writes:
//!
//! - `runs.csv` — one row per `(run, metric)`, schema
//!   `run,seed,T,tau,metric,value`;
//! - `summary.json` — per-`(T, metric)` mean / std / stderr plus optional
//!   theoretical-bound checks;
//! - `plot_<metric>.svg` — mean ± stderr versus horizon (log-log when the
//!   values allow it).
//!
//! Everything is deterministic: run `i` uses seed `base + i`, results are
//! ordered by `(T, run)` regardless of scheduling, and identical configs
//! produce byte-identical outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversaries::{
    Exp3Mimic, FirstActionTrap, ObliviousTable, RandomMemoryBounded, SwitchingCost, TableError,
};
use crate::game::{run_game, GameError, Learner, LossOracle};
use crate::learners::{
    exp3_tuned_gamma, exp3s_default_alpha, exp3s_tuned_gamma, Exp3, Exp3S, FixedAction,
    UniformRandom,
};
use crate::metrics::{compute_report, MetricsError, MetricsRequest, TransformationSet};
use crate::minibatch::{
    batch_size_exp3, batch_size_exp3s, batch_size_general, policy_regret_bound, wrap, wrap_known_m,
    RegretRate,
};
use crate::plot::{Plot, Series};

/// Anything that can go wrong while loading, validating, or running an
/// experiment.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn invalid(message: impl Into<String>) -> HarnessError {
    HarnessError::Invalid(message.into())
}

/// Complete description of one experiment (JSON on disk).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Horizons to sweep, strictly increasing.
    pub horizons: Vec<usize>,
    pub seeds: SeedSpec,
    pub oracle: OracleSpec,
    pub learner: LearnerSpec,
    #[serde(default)]
    pub wrapper: WrapperSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    /// When present, mean policy regret is checked against the closed-form
    /// bound for this rate at each horizon.
    #[serde(default)]
    pub bound: Option<BoundSpec>,
}

/// Player seeds: either `{"count": n, "base": b}` (run `i` uses `b + i`)
/// or an explicit `{"list": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Range {
        count: usize,
        #[serde(default)]
        base: u64,
    },
    List {
        list: Vec<u64>,
    },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Range { count, base } => (0..*count).map(|i| base + i as u64).collect(),
            SeedSpec::List { list } => list.clone(),
        }
    }
}

/// Which adversary to run against. The adversary's own randomness is
/// seeded explicitly and independently of the player seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Inline loss table: row `t` lists the per-arm losses of round `t`.
    Oblivious { rows: Vec<Vec<f64>> },
    /// Loss table read from a CSV file.
    ObliviousCsv { path: PathBuf },
    /// Uniform-random loss table sized to each run's horizon.
    ObliviousRandom { arms: usize, seed: u64 },
    /// Random base table plus a penalty added whenever the arm changes.
    SwitchingCost { arms: usize, seed: u64, cost: f64 },
    /// Round one is free; every later round costs 1 iff the very first
    /// action hit the trap arm.
    FirstActionTrap { arms: usize, trap: usize },
    /// Simulates an exponential-weights learner over the player's history
    /// and charges the probability it would place on the played arm.
    /// `gamma` defaults to the horizon-tuned value.
    Exp3Mimic {
        arms: usize,
        #[serde(default)]
        gamma: Option<f64>,
    },
    /// Pseudorandom losses determined by the last `memory + 1` actions.
    RandomMemory {
        arms: usize,
        memory: usize,
        seed: u64,
    },
}

impl OracleSpec {
    /// Arm count when it is knowable without touching the filesystem.
    fn arms_hint(&self) -> Option<usize> {
        match self {
            OracleSpec::Oblivious { rows } => rows.first().map(Vec::len),
            OracleSpec::ObliviousCsv { .. } => None,
            OracleSpec::ObliviousRandom { arms, .. }
            | OracleSpec::SwitchingCost { arms, .. }
            | OracleSpec::FirstActionTrap { arms, .. }
            | OracleSpec::Exp3Mimic { arms, .. }
            | OracleSpec::RandomMemory { arms, .. } => Some(*arms),
        }
    }

    /// Instantiate the oracle for one horizon.
    pub fn build(&self, horizon: usize) -> Result<Box<dyn LossOracle>, HarnessError> {
        Ok(match self {
            OracleSpec::Oblivious { rows } => Box::new(ObliviousTable::validated(rows.clone())?),
            OracleSpec::ObliviousCsv { path } => Box::new(ObliviousTable::from_csv_path(path)?),
            OracleSpec::ObliviousRandom { arms, seed } => {
                Box::new(ObliviousTable::random(*arms, horizon, *seed))
            }
            OracleSpec::SwitchingCost { arms, seed, cost } => Box::new(SwitchingCost::new(
                ObliviousTable::random(*arms, horizon, *seed),
                *cost,
            )),
            OracleSpec::FirstActionTrap { arms, trap } => {
                Box::new(FirstActionTrap::new(*arms, *trap))
            }
            OracleSpec::Exp3Mimic { arms, gamma } => {
                let gamma = gamma.unwrap_or_else(|| exp3_tuned_gamma(*arms, horizon));
                Box::new(Exp3Mimic::new(*arms, gamma))
            }
            OracleSpec::RandomMemory { arms, memory, seed } => {
                Box::new(RandomMemoryBounded::new(*memory, *arms, *seed))
            }
        })
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match self {
            OracleSpec::Oblivious { .. } | OracleSpec::ObliviousCsv { .. } => {}
            OracleSpec::ObliviousRandom { arms, .. } | OracleSpec::RandomMemory { arms, .. } => {
                if *arms == 0 {
                    return Err(invalid("oracle.arms must be at least 1"));
                }
            }
            OracleSpec::SwitchingCost { arms, cost, .. } => {
                if *arms == 0 {
                    return Err(invalid("oracle.arms must be at least 1"));
                }
                if !(0.0..=1.0).contains(cost) {
                    return Err(invalid("oracle.cost must lie in [0, 1]"));
                }
            }
            OracleSpec::FirstActionTrap { arms, trap } => {
                if trap >= arms {
                    return Err(invalid("oracle.trap must name one of the arms"));
                }
            }
            OracleSpec::Exp3Mimic { arms, gamma } => {
                if *arms < 2 {
                    return Err(invalid("oracle.arms must be at least 2"));
                }
                if let Some(g) = gamma {
                    if !(*g > 0.0 && *g <= 1.0) {
                        return Err(invalid("oracle.gamma must lie in (0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Which player to run. Exploration parameters default to the
/// horizon-tuned values, computed from the number of *inner* rounds
/// (`⌊T/τ⌋` under a wrapper).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Exp3 {
        arms: usize,
        #[serde(default)]
        gamma: Option<f64>,
    },
    Exp3s {
        arms: usize,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "default_switches")]
        switches: usize,
    },
    Fixed {
        arms: usize,
        action: usize,
    },
    UniformRandom {
        arms: usize,
    },
}

fn default_switches() -> usize {
    1
}

impl LearnerSpec {
    fn arms(&self) -> usize {
        match self {
            LearnerSpec::Exp3 { arms, .. }
            | LearnerSpec::Exp3s { arms, .. }
            | LearnerSpec::Fixed { arms, .. }
            | LearnerSpec::UniformRandom { arms } => *arms,
        }
    }

    /// Instantiate the learner, tuning defaults for `inner_rounds` plays.
    pub fn build(&self, inner_rounds: usize) -> Box<dyn Learner> {
        match self {
            LearnerSpec::Exp3 { arms, gamma } => match gamma {
                Some(g) => Box::new(Exp3::new(*arms, *g)),
                None => Box::new(Exp3::tuned(*arms, inner_rounds)),
            },
            LearnerSpec::Exp3s {
                arms,
                gamma,
                alpha,
                switches,
            } => {
                let gamma =
                    gamma.unwrap_or_else(|| exp3s_tuned_gamma(*arms, *switches, inner_rounds));
                let alpha = alpha.unwrap_or_else(|| exp3s_default_alpha(inner_rounds));
                Box::new(Exp3S::new(*arms, gamma, alpha))
            }
            LearnerSpec::Fixed { arms, action } => Box::new(FixedAction::new(*arms, *action)),
            LearnerSpec::UniformRandom { arms } => Box::new(UniformRandom::new(*arms)),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match self {
            LearnerSpec::Exp3 { arms, gamma } => {
                if *arms < 2 {
                    return Err(invalid("learner.arms must be at least 2"));
                }
                if let Some(g) = gamma {
                    if !(*g > 0.0 && *g <= 1.0) {
                        return Err(invalid("learner.gamma must lie in (0, 1]"));
                    }
                }
            }
            LearnerSpec::Exp3s {
                arms,
                gamma,
                alpha,
                switches,
            } => {
                if *arms < 2 {
                    return Err(invalid("learner.arms must be at least 2"));
                }
                if let Some(g) = gamma {
                    if !(*g > 0.0 && *g <= 1.0) {
                        return Err(invalid("learner.gamma must lie in (0, 1]"));
                    }
                }
                if let Some(a) = alpha {
                    if !(*a >= 0.0 && a.is_finite()) {
                        return Err(invalid("learner.alpha must be finite and non-negative"));
                    }
                }
                if *switches == 0 {
                    return Err(invalid("learner.switches must be at least 1"));
                }
            }
            LearnerSpec::Fixed { arms, action } => {
                if action >= arms {
                    return Err(invalid("learner.action must name one of the arms"));
                }
            }
            LearnerSpec::UniformRandom { arms } => {
                if *arms == 0 {
                    return Err(invalid("learner.arms must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

/// Mini-batching wrapper around the learner, if any.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WrapperSpec {
    #[default]
    None,
    /// Fixed batch size; the inner learner sees each batch's mean loss.
    Plain { tau: usize },
    /// Fixed batch size; the first `memory` losses of each batch are
    /// dropped before averaging (requires `tau > memory`).
    KnownMemory { tau: usize, memory: usize },
    /// Batch size recomputed per horizon from a closed-form formula.
    Auto {
        formula: FormulaSpec,
        #[serde(default)]
        known_memory: Option<usize>,
    },
}

/// Closed-form batch-size rule used by [`WrapperSpec::Auto`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum FormulaSpec {
    Exp3 { arms: usize },
    Exp3s { arms: usize, switches: usize },
    General { c: f64, q: f64 },
}

impl FormulaSpec {
    pub fn tau(&self, horizon: usize) -> usize {
        match self {
            FormulaSpec::Exp3 { arms } => batch_size_exp3(*arms, horizon),
            FormulaSpec::Exp3s { arms, switches } => batch_size_exp3s(*arms, *switches, horizon),
            FormulaSpec::General { c, q } => batch_size_general(RegretRate::new(*c, *q), horizon),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match self {
            FormulaSpec::Exp3 { arms } => {
                if *arms < 2 {
                    return Err(invalid("wrapper.formula.arms must be at least 2"));
                }
            }
            FormulaSpec::Exp3s { arms, switches } => {
                if *arms < 2 {
                    return Err(invalid("wrapper.formula.arms must be at least 2"));
                }
                if *switches == 0 {
                    return Err(invalid("wrapper.formula.switches must be at least 1"));
                }
            }
            FormulaSpec::General { c, q } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(invalid("wrapper.formula.c must be positive and finite"));
                }
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(invalid("wrapper.formula.q must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }
}

impl WrapperSpec {
    /// The batch size in effect at `horizon` (1 when unwrapped).
    pub fn resolve_tau(&self, horizon: usize) -> Result<usize, HarnessError> {
        match self {
            WrapperSpec::None => Ok(1),
            WrapperSpec::Plain { tau } | WrapperSpec::KnownMemory { tau, .. } => Ok(*tau),
            WrapperSpec::Auto {
                formula,
                known_memory,
            } => {
                let tau = formula.tau(horizon);
                if let Some(memory) = known_memory {
                    if tau <= *memory {
                        return Err(invalid(format!(
                            "auto batch size {tau} at horizon {horizon} does not exceed the \
                             memory bound {memory}"
                        )));
                    }
                }
                Ok(tau)
            }
        }
    }

    fn wrap_learner(
        &self,
        inner: Box<dyn Learner>,
        tau: usize,
    ) -> Result<Box<dyn Learner>, HarnessError> {
        match self {
            WrapperSpec::None => Ok(inner),
            WrapperSpec::Plain { .. } => Ok(Box::new(wrap(inner, tau))),
            WrapperSpec::KnownMemory { memory, .. }
            | WrapperSpec::Auto {
                known_memory: Some(memory),
                ..
            } => Ok(Box::new(
                wrap_known_m(inner, tau, *memory).map_err(|e| invalid(e.to_string()))?,
            )),
            WrapperSpec::Auto {
                known_memory: None, ..
            } => Ok(Box::new(wrap(inner, tau))),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match self {
            WrapperSpec::None => Ok(()),
            WrapperSpec::Plain { tau } => {
                if *tau == 0 {
                    return Err(invalid("wrapper.tau must be at least 1"));
                }
                Ok(())
            }
            WrapperSpec::KnownMemory { tau, memory } => {
                if tau <= memory {
                    return Err(invalid("wrapper.tau must exceed wrapper.memory"));
                }
                Ok(())
            }
            WrapperSpec::Auto { formula, .. } => formula.validate(),
        }
    }
}

/// Which regret metrics to compute per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default = "default_true")]
    pub standard: bool,
    #[serde(default = "default_true")]
    pub policy: bool,
    /// Switch budget for the piecewise-constant competitor search.
    #[serde(default)]
    pub switching: Option<usize>,
    /// Transformation families for Φ-regret.
    #[serde(default)]
    pub phi: Vec<PhiKind>,
}

fn default_true() -> bool {
    true
}

impl Default for MetricsSpec {
    fn default() -> Self {
        MetricsSpec {
            standard: true,
            policy: true,
            switching: None,
            phi: Vec::new(),
        }
    }
}

impl MetricsSpec {
    pub fn request(&self) -> MetricsRequest {
        MetricsRequest {
            standard: self.standard,
            policy: self.policy,
            switching: self.switching,
            phi: self.phi.iter().map(|kind| kind.set()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    Constant,
    Internal,
    Swap,
}

impl PhiKind {
    pub fn set(self) -> TransformationSet {
        match self {
            PhiKind::Constant => TransformationSet::Constant,
            PhiKind::Internal => TransformationSet::Internal,
            PhiKind::Swap => TransformationSet::Swap,
        }
    }
}

/// Regret rate (and adversary parameters) for the closed-form
/// policy-regret bound check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub c: f64,
    pub q: f64,
    #[serde(default)]
    pub memory: usize,
    #[serde(default)]
    pub switches: usize,
}

impl BoundSpec {
    pub fn rate(&self) -> RegretRate {
        RegretRate::new(self.c, self.q)
    }
}

/// Load and validate a config file.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parse and validate config JSON; parse errors carry the offending
/// field's path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(deserializer)
        .map_err(|e| HarnessError::Parse(format!("{}: {}", e.path(), e.inner())))?;
    validate_config(&config)?;
    Ok(config)
}

/// Structural checks beyond what serde enforces.
pub fn validate_config(config: &ExperimentConfig) -> Result<(), HarnessError> {
    if config.horizons.is_empty() {
        return Err(invalid("horizons must be non-empty"));
    }
    if config.horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("horizons must be strictly increasing"));
    }
    if config.horizons[0] == 0 {
        return Err(invalid("horizons must be at least 1"));
    }
    if config.seeds.seeds().is_empty() {
        return Err(invalid("seeds must name at least one run"));
    }
    config.oracle.validate()?;
    config.learner.validate()?;
    config.wrapper.validate()?;
    if let (Some(oracle_arms), learner_arms) = (config.oracle.arms_hint(), config.learner.arms()) {
        if oracle_arms != learner_arms {
            return Err(invalid(format!(
                "learner plays {learner_arms} arms but the oracle scores {oracle_arms}"
            )));
        }
    }
    if let Some(bound) = &config.bound {
        if !(bound.c > 0.0 && bound.c.is_finite()) {
            return Err(invalid("bound.c must be positive and finite"));
        }
        if !(bound.q > 0.0 && bound.q < 1.0) {
            return Err(invalid("bound.q must lie in (0, 1)"));
        }
    }
    Ok(())
}

/// Where and how to run an experiment.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the default pool.
    pub jobs: Option<usize>,
    pub plots: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("out"),
            jobs: None,
            plots: true,
        }
    }
}

/// One completed run's scalar metrics.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub horizon: usize,
    pub tau: usize,
    pub metrics: Vec<(String, f64)>,
    skipped: Vec<(String, String)>,
}

/// Monte-Carlo aggregate for one `(horizon, metric)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub tau: usize,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub n: usize,
    /// Closed-form bound, for metrics it applies to.
    pub bound: Option<f64>,
}

/// Result of checking one horizon's mean policy regret against the bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheck {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub tau: usize,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    /// True when `mean + 3·stderr ≤ bound`.
    pub pass: bool,
}

/// A metric that was requested but refused for this oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub metric: String,
    pub reason: String,
}

/// Everything an experiment produced.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub skipped: Vec<SkippedEntry>,
    pub bound_checks: Vec<BoundCheck>,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
}

impl ExperimentOutput {
    /// Number of failed bound checks.
    pub fn violations(&self) -> usize {
        self.bound_checks.iter().filter(|c| !c.pass).count()
    }
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    name: &'a str,
    config: &'a ExperimentConfig,
    rows: &'a [SummaryRow],
    skipped: &'a [SkippedEntry],
    bound_checks: &'a [BoundCheck],
}

/// Run every `(horizon, seed)` cell of the experiment and write the output
/// files. Deterministic given the config: scheduling never affects results.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentOutput, HarnessError> {
    validate_config(config)?;
    let seeds = config.seeds.seeds();

    // Oracles and batch sizes are fixed per horizon; oracles are shared
    // across that horizon's runs (evaluation is thread-safe).
    let mut per_horizon: Vec<(usize, usize, Box<dyn LossOracle>)> = Vec::new();
    for &horizon in &config.horizons {
        let tau = config.wrapper.resolve_tau(horizon)?;
        per_horizon.push((horizon, tau, config.oracle.build(horizon)?));
    }

    let request = config.metrics.request();
    let run_cell = |horizon: usize,
                    tau: usize,
                    oracle: &dyn LossOracle,
                    run: usize,
                    seed: u64|
     -> Result<RunRecord, HarnessError> {
        let inner_rounds = (horizon / tau).max(1);
        let mut learner = config
            .wrapper
            .wrap_learner(config.learner.build(inner_rounds), tau)?;
        let transcript = run_game(&mut learner, oracle, horizon, seed)?;
        let report = compute_report(oracle, &transcript, &request)?;
        Ok(RunRecord {
            run,
            seed,
            horizon,
            tau,
            metrics: report.numeric_metrics(),
            skipped: report
                .skipped
                .into_iter()
                .map(|s| (s.metric, s.reason))
                .collect(),
        })
    };

    let execute = || -> Result<Vec<RunRecord>, HarnessError> {
        per_horizon
            .iter()
            .flat_map(|(horizon, tau, oracle)| {
                seeds
                    .iter()
                    .enumerate()
                    .map(move |(run, &seed)| (*horizon, *tau, oracle.as_ref(), run, seed))
            })
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(horizon, tau, oracle, run, seed)| run_cell(horizon, tau, oracle, run, seed))
            .collect()
    };
    let mut records = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| invalid(format!("cannot build a {jobs}-thread pool: {e}")))?
            .install(execute),
        None => execute(),
    }?;
    records.sort_by_key(|r| (r.horizon, r.run));

    fs::create_dir_all(&options.out_dir).map_err(|source| HarnessError::Io {
        path: options.out_dir.clone(),
        source,
    })?;
    let write = |path: &Path, text: &str| -> Result<(), HarnessError> {
        fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    };

    // Per-run CSV.
    let mut csv = String::from("run,seed,T,tau,metric,value\n");
    for record in &records {
        for (metric, value) in &record.metrics {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                record.run, record.seed, record.horizon, record.tau, metric, value
            ));
        }
    }
    let csv_path = options.out_dir.join("runs.csv");
    write(&csv_path, &csv)?;

    // Aggregate by (horizon, metric); BTreeMap fixes the row order.
    let mut cells: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    let mut taus: BTreeMap<usize, usize> = BTreeMap::new();
    let mut skipped: BTreeMap<String, String> = BTreeMap::new();
    for record in &records {
        taus.insert(record.horizon, record.tau);
        for (metric, value) in &record.metrics {
            cells
                .entry((record.horizon, metric.clone()))
                .or_default()
                .push(*value);
        }
        for (metric, reason) in &record.skipped {
            skipped
                .entry(metric.clone())
                .or_insert_with(|| reason.clone());
        }
    }
    let mut summary = Vec::with_capacity(cells.len());
    for ((horizon, metric), values) in cells {
        let tau = taus[&horizon];
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let stderr = std / (n as f64).sqrt();
        let bound = config
            .bound
            .as_ref()
            .filter(|_| metric == "policy_regret")
            .map(|b| policy_regret_bound(b.rate(), tau, horizon, b.memory, b.switches));
        summary.push(SummaryRow {
            horizon,
            tau,
            metric,
            mean,
            std,
            stderr,
            n,
            bound,
        });
    }
    let skipped: Vec<SkippedEntry> = skipped
        .into_iter()
        .map(|(metric, reason)| SkippedEntry { metric, reason })
        .collect();

    let bound_checks = match &config.bound {
        Some(bound) => compare_to_bound(&summary, bound.rate(), bound.memory, bound.switches),
        None => Vec::new(),
    };

    let summary_path = options.out_dir.join("summary.json");
    let document = SummaryDocument {
        name: &config.name,
        config,
        rows: &summary,
        skipped: &skipped,
        bound_checks: &bound_checks,
    };
    let json = serde_json::to_string_pretty(&document).expect("report serialization is infallible");
    write(&summary_path, &(json + "\n"))?;

    // One plot per metric: mean ± stderr vs horizon, log-log when possible.
    let mut plot_paths = Vec::new();
    if options.plots {
        let metric_names: BTreeSet<&str> = summary.iter().map(|r| r.metric.as_str()).collect();
        for metric in metric_names {
            let rows: Vec<&SummaryRow> = summary.iter().filter(|r| r.metric == metric).collect();
            let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.horizon as f64, r.mean)).collect();
            let errors: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
            let mut plot = Plot::new(format!("{}: {}", config.name, metric), "T", metric);
            plot.log_log = true;
            plot.series
                .push(Series::with_errors("mean ± stderr", points, errors));
            if rows.iter().any(|r| r.bound.is_some()) {
                let bound_points: Vec<(f64, f64)> = rows
                    .iter()
                    .filter_map(|r| r.bound.map(|b| (r.horizon as f64, b)))
                    .collect();
                plot.series
                    .push(Series::new("bound", bound_points).dashed());
            }
            let path = options.out_dir.join(format!("plot_{metric}.svg"));
            write(&path, &plot.to_svg())?;
            plot_paths.push(path);
        }
    }

    Ok(ExperimentOutput {
        records,
        summary,
        skipped,
        bound_checks,
        csv_path,
        summary_path,
        plot_paths,
    })
}

/// Check each horizon's mean policy regret against the closed-form bound:
/// pass iff `mean + 3·stderr ≤ bound`.
pub fn compare_to_bound(
    summary: &[SummaryRow],
    rate: RegretRate,
    memory: usize,
    switches: usize,
) -> Vec<BoundCheck> {
    summary
        .iter()
        .filter(|row| row.metric == "policy_regret")
        .map(|row| {
            let bound = policy_regret_bound(rate, row.tau, row.horizon, memory, switches);
            BoundCheck {
                horizon: row.horizon,
                tau: row.tau,
                mean: row.mean,
                stderr: row.stderr,
                bound,
                pass: row.mean + 3.0 * row.stderr <= bound,
            }
        })
        .collect()
}
