//! Concrete loss oracles, from oblivious tables to fully adaptive
//! constructions.
//!
//! Each oracle is a pure function of `(round, history)` once built; any
//! randomness is fixed by an explicit seed at construction time. The
//! gallery covers the qualitative spectrum:
//!
//! - [`ObliviousTable`] — memory 0, the classic adversarial-bandit setting;
//! - [`SwitchingCost`] — memory 1, an oblivious table plus a friction charge
//!   whenever the player changes arms;
//! - [`RandomMemoryBounded`] — an arbitrary-`m` seeded test adversary;
//! - [`FirstActionTrap`] — unbounded memory, making standard regret and
//!   policy regret diverge as far as they possibly can;
//! - [`Exp3Mimic`] — unbounded memory, simulating an EXP3 learner's own
//!   computation and quoting its action probabilities back as losses.

use std::path::Path;
use std::sync::Mutex;

use rand::Rng;
use thiserror::Error;

use crate::game::{check_action, check_history, Action, LossOracle, Memory, OracleError};
use crate::learners::{exp3_distribution, exp3_update};
use crate::rng::{mix, seeded_rng, unit_interval};

/// A loss table failed validation while being built or parsed.
#[derive(Debug, Error)]
pub enum TableError {
    #[error("loss table must have at least one row")]
    Empty,
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("loss {value} at row {row}, arm {arm} is outside [0, 1]")]
    OutOfRange { row: usize, arm: usize, value: f64 },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An oblivious adversary: a fixed `T_max × k` table of losses where round
/// `t` charges `table[t][x_t]`, independent of every earlier action.
#[derive(Debug, Clone)]
pub struct ObliviousTable {
    rows: Vec<Vec<f64>>,
}

impl ObliviousTable {
    /// Build from explicit rows (row `t` lists the `k` per-arm losses).
    /// Panics on an empty, ragged, or out-of-range table; use the CSV
    /// constructors for fallible input.
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        match Self::validated(rows) {
            Ok(table) => table,
            Err(e) => panic!("invalid loss table: {e}"),
        }
    }

    /// Build a table of independent uniform-`[0, 1)` losses, reproducible
    /// from `seed`. Extending `t_max` with the same seed preserves the
    /// existing rows.
    pub fn random(k: usize, t_max: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let rows = (0..t_max)
            .map(|_| (0..k).map(|_| rng.gen::<f64>()).collect())
            .collect();
        Self::new(rows)
    }

    /// Parse CSV text: one row per round, `k` comma-separated losses.
    /// Blank lines are ignored.
    pub fn from_csv_str(text: &str) -> Result<Self, TableError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| TableError::Parse {
                        row: i + 1,
                        message: format!("{e}: {cell:?}"),
                    })
                })
                .collect::<Result<Vec<f64>, TableError>>()?;
            rows.push(row);
        }
        Self::validated(rows)
    }

    /// Load a CSV table from disk; see [`ObliviousTable::from_csv_str`].
    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, TableError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Fallible counterpart of [`ObliviousTable::new`] for untrusted input.
    pub fn validated(rows: Vec<Vec<f64>>) -> Result<Self, TableError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(TableError::Empty);
        }
        let k = rows[0].len();
        for (t, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(TableError::RaggedRow {
                    row: t + 1,
                    expected: k,
                    got: row.len(),
                });
            }
            for (arm, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) || value.is_nan() {
                    return Err(TableError::OutOfRange {
                        row: t + 1,
                        arm,
                        value,
                    });
                }
            }
        }
        Ok(ObliviousTable { rows })
    }

    /// Number of rounds the table covers.
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    /// Table lookup for round `t` and arm `a`, with bounds reported as
    /// oracle errors.
    fn entry(&self, t: usize, a: Action) -> Result<f64, OracleError> {
        if t > self.rows.len() {
            return Err(OracleError::HorizonExceeded {
                round: t,
                horizon: self.rows.len(),
            });
        }
        Ok(self.rows[t - 1][a])
    }
}

impl LossOracle for ObliviousTable {
    fn arm_count(&self) -> usize {
        self.rows[0].len()
    }

    fn memory(&self) -> Memory {
        Memory::Bounded(0)
    }

    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError> {
        check_history(t, history, self.arm_count(), 1)?;
        self.entry(t, history[t - 1])
    }
}

/// An oblivious table plus a friction charge: switching arms between
/// consecutive rounds adds `cost`, clamped so losses stay within `[0, 1]`.
/// The loss reads the current and previous action only, so this is the
/// canonical 1-memory adversary.
#[derive(Debug, Clone)]
pub struct SwitchingCost {
    base: ObliviousTable,
    cost: f64,
}

impl SwitchingCost {
    /// Charge `cost ∈ [0, 1]` on top of `base` whenever round `t ≥ 2` plays
    /// a different arm than round `t − 1`.
    pub fn new(base: ObliviousTable, cost: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&cost),
            "switching cost {cost} outside [0, 1]"
        );
        SwitchingCost { base, cost }
    }
}

impl LossOracle for SwitchingCost {
    fn arm_count(&self) -> usize {
        self.base.arm_count()
    }

    fn memory(&self) -> Memory {
        Memory::Bounded(1)
    }

    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError> {
        check_history(t, history, self.arm_count(), 2)?;
        let mut loss = self.base.entry(t, history[t - 1])?;
        if t >= 2 && history[t - 1] != history[t - 2] {
            loss = (loss + self.cost).min(1.0);
        }
        Ok(loss)
    }
}

/// The starkest separation between standard and policy regret: round 1 is
/// free, and every later round charges 1 if and only if the player's *first*
/// action was the trap arm. Hybrid competitors that only revise the current
/// round's action can never escape the first-round commitment, so standard
/// regret stays at zero while policy regret grows linearly.
#[derive(Debug, Clone)]
pub struct FirstActionTrap {
    k: usize,
    trap: Action,
}

impl FirstActionTrap {
    /// Trap arm `trap` in a `k`-arm game.
    pub fn new(k: usize, trap: Action) -> Self {
        assert!(trap < k, "trap arm {trap} out of range for {k} arms");
        FirstActionTrap { k, trap }
    }
}

impl LossOracle for FirstActionTrap {
    fn arm_count(&self) -> usize {
        self.k
    }

    fn memory(&self) -> Memory {
        Memory::Unbounded
    }

    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError> {
        // The only entry this oracle ever reads is the opening action.
        check_history(t, history, self.k, 0)?;
        check_action(history[0], self.k)?;
        if t == 1 {
            Ok(0.0)
        } else {
            Ok(if history[0] == self.trap { 1.0 } else { 0.0 })
        }
    }
}

/// Simulated EXP3 state: the weights after digesting a given action prefix.
#[derive(Debug)]
struct MimicCache {
    prefix: Vec<Action>,
    weights: Vec<f64>,
}

/// An adversary that runs the player's own EXP3 computation against them:
/// it simulates an EXP3 instance forward along the observed history and
/// charges, at each round, the probability that simulated EXP3 assigns to
/// the arm actually played.
///
/// The simulated instance is fed its own assigned losses (at step `s` it
/// observes `p[h_s]`, the value it just charged), which makes the
/// construction self-contained and deterministic in `(t, history)`. Against
/// an EXP3 player with the same `gamma` the simulation tracks the player's
/// distribution exactly, steering it toward uniform and pinning the
/// per-round loss near `1/k`.
#[derive(Debug)]
pub struct Exp3Mimic {
    k: usize,
    gamma: f64,
    cache: Mutex<MimicCache>,
}

impl Exp3Mimic {
    /// Mimic an EXP3 instance over `k` arms with exploration rate
    /// `gamma ∈ (0, 1]`.
    pub fn new(k: usize, gamma: f64) -> Self {
        assert!(k >= 2, "need at least 2 arms, got {k}");
        assert!(gamma > 0.0 && gamma <= 1.0, "gamma {gamma} outside (0, 1]");
        Exp3Mimic {
            k,
            gamma,
            cache: Mutex::new(MimicCache {
                prefix: Vec::new(),
                weights: vec![1.0; k],
            }),
        }
    }
}

impl LossOracle for Exp3Mimic {
    fn arm_count(&self) -> usize {
        self.k
    }

    fn memory(&self) -> Memory {
        Memory::Unbounded
    }

    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError> {
        check_history(t, history, self.k, 1)?;
        let simulated = &history[..t - 1];

        // Replaying the simulation from scratch costs O(t·k); along a growing
        // trajectory (a game, or a replay sweep) the previous call's state is
        // a prefix of ours and the resume is O(k) amortized. The cache is
        // pure memoization: hit or miss, the same weights come out.
        let mut cache = self.cache.lock().unwrap();
        if !simulated.starts_with(&cache.prefix) {
            cache.prefix.clear();
            cache.weights = vec![1.0; self.k];
        }
        for &action in &simulated[cache.prefix.len()..] {
            // Entries are validated as the simulation digests them; the
            // cache only ever holds fully validated prefixes.
            check_action(action, self.k)?;
            let probs = exp3_distribution(&cache.weights, self.gamma);
            // The simulated learner observes the loss the mimic assigned it:
            // the probability it placed on the arm that was played.
            exp3_update(&mut cache.weights, self.gamma, action, probs[action]);
            cache.prefix.push(action);
        }

        let probs = exp3_distribution(&cache.weights, self.gamma);
        Ok(probs[history[t - 1]])
    }
}

/// A seeded, stateless test adversary with an exact memory bound: the loss
/// is a fixed hash of `(seed, t, last min(t, m + 1) actions)` mapped into
/// `[0, 1)`. Useful for property tests that need arbitrary-`m` oracles with
/// no structure beyond the declared memory.
#[derive(Debug, Clone)]
pub struct RandomMemoryBounded {
    k: usize,
    m: usize,
    seed: u64,
}

impl RandomMemoryBounded {
    /// An `m`-memory-bounded oracle over `k` arms, reproducible from `seed`.
    pub fn new(m: usize, k: usize, seed: u64) -> Self {
        assert!(k >= 1, "need at least 1 arm");
        RandomMemoryBounded { k, m, seed }
    }
}

impl LossOracle for RandomMemoryBounded {
    fn arm_count(&self) -> usize {
        self.k
    }

    fn memory(&self) -> Memory {
        Memory::Bounded(self.m)
    }

    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError> {
        check_history(t, history, self.k, self.m + 1)?;
        let window = (self.m + 1).min(t);
        let mut state = mix(self.seed, t as u64);
        for &a in &history[t - window..] {
            state = mix(state, a as u64);
        }
        Ok(unit_interval(state))
    }
}
