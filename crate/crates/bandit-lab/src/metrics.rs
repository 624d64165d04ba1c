//! Exact counterfactual-replay regret metrics.
//!
//! Because every oracle in this crate is a pure function of
//! `(round, history)`, alternative action sequences can be *replayed*: we
//! re-evaluate the oracle on the sequence a competitor would have produced
//! and read off the loss it would actually have suffered, reactions
//! included. That yields two families of metrics on one transcript:
//!
//! - **standard regret** substitutes the competitor's action into the last
//!   slot of each round's loss only (`f_t(X_1..t-1, y)`), keeping the
//!   player's history as context — cheap, but blind to how the adversary
//!   would have *reacted* to the competitor;
//! - **policy regret** replays the competitor's sequence from round one
//!   (`f_t(y, …, y)`), charging the adversary's full reaction.
//!
//! Competitor classes: constant arms, piecewise-constant sequences with a
//! switch budget (searched exactly by dynamic programming over the
//! adversary's memory window), and per-round action transformations
//! (Φ-regret with constant / internal / swap map sets).

use std::collections::BTreeMap;

use serde_json::{Map as JsonMap, Value};
use thiserror::Error;

use crate::game::{Action, LossOracle, Memory, OracleError, Transcript};

/// Default cap on swap-map enumeration: `k^k` maps, refused above `k = 6`.
pub const DEFAULT_SWAP_BUDGET: u64 = 50_000;

/// Default cap on switching-competitor DP transitions.
pub const DEFAULT_DP_BUDGET: u64 = 50_000_000;

/// A regret computation could not be carried out.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    /// The switching DP exploits the declared memory bound; an unbounded
    /// oracle would force exhaustive search over all `k^T` sequences, which
    /// this crate refuses rather than approximates.
    #[error("switching-competitor search requires a finite declared memory bound")]
    UnboundedMemory,
    #[error("search needs {required} DP transitions, over the budget of {budget}")]
    DpBudgetExceeded { required: u128, budget: u64 },
    #[error("{count} swap maps over {arms} arms exceed the enumeration budget of {budget}")]
    SwapBudgetExceeded {
        arms: usize,
        count: u128,
        budget: u64,
    },
    #[error("transformation {index} is not a total map on {arms} arms")]
    InvalidTransformation { index: usize, arms: usize },
}

/// Per-round losses the oracle would charge along `actions`.
pub fn replay<O: LossOracle + ?Sized>(
    oracle: &O,
    actions: &[Action],
) -> Result<Vec<f64>, OracleError> {
    let mut losses = Vec::with_capacity(actions.len());
    for t in 1..=actions.len() {
        losses.push(oracle.eval(t, &actions[..t])?);
    }
    Ok(losses)
}

/// Standard (external) regret and its best arm: the maximum over arms `y`
/// of `Σ_t [f_t(X_1..t) − f_t(X_1..t−1, y)]`, substituting `y` into the
/// current round only. Ties break toward the lowest arm index.
pub fn standard_regret<O: LossOracle + ?Sized>(
    oracle: &O,
    transcript: &Transcript,
) -> Result<(f64, Action), OracleError> {
    let k = oracle.arm_count();
    let horizon = transcript.horizon();
    let mut sums = vec![0.0; k];
    // Rounds outer, arms inner: all k hybrid histories at round t share the
    // player's prefix, which keeps prefix-cached oracles on the fast path.
    let mut hybrid = transcript.actions.clone();
    for t in 1..=horizon {
        let real = transcript.losses[t - 1];
        for (y, sum) in sums.iter_mut().enumerate() {
            hybrid[t - 1] = y;
            *sum += real - oracle.eval(t, &hybrid[..t])?;
        }
        hybrid[t - 1] = transcript.actions[t - 1];
    }
    Ok(argmax(&sums))
}

/// Policy regret and the best constant arm: the player's total loss minus
/// the minimum over arms `y` of the full replay `Σ_t f_t(y, …, y)`. Ties
/// break toward the lowest arm index.
pub fn policy_regret<O: LossOracle + ?Sized>(
    oracle: &O,
    transcript: &Transcript,
) -> Result<(f64, Action), OracleError> {
    let k = oracle.arm_count();
    let horizon = transcript.horizon();
    let mut best = f64::INFINITY;
    let mut best_arm = 0;
    for y in 0..k {
        let constant = vec![y; horizon];
        let total: f64 = replay(oracle, &constant)?.iter().sum();
        if total < best {
            best = total;
            best_arm = y;
        }
    }
    Ok((transcript.total_loss - best, best_arm))
}

/// Exact minimum replay loss over piecewise-constant sequences with at most
/// `switches` switches, with a witness sequence (the lexicographically
/// smallest optimum).
///
/// Runs a dynamic program whose state is the last `max(m, 1)` actions plus
/// the number of switches used — sound because an `m`-memory-bounded oracle
/// reads nothing older. Oracles with unbounded memory are refused, as is
/// any instance needing more than [`DEFAULT_DP_BUDGET`] transitions.
pub fn best_switching_competitor<O: LossOracle + ?Sized>(
    oracle: &O,
    horizon: usize,
    switches: usize,
) -> Result<(f64, Vec<Action>), MetricsError> {
    best_switching_competitor_with_budget(oracle, horizon, switches, DEFAULT_DP_BUDGET)
}

/// [`best_switching_competitor`] with an explicit transition budget.
pub fn best_switching_competitor_with_budget<O: LossOracle + ?Sized>(
    oracle: &O,
    horizon: usize,
    switches: usize,
    budget: u64,
) -> Result<(f64, Vec<Action>), MetricsError> {
    let k = oracle.arm_count();
    let m = match oracle.memory() {
        Memory::Bounded(m) => m,
        Memory::Unbounded => return Err(MetricsError::UnboundedMemory),
    };
    if horizon == 0 {
        return Ok((0.0, Vec::new()));
    }
    // The state keeps one action even for oblivious oracles: switches are
    // counted against the previous round's arm.
    let window = m.max(1);

    let states = (k as u128)
        .saturating_pow(window.min(horizon) as u32)
        .saturating_mul(switches as u128 + 1);
    let required = states
        .saturating_mul(k as u128)
        .saturating_mul(horizon as u128);
    if required > budget as u128 {
        return Err(MetricsError::DpBudgetExceeded { required, budget });
    }

    // value[t]: minimal loss over rounds t+1..T, keyed by (suffix of the
    // last min(t, window) actions, switches used so far). BTreeMap keeps
    // the sweep deterministic.
    type State = (Vec<Action>, usize);
    let mut value: Vec<BTreeMap<State, f64>> = vec![BTreeMap::new(); horizon + 1];
    for suffix in suffixes(k, window.min(horizon)) {
        for used in 0..=switches {
            value[horizon].insert((suffix.clone(), used), 0.0);
        }
    }

    // The loss of playing y at round t+1 from a given suffix; the history is
    // front-padded with arm 0, which the memory bound guarantees is unread.
    let step = |suffix: &[Action], y: Action, t: usize| -> Result<f64, MetricsError> {
        let mut history = vec![0; t + 1];
        history[t - suffix.len()..t].copy_from_slice(suffix);
        history[t] = y;
        Ok(oracle.eval(t + 1, &history)?)
    };

    for t in (0..horizon).rev() {
        let mut layer = BTreeMap::new();
        for suffix in suffixes(k, window.min(t)) {
            for used in 0..=switches {
                let mut best = f64::INFINITY;
                for y in 0..k {
                    let used_next = used + switch_cost(&suffix, y, t);
                    if used_next > switches {
                        continue;
                    }
                    let next = next_suffix(&suffix, y, t + 1, window);
                    let continuation = value[t + 1][&(next, used_next)];
                    let cost = step(&suffix, y, t)? + continuation;
                    if cost < best {
                        best = cost;
                    }
                }
                layer.insert((suffix.clone(), used), best);
            }
        }
        value[t] = layer;
    }

    // Greedy forward walk over the exact value-to-go; strict improvement
    // keeps the lowest arm on ties, yielding the lexicographically smallest
    // optimal sequence.
    let mut suffix: Vec<Action> = Vec::new();
    let mut used = 0;
    let mut sequence = Vec::with_capacity(horizon);
    let mut total = 0.0;
    for t in 0..horizon {
        let mut best = f64::INFINITY;
        let mut chosen = None;
        for y in 0..k {
            let used_next = used + switch_cost(&suffix, y, t);
            if used_next > switches {
                continue;
            }
            let next = next_suffix(&suffix, y, t + 1, window);
            let cost = step(&suffix, y, t)? + value[t + 1][&(next.clone(), used_next)];
            if cost < best {
                best = cost;
                chosen = Some((y, used_next, next));
            }
        }
        let (y, used_next, next) = chosen.expect("staying on any arm is always feasible");
        total += step(&suffix, y, t)?;
        sequence.push(y);
        suffix = next;
        used = used_next;
    }
    Ok((total, sequence))
}

/// All suffixes of a given length, in lexicographic order.
fn suffixes(k: usize, len: usize) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..k).map(move |a| {
                    let mut extended = s.clone();
                    extended.push(a);
                    extended
                })
            })
            .collect();
    }
    out
}

fn switch_cost(suffix: &[Action], y: Action, t: usize) -> usize {
    if t == 0 {
        0 // the first action is free
    } else {
        usize::from(*suffix.last().expect("non-empty suffix after round 1") != y)
    }
}

fn next_suffix(suffix: &[Action], y: Action, t_next: usize, window: usize) -> Vec<Action> {
    let mut next = suffix.to_vec();
    next.push(y);
    let keep = window.min(t_next);
    next.drain(..next.len() - keep);
    next
}

/// Policy regret against the best sequence with at most `switches`
/// switches: player loss minus [`best_switching_competitor`]'s value.
pub fn policy_regret_switching<O: LossOracle + ?Sized>(
    oracle: &O,
    transcript: &Transcript,
    switches: usize,
) -> Result<f64, MetricsError> {
    let (best, _) = best_switching_competitor(oracle, transcript.horizon(), switches)?;
    Ok(transcript.total_loss - best)
}

/// An enumerable set of per-round action transformations `φ: arms → arms`,
/// each represented as a lookup table `map[x] = φ(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformationSet {
    /// The `k` constant maps; Φ-regret over them is external regret.
    Constant,
    /// The `k·(k−1)` maps that redirect one arm and fix the rest.
    Internal,
    /// All `k^k` maps (refused above the enumeration budget).
    Swap,
    /// Caller-supplied maps, compared in the given order.
    Explicit(Vec<Vec<Action>>),
}

impl TransformationSet {
    /// Short name used in reports and output files.
    pub fn label(&self) -> &'static str {
        match self {
            TransformationSet::Constant => "constant",
            TransformationSet::Internal => "internal",
            TransformationSet::Swap => "swap",
            TransformationSet::Explicit(_) => "explicit",
        }
    }

    /// Enumerate the maps over `k` arms with the default budget, in
    /// lexicographic order (Explicit keeps its caller order).
    pub fn maps(&self, k: usize) -> Result<Vec<Vec<Action>>, MetricsError> {
        self.maps_with_budget(k, DEFAULT_SWAP_BUDGET)
    }

    /// [`TransformationSet::maps`] with an explicit swap-enumeration budget.
    pub fn maps_with_budget(
        &self,
        k: usize,
        budget: u64,
    ) -> Result<Vec<Vec<Action>>, MetricsError> {
        match self {
            TransformationSet::Constant => Ok((0..k).map(|y| vec![y; k]).collect()),
            TransformationSet::Internal => {
                let mut maps = Vec::with_capacity(k * k.saturating_sub(1));
                for y in 0..k {
                    for y2 in 0..k {
                        if y2 == y {
                            continue;
                        }
                        let mut map: Vec<Action> = (0..k).collect();
                        map[y] = y2;
                        maps.push(map);
                    }
                }
                maps.sort();
                Ok(maps)
            }
            TransformationSet::Swap => {
                let count = (k as u128).saturating_pow(k as u32);
                if count > budget as u128 {
                    return Err(MetricsError::SwapBudgetExceeded {
                        arms: k,
                        count,
                        budget,
                    });
                }
                let mut maps = Vec::with_capacity(count as usize);
                for index in 0..count as usize {
                    let mut map = vec![0; k];
                    let mut rest = index;
                    for slot in (0..k).rev() {
                        map[slot] = rest % k;
                        rest /= k;
                    }
                    maps.push(map);
                }
                Ok(maps)
            }
            TransformationSet::Explicit(maps) => {
                for (index, map) in maps.iter().enumerate() {
                    if map.len() != k || map.iter().any(|&a| a >= k) {
                        return Err(MetricsError::InvalidTransformation { index, arms: k });
                    }
                }
                Ok(maps.clone())
            }
        }
    }
}

/// Φ-regret and its best map: the maximum over `φ` of
/// `Σ_t [f_t(X_1..t) − f_t(X_1..t−1, φ(X_t))]`. Ties break toward the
/// earliest map in the set's enumeration order.
pub fn phi_regret<O: LossOracle + ?Sized>(
    oracle: &O,
    transcript: &Transcript,
    set: &TransformationSet,
) -> Result<(f64, Vec<Action>), MetricsError> {
    let maps = set.maps(oracle.arm_count())?;
    let horizon = transcript.horizon();
    let mut sums = vec![0.0; maps.len()];
    let mut hybrid = transcript.actions.clone();
    for t in 1..=horizon {
        let played = transcript.actions[t - 1];
        let real = transcript.losses[t - 1];
        for (map, sum) in maps.iter().zip(sums.iter_mut()) {
            hybrid[t - 1] = map[played];
            *sum += real - oracle.eval(t, &hybrid[..t])?;
        }
        hybrid[t - 1] = played;
    }
    let (value, index) = argmax(&sums);
    Ok((value, maps[index].clone()))
}

/// Policy Φ-regret and its best map: the maximum over `φ` of the player's
/// loss minus the full replay of the transformed sequence
/// `(φ(X_1), …, φ(X_T))`. Ties break as in [`phi_regret`].
pub fn policy_phi_regret<O: LossOracle + ?Sized>(
    oracle: &O,
    transcript: &Transcript,
    set: &TransformationSet,
) -> Result<(f64, Vec<Action>), MetricsError> {
    let maps = set.maps(oracle.arm_count())?;
    let mut sums = Vec::with_capacity(maps.len());
    for map in &maps {
        let transformed: Vec<Action> = transcript.actions.iter().map(|&a| map[a]).collect();
        let total: f64 = replay(oracle, &transformed)?.iter().sum();
        sums.push(transcript.total_loss - total);
    }
    let (value, index) = argmax(&sums);
    Ok((value, maps[index].clone()))
}

/// First index of the strict maximum (earliest wins ties).
fn argmax(values: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut index = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            index = i;
        }
    }
    (best, index)
}

/// Which metrics [`compute_report`] should produce.
#[derive(Debug, Clone)]
pub struct MetricsRequest {
    pub standard: bool,
    pub policy: bool,
    /// Switch budget for the piecewise-constant competitor search.
    pub switching: Option<usize>,
    /// Transformation sets for Φ-regret (each yields both variants).
    pub phi: Vec<TransformationSet>,
}

impl Default for MetricsRequest {
    fn default() -> Self {
        MetricsRequest {
            standard: true,
            policy: true,
            switching: None,
            phi: Vec::new(),
        }
    }
}

/// Switching-competitor results within a [`RegretReport`].
#[derive(Debug, Clone)]
pub struct SwitchingReport {
    pub switches: usize,
    pub regret: f64,
    pub best_sequence: Vec<Action>,
}

/// Φ-regret results for one transformation set.
#[derive(Debug, Clone)]
pub struct PhiReport {
    pub label: &'static str,
    pub regret: f64,
    pub best_map: Vec<Action>,
    pub policy_regret: f64,
    pub policy_best_map: Vec<Action>,
}

/// A metric that was requested but cannot be computed for this oracle
/// (e.g. the switching DP against unbounded memory).
#[derive(Debug, Clone)]
pub struct SkippedMetric {
    pub metric: String,
    pub reason: String,
}

/// All regret quantities computed for one transcript against one oracle.
#[derive(Debug, Clone)]
pub struct RegretReport {
    pub player_loss: f64,
    /// Standard regret and its best arm.
    pub standard: Option<(f64, Action)>,
    /// Policy regret and its best constant arm.
    pub policy: Option<(f64, Action)>,
    pub switching: Option<SwitchingReport>,
    pub phi: Vec<PhiReport>,
    /// Metrics that were requested but refused, with reasons.
    pub skipped: Vec<SkippedMetric>,
}

impl RegretReport {
    /// Scalar metric values in report order, as `(name, value)` pairs —
    /// the rows the experiment harness writes per run.
    pub fn numeric_metrics(&self) -> Vec<(String, f64)> {
        let mut rows = vec![("player_loss".to_string(), self.player_loss)];
        if let Some((value, _)) = self.standard {
            rows.push(("standard_regret".to_string(), value));
        }
        if let Some((value, _)) = self.policy {
            rows.push(("policy_regret".to_string(), value));
        }
        if let Some(switching) = &self.switching {
            rows.push(("switching_regret".to_string(), switching.regret));
        }
        for phi in &self.phi {
            rows.push((format!("phi_{}_regret", phi.label), phi.regret));
            rows.push((
                format!("policy_phi_{}_regret", phi.label),
                phi.policy_regret,
            ));
        }
        rows
    }

    /// Flatten into a JSON object with stable scalar-or-string fields.
    pub fn to_flat_json(&self) -> JsonMap<String, Value> {
        let mut out = JsonMap::new();
        out.insert("player_loss".into(), self.player_loss.into());
        if let Some((value, arm)) = self.standard {
            out.insert("standard_regret".into(), value.into());
            out.insert("standard_best_arm".into(), (arm as u64).into());
        }
        if let Some((value, arm)) = self.policy {
            out.insert("policy_regret".into(), value.into());
            out.insert("policy_best_arm".into(), (arm as u64).into());
        }
        if let Some(switching) = &self.switching {
            out.insert("switching_s".into(), (switching.switches as u64).into());
            out.insert("switching_regret".into(), switching.regret.into());
            out.insert(
                "switching_best_sequence".into(),
                join_actions(&switching.best_sequence).into(),
            );
        }
        for phi in &self.phi {
            let label = phi.label;
            out.insert(format!("phi_{label}_regret"), phi.regret.into());
            out.insert(
                format!("phi_{label}_best_map"),
                join_actions(&phi.best_map).into(),
            );
            out.insert(
                format!("policy_phi_{label}_regret"),
                phi.policy_regret.into(),
            );
            out.insert(
                format!("policy_phi_{label}_best_map"),
                join_actions(&phi.policy_best_map).into(),
            );
        }
        for skipped in &self.skipped {
            out.insert(
                format!("skipped_{}", skipped.metric),
                skipped.reason.clone().into(),
            );
        }
        out
    }
}

fn join_actions(actions: &[Action]) -> String {
    actions
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Compute every requested metric for one transcript. Metrics that are
/// structurally unsupported for the oracle (unbounded memory, enumeration
/// budgets) are recorded in `skipped` rather than failing the report;
/// genuine evaluation errors still propagate.
pub fn compute_report<O: LossOracle + ?Sized>(
    oracle: &O,
    transcript: &Transcript,
    request: &MetricsRequest,
) -> Result<RegretReport, MetricsError> {
    let mut report = RegretReport {
        player_loss: transcript.total_loss,
        standard: None,
        policy: None,
        switching: None,
        phi: Vec::new(),
        skipped: Vec::new(),
    };
    if request.standard {
        report.standard = Some(standard_regret(oracle, transcript)?);
    }
    if request.policy {
        report.policy = Some(policy_regret(oracle, transcript)?);
    }
    if let Some(switches) = request.switching {
        match best_switching_competitor(oracle, transcript.horizon(), switches) {
            Ok((best, sequence)) => {
                report.switching = Some(SwitchingReport {
                    switches,
                    regret: transcript.total_loss - best,
                    best_sequence: sequence,
                });
            }
            Err(
                unsupported @ (MetricsError::UnboundedMemory
                | MetricsError::DpBudgetExceeded { .. }),
            ) => {
                report.skipped.push(SkippedMetric {
                    metric: "switching_regret".to_string(),
                    reason: unsupported.to_string(),
                });
            }
            Err(other) => return Err(other),
        }
    }
    for set in &request.phi {
        match phi_regret(oracle, transcript, set) {
            Ok((regret, best_map)) => {
                let (policy_value, policy_best_map) = policy_phi_regret(oracle, transcript, set)?;
                report.phi.push(PhiReport {
                    label: set.label(),
                    regret,
                    best_map,
                    policy_regret: policy_value,
                    policy_best_map,
                });
            }
            Err(unsupported @ MetricsError::SwapBudgetExceeded { .. }) => {
                report.skipped.push(SkippedMetric {
                    metric: format!("phi_{}_regret", set.label()),
                    reason: unsupported.to_string(),
                });
            }
            Err(other) => return Err(other),
        }
    }
    Ok(report)
}
