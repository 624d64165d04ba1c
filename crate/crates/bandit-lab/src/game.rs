//! Game protocol: actions, loss oracles, learners, and the round loop.
//!
//! A game is a repeated interaction over rounds t = 1..T. Each round the
//! learner commits to an arm, the adversary's loss oracle evaluates the
//! full action history (adaptive adversaries may react to everything the
//! player has done so far), and the learner observes only the loss it
//! incurred — bandit feedback, never the whole loss function.

use rand::RngCore;
use thiserror::Error;

use crate::rng::seeded_rng;

/// Arm identifier in `[0, k)` for a game with `k` arms.
pub type Action = usize;

/// How far back a loss oracle's output may depend on the action history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Memory {
    /// The loss at round `t` depends only on the last `m + 1` actions
    /// (the current action plus `m` rounds of reaction). `Bounded(0)` is an
    /// oblivious adversary.
    Bounded(usize),
    /// The loss may depend on the entire history.
    Unbounded,
}

impl Memory {
    /// Number of trailing history entries (current action included) that can
    /// influence the loss, or `None` when the whole history matters.
    pub fn window(self) -> Option<usize> {
        match self {
            Memory::Bounded(m) => Some(m + 1),
            Memory::Unbounded => None,
        }
    }

    /// The memory bound `m` for bounded oracles.
    pub fn bound(self) -> Option<usize> {
        match self {
            Memory::Bounded(m) => Some(m),
            Memory::Unbounded => None,
        }
    }
}

/// A loss-oracle evaluation failed.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// Round indices are 1-based; round 0 never exists.
    #[error("round indices start at 1")]
    ZeroRound,
    /// The history handed to `eval` must contain exactly one action per
    /// round played so far, the current round included.
    #[error("round {round} requires a history of length {round}, got {len}")]
    HistoryLength { round: usize, len: usize },
    /// A history entry does not name a valid arm.
    #[error("action {action} out of range for {arms} arms")]
    ActionOutOfRange { action: usize, arms: usize },
    /// A table-backed oracle was asked beyond its preallocated horizon.
    #[error("round {round} exceeds the oracle's table horizon {horizon}")]
    HorizonExceeded { round: usize, horizon: usize },
}

/// A deterministic adversary: a pure loss function of the round index and
/// the player's full action history.
///
/// Implementations must be pure — repeated calls with equal `(t, history)`
/// return equal values — and must honor their declared [`Memory`]: a
/// `Bounded(m)` oracle returns equal losses for any two histories that agree
/// on their last `min(t, m + 1)` entries. Any internal caching must be
/// invisible through `eval`.
pub trait LossOracle: Send + Sync {
    /// Number of arms the oracle scores.
    fn arm_count(&self) -> usize;

    /// Declared dependence of losses on past actions.
    fn memory(&self) -> Memory;

    /// Loss in `[0, 1]` for round `t ≥ 1` given the history
    /// `(x_1, …, x_t)` of length exactly `t`.
    ///
    /// Implementations validate the entries they read; actions outside the
    /// oracle's memory window are ignored entirely, valid arms or not.
    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError>;
}

impl<O: LossOracle + ?Sized> LossOracle for Box<O> {
    fn arm_count(&self) -> usize {
        (**self).arm_count()
    }
    fn memory(&self) -> Memory {
        (**self).memory()
    }
    fn eval(&self, t: usize, history: &[Action]) -> Result<f64, OracleError> {
        (**self).eval(t, history)
    }
}

/// Shared argument validation for oracle implementations.
///
/// Checks the round/shape contract, then verifies that the `window` most
/// recent actions — the entries the calling oracle actually reads — are
/// valid arms. Older entries are deliberately left unexamined: an oracle
/// with a bounded memory is indifferent to the forgotten prefix, malformed
/// or not, and scanning it would make every evaluation cost the full
/// history length instead of the window.
pub(crate) fn check_history(
    t: usize,
    history: &[Action],
    arms: usize,
    window: usize,
) -> Result<(), OracleError> {
    if t == 0 {
        return Err(OracleError::ZeroRound);
    }
    if history.len() != t {
        return Err(OracleError::HistoryLength {
            round: t,
            len: history.len(),
        });
    }
    for &a in &history[t - window.min(t)..] {
        if a >= arms {
            return Err(OracleError::ActionOutOfRange { action: a, arms });
        }
    }
    Ok(())
}

/// Range check for a single action an oracle reads outside its trailing
/// window (e.g. the opening round's play).
pub(crate) fn check_action(action: Action, arms: usize) -> Result<(), OracleError> {
    if action >= arms {
        return Err(OracleError::ActionOutOfRange { action, arms });
    }
    Ok(())
}

/// A stateful action-choosing policy under bandit feedback.
///
/// `choose` and `feedback` strictly alternate, starting with `choose`; the
/// learner sees only the loss of the arm it played. Given equal state and an
/// equal RNG stream, `choose` is deterministic.
pub trait Learner: Send {
    /// Number of arms the learner plays over.
    fn arm_count(&self) -> usize;

    /// Commit to an arm for the current round.
    fn choose(&mut self, rng: &mut dyn RngCore) -> Action;

    /// Receive the loss in `[0, 1]` incurred by the arm just chosen.
    fn feedback(&mut self, loss: f64);
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn arm_count(&self) -> usize {
        (**self).arm_count()
    }
    fn choose(&mut self, rng: &mut dyn RngCore) -> Action {
        (**self).choose(rng)
    }
    fn feedback(&mut self, loss: f64) {
        (**self).feedback(loss)
    }
}

/// The realized record of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    /// Arm played at each round, in order.
    pub actions: Vec<Action>,
    /// Loss incurred at each round, in order.
    pub losses: Vec<f64>,
    /// Seed of the RNG stream the learner drew from.
    pub seed: u64,
    /// Sum of `losses`.
    pub total_loss: f64,
}

impl Transcript {
    /// Number of rounds played.
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

/// A game could not be played to completion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("the horizon must be at least 1")]
    ZeroHorizon,
    #[error("learner plays {learner} arms but the oracle scores {oracle}")]
    ArmCountMismatch { learner: usize, oracle: usize },
    /// The oracle broke its contract by returning a loss outside `[0, 1]`.
    #[error("oracle returned loss {loss} outside [0, 1] at round {round}")]
    LossOutOfRange { round: usize, loss: f64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Play one `T`-round game and record the transcript.
///
/// Each round: the learner chooses an arm from a ChaCha stream seeded with
/// `seed`, the oracle scores the history so far, and the learner receives
/// that loss as feedback. Identical `(learner, oracle, T, seed)` inputs
/// reproduce the transcript bit for bit. The learner should be freshly
/// initialized; it is left in its end-of-game state for inspection.
pub fn run_game<L, O>(
    learner: &mut L,
    oracle: &O,
    horizon: usize,
    seed: u64,
) -> Result<Transcript, GameError>
where
    L: Learner + ?Sized,
    O: LossOracle + ?Sized,
{
    if horizon == 0 {
        return Err(GameError::ZeroHorizon);
    }
    if learner.arm_count() != oracle.arm_count() {
        return Err(GameError::ArmCountMismatch {
            learner: learner.arm_count(),
            oracle: oracle.arm_count(),
        });
    }

    let mut rng = seeded_rng(seed);
    let mut actions = Vec::with_capacity(horizon);
    let mut losses = Vec::with_capacity(horizon);
    let mut total_loss = 0.0;

    for t in 1..=horizon {
        let action = learner.choose(&mut rng);
        actions.push(action);
        let loss = oracle.eval(t, &actions)?;
        if !(0.0..=1.0).contains(&loss) {
            return Err(GameError::LossOutOfRange { round: t, loss });
        }
        losses.push(loss);
        total_loss += loss;
        learner.feedback(loss);
    }

    Ok(Transcript {
        actions,
        losses,
        seed,
        total_loss,
    })
}
