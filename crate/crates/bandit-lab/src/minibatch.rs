//! The mini-batching reduction from standard regret to policy regret.
//!
//! [`BatchedLearner`] wraps any learner: it draws one inner action per batch
//! of `tau` consecutive rounds, plays it for the whole batch, and feeds the
//! inner learner a single loss — the batch average. From the inner
//! algorithm's point of view every batch is one round of an ordinary bandit
//! game. Against an adversary whose memory is shorter than a batch, the
//! inner game's *standard* regret controls the outer game's *policy* regret:
//! the adversary's reaction to a counterfactual constant arm settles within
//! each batch, so replaying the competitor from round one costs at most an
//! extra `T·m/tau` plus one discarded trailing batch.
//!
//! [`policy_regret_bound`] quotes that guarantee, and the `batch_size_*`
//! calculators return the `tau` minimizing it when the inner regret grows
//! as `C·J^q`.

use thiserror::Error;

use rand::RngCore;

use crate::game::{Action, Learner};

/// A known memory bound at least as large as the batch size leaves the
/// reduction with nothing to drop feedback against.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("batch size {tau} must exceed the memory bound {m} whose rounds are dropped")]
pub struct BatchTooSmall {
    pub tau: usize,
    pub m: usize,
}

/// A learner wrapped in a mini-batching loop; see the module docs.
#[derive(Debug, Clone)]
pub struct BatchedLearner<L> {
    inner: L,
    tau: usize,
    /// Leading rounds of each batch whose losses are discarded (0 for the
    /// plain wrapper; the adversary's memory bound `m` for the known-memory
    /// variant, whose remaining average depends only on the current batch's
    /// action).
    drop_first: usize,
    current: Action,
    round_in_batch: usize,
    accumulated: f64,
}

/// Wrap `inner` so it sees one averaged loss per batch of `tau` rounds.
pub fn wrap<L: Learner>(inner: L, tau: usize) -> BatchedLearner<L> {
    BatchedLearner::new(inner, tau)
}

/// Like [`wrap`], but for an adversary with known memory bound `m`: the
/// first `m` losses of each batch (still contaminated by the previous
/// batch's action) are discarded, and the inner learner receives the mean
/// of the remaining `tau − m`.
pub fn wrap_known_m<L: Learner>(
    inner: L,
    tau: usize,
    m: usize,
) -> Result<BatchedLearner<L>, BatchTooSmall> {
    BatchedLearner::with_known_memory(inner, tau, m)
}

impl<L: Learner> BatchedLearner<L> {
    /// See [`wrap`].
    pub fn new(inner: L, tau: usize) -> Self {
        assert!(tau >= 1, "batch size must be at least 1");
        BatchedLearner {
            inner,
            tau,
            drop_first: 0,
            current: 0,
            round_in_batch: 0,
            accumulated: 0.0,
        }
    }

    /// See [`wrap_known_m`].
    pub fn with_known_memory(inner: L, tau: usize, m: usize) -> Result<Self, BatchTooSmall> {
        if tau <= m {
            return Err(BatchTooSmall { tau, m });
        }
        let mut wrapped = Self::new(inner, tau);
        wrapped.drop_first = m;
        Ok(wrapped)
    }

    /// The batch size.
    pub fn tau(&self) -> usize {
        self.tau
    }

    /// The wrapped learner (in whatever state the game left it).
    pub fn inner(&self) -> &L {
        &self.inner
    }

    /// Unwrap the inner learner.
    pub fn into_inner(self) -> L {
        self.inner
    }
}

impl<L: Learner> Learner for BatchedLearner<L> {
    fn arm_count(&self) -> usize {
        self.inner.arm_count()
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Action {
        if self.round_in_batch == 0 {
            self.current = self.inner.choose(rng);
        }
        self.current
    }

    fn feedback(&mut self, loss: f64) {
        if self.round_in_batch >= self.drop_first {
            self.accumulated += loss;
        }
        self.round_in_batch += 1;
        if self.round_in_batch == self.tau {
            let kept = (self.tau - self.drop_first) as f64;
            self.inner.feedback(self.accumulated / kept);
            self.accumulated = 0.0;
            self.round_in_batch = 0;
        }
        // A trailing partial batch at the horizon never reaches `tau`
        // feedbacks, so the inner learner is left untouched for it.
    }
}

/// A standard-regret growth rate `R(J) = C·J^q` for the inner learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRate {
    pub c: f64,
    pub q: f64,
}

impl RegretRate {
    /// A rate with leading constant `c > 0` and exponent `q ∈ (0, 1)`.
    pub fn new(c: f64, q: f64) -> Self {
        assert!(c > 0.0, "rate constant {c} must be positive");
        assert!(q > 0.0 && q < 1.0, "rate exponent {q} outside (0, 1)");
        RegretRate { c, q }
    }

    /// Tuned EXP3's guarantee over `k` arms: `sqrt(7·k·ln k)·sqrt(J)`.
    pub fn exp3(k: usize) -> Self {
        let k = k as f64;
        Self::new((7.0 * k * k.ln()).sqrt(), 0.5)
    }
}

/// The batch size minimizing [`policy_regret_bound`] for an inner learner
/// with regret rate `C·J^q`: the real-valued optimum `C^{−1/(2−q)}·
/// T^{(1−q)/(2−q)}`, rounded to the nearest integer and clamped to
/// `[1, T]`.
pub fn batch_size_general(rate: RegretRate, horizon: usize) -> usize {
    let t = horizon as f64;
    let tau = rate.c.powf(-1.0 / (2.0 - rate.q)) * t.powf((1.0 - rate.q) / (2.0 - rate.q));
    (tau.round() as usize).clamp(1, horizon)
}

/// Batch size for mini-batched EXP3 over `k` arms:
/// `(7·k·ln k)^{−1/3}·T^{1/3}`, rounded and clamped.
pub fn batch_size_exp3(k: usize, horizon: usize) -> usize {
    batch_size_general(RegretRate::exp3(k), horizon)
}

/// Batch size for mini-batched EXP3.S over `k` arms against competitors
/// with at most `switches` switches: `(7·k·s·ln(k·T))^{−1/3}·T^{1/3}`,
/// rounded and clamped.
pub fn batch_size_exp3s(k: usize, switches: usize, horizon: usize) -> usize {
    assert!(switches >= 1, "switch budget must be at least 1");
    let k = k as f64;
    let s = switches as f64;
    let t = horizon as f64;
    let tau = (7.0 * k * s * (k * t).ln()).powf(-1.0 / 3.0) * t.powf(1.0 / 3.0);
    (tau.round() as usize).clamp(1, horizon)
}

/// Policy-regret guarantee of the wrapped learner:
/// `tau·C·(T/tau)^q + T·m/tau + (s + 1)·tau`, where `m` is the adversary's
/// memory bound and `s` the competitor's switch budget (`s = 0` for
/// constant competitors).
pub fn policy_regret_bound(
    rate: RegretRate,
    tau: usize,
    horizon: usize,
    m: usize,
    switches: usize,
) -> f64 {
    assert!(tau >= 1, "batch size must be at least 1");
    let tau_f = tau as f64;
    let t = horizon as f64;
    tau_f * rate.c * (t / tau_f).powf(rate.q)
        + t * m as f64 / tau_f
        + (switches as f64 + 1.0) * tau_f
}
