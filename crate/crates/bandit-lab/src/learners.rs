//! Bandit learners: EXP3, EXP3.S, and trivial baselines.
//!
//! The exponential-weights core is exposed as free functions
//! ([`exp3_distribution`], [`exp3_update`], [`exp3s_update`]) so that other
//! components — notably the adversary that simulates EXP3 to prey on it —
//! perform bit-identical arithmetic to the learners themselves.
//!
//! Updates are in gain form: a loss `ℓ ∈ [0, 1]` becomes the gain `1 − ℓ`,
//! the played arm's gain is importance-weighted by its draw probability, and
//! weights move multiplicatively. Logarithms are natural throughout.

use rand::{Rng, RngCore};

use crate::game::{Action, Learner};

/// The exploration-mixed exponential-weights distribution:
/// `p_i = (1 − gamma)·w_i/Σw + gamma/k`.
///
/// Panics if any weight is non-positive or non-finite; the update functions
/// renormalize precisely so that this cannot happen between rounds.
pub fn exp3_distribution(weights: &[f64], gamma: f64) -> Vec<f64> {
    let k = weights.len() as f64;
    let mut total = 0.0;
    for &w in weights {
        assert!(
            w.is_finite() && w > 0.0,
            "exponential weight {w} out of range (overflow or decay to zero)"
        );
        total += w;
    }
    weights
        .iter()
        .map(|w| (1.0 - gamma) * (w / total) + gamma / k)
        .collect()
}

/// One gain-form EXP3 weight update after playing `action` and suffering
/// `loss`, followed by a renormalization that fixes the largest weight at 1.
///
/// The estimated gain is `(1 − loss)/p_action` for the played arm and 0 for
/// every other arm, so only the played arm's weight moves before
/// renormalization. Renormalization rescales all weights uniformly, which
/// leaves [`exp3_distribution`] unchanged while preventing overflow on long
/// horizons.
pub fn exp3_update(weights: &mut [f64], gamma: f64, action: Action, loss: f64) {
    assert!((0.0..=1.0).contains(&loss), "loss {loss} outside [0, 1]");
    let k = weights.len() as f64;
    let total: f64 = weights.iter().sum();
    let p = (1.0 - gamma) * (weights[action] / total) + gamma / k;
    let estimated_gain = (1.0 - loss) / p;
    weights[action] *= (gamma * estimated_gain / k).exp();
    renormalize(weights);
}

/// One EXP3.S update: the EXP3 step of [`exp3_update`] followed by uniform
/// weight sharing `w_i ← w_i + (alpha/k)·Σw`, which keeps every arm's weight
/// from decaying irrecoverably and lets the learner track switching
/// competitors. `alpha = 0` reduces exactly to [`exp3_update`].
pub fn exp3s_update(weights: &mut [f64], gamma: f64, alpha: f64, action: Action, loss: f64) {
    exp3_update(weights, gamma, action, loss);
    if alpha > 0.0 {
        let share = alpha * weights.iter().sum::<f64>() / weights.len() as f64;
        for w in weights.iter_mut() {
            *w += share;
        }
        renormalize(weights);
    }
}

/// Rescale so the largest weight is exactly 1; a pure change of scale, so
/// the induced distribution is untouched.
fn renormalize(weights: &mut [f64]) {
    let max = weights.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    for w in weights.iter_mut() {
        *w /= max;
    }
}

/// Exploration rate minimizing EXP3's expected-regret bound over `J` rounds:
/// `min(1, sqrt(k·ln k / ((e − 1)·J)))`.
pub fn exp3_tuned_gamma(k: usize, rounds: usize) -> f64 {
    let k = k as f64;
    let j = rounds as f64;
    (k * k.ln() / ((std::f64::consts::E - 1.0) * j))
        .sqrt()
        .min(1.0)
}

/// Exploration rate for EXP3.S tuned for competitors with at most
/// `switches` switches over `J` rounds:
/// `min(1, sqrt(k·(switches·ln(kJ) + e) / ((e − 1)·J)))`.
pub fn exp3s_tuned_gamma(k: usize, switches: usize, rounds: usize) -> f64 {
    let k = k as f64;
    let j = rounds as f64;
    let e = std::f64::consts::E;
    (k * (switches as f64 * (k * j).ln() + e) / ((e - 1.0) * j))
        .sqrt()
        .min(1.0)
}

/// Default EXP3.S weight-sharing rate for a known horizon of `J` rounds.
pub fn exp3s_default_alpha(rounds: usize) -> f64 {
    1.0 / rounds as f64
}

/// The EXP3 learner: exponential weights with exploration mixing and
/// importance-weighted gain estimates from bandit feedback.
#[derive(Debug, Clone)]
pub struct Exp3 {
    k: usize,
    gamma: f64,
    weights: Vec<f64>,
    last_action: Option<Action>,
}

impl Exp3 {
    /// A fresh learner over `k` arms with exploration rate `gamma ∈ (0, 1]`.
    pub fn new(k: usize, gamma: f64) -> Self {
        assert!(k >= 2, "need at least 2 arms, got {k}");
        assert!(gamma > 0.0 && gamma <= 1.0, "gamma {gamma} outside (0, 1]");
        Exp3 {
            k,
            gamma,
            weights: vec![1.0; k],
            last_action: None,
        }
    }

    /// A fresh learner with `gamma` tuned for a known horizon of `rounds`.
    pub fn tuned(k: usize, rounds: usize) -> Self {
        Self::new(k, exp3_tuned_gamma(k, rounds))
    }

    /// The distribution the next `choose` will draw from.
    pub fn distribution(&self) -> Vec<f64> {
        exp3_distribution(&self.weights, self.gamma)
    }
}

impl Learner for Exp3 {
    fn arm_count(&self) -> usize {
        self.k
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Action {
        assert!(
            self.last_action.is_none(),
            "choose called twice without feedback"
        );
        let probs = exp3_distribution(&self.weights, self.gamma);
        let action = sample(&probs, rng);
        self.last_action = Some(action);
        action
    }

    fn feedback(&mut self, loss: f64) {
        let action = self.last_action.take().expect("feedback before choose");
        exp3_update(&mut self.weights, self.gamma, action, loss);
    }
}

/// The EXP3.S learner: EXP3 plus uniform weight sharing after each update.
#[derive(Debug, Clone)]
pub struct Exp3S {
    k: usize,
    gamma: f64,
    alpha: f64,
    weights: Vec<f64>,
    last_action: Option<Action>,
}

impl Exp3S {
    /// A fresh learner over `k` arms with exploration rate `gamma ∈ (0, 1]`
    /// and sharing rate `alpha ≥ 0`.
    pub fn new(k: usize, gamma: f64, alpha: f64) -> Self {
        assert!(k >= 2, "need at least 2 arms, got {k}");
        assert!(gamma > 0.0 && gamma <= 1.0, "gamma {gamma} outside (0, 1]");
        assert!(alpha >= 0.0, "alpha {alpha} must be non-negative");
        Exp3S {
            k,
            gamma,
            alpha,
            weights: vec![1.0; k],
            last_action: None,
        }
    }

    /// A fresh learner tuned for competitors with at most `switches`
    /// switches over a known horizon of `rounds`.
    pub fn tuned(k: usize, switches: usize, rounds: usize) -> Self {
        Self::new(
            k,
            exp3s_tuned_gamma(k, switches, rounds),
            exp3s_default_alpha(rounds),
        )
    }

    /// The distribution the next `choose` will draw from.
    pub fn distribution(&self) -> Vec<f64> {
        exp3_distribution(&self.weights, self.gamma)
    }
}

impl Learner for Exp3S {
    fn arm_count(&self) -> usize {
        self.k
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Action {
        assert!(
            self.last_action.is_none(),
            "choose called twice without feedback"
        );
        let probs = exp3_distribution(&self.weights, self.gamma);
        let action = sample(&probs, rng);
        self.last_action = Some(action);
        action
    }

    fn feedback(&mut self, loss: f64) {
        let action = self.last_action.take().expect("feedback before choose");
        exp3s_update(&mut self.weights, self.gamma, self.alpha, action, loss);
    }
}

/// Baseline that plays one arm forever and ignores feedback; it realizes the
/// constant competitor sequences that policy regret is measured against.
#[derive(Debug, Clone, Copy)]
pub struct FixedAction {
    k: usize,
    action: Action,
}

impl FixedAction {
    /// Always play `action` in a `k`-arm game.
    pub fn new(k: usize, action: Action) -> Self {
        assert!(action < k, "action {action} out of range for {k} arms");
        FixedAction { k, action }
    }
}

impl Learner for FixedAction {
    fn arm_count(&self) -> usize {
        self.k
    }
    fn choose(&mut self, _rng: &mut dyn RngCore) -> Action {
        self.action
    }
    fn feedback(&mut self, _loss: f64) {}
}

/// Baseline that draws every round uniformly at random and ignores feedback.
#[derive(Debug, Clone, Copy)]
pub struct UniformRandom {
    k: usize,
}

impl UniformRandom {
    /// Uniform play over `k` arms.
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "need at least 1 arm");
        UniformRandom { k }
    }
}

impl Learner for UniformRandom {
    fn arm_count(&self) -> usize {
        self.k
    }
    fn choose(&mut self, rng: &mut dyn RngCore) -> Action {
        rng.gen_range(0..self.k)
    }
    fn feedback(&mut self, _loss: f64) {}
}

/// Instrumentation wrapper: delegates to an inner learner while recording
/// every action it chose and every loss it was fed. Useful for verifying
/// what a wrapper (e.g. the mini-batcher) actually delivers to its inner
/// algorithm.
#[derive(Debug, Clone)]
pub struct Recording<L> {
    inner: L,
    /// Actions returned by `choose`, in order.
    pub chosen: Vec<Action>,
    /// Losses received by `feedback`, in order.
    pub feedbacks: Vec<f64>,
}

impl<L: Learner> Recording<L> {
    /// Record all traffic to and from `inner`.
    pub fn new(inner: L) -> Self {
        Recording {
            inner,
            chosen: Vec::new(),
            feedbacks: Vec::new(),
        }
    }
}

impl<L: Learner> Learner for Recording<L> {
    fn arm_count(&self) -> usize {
        self.inner.arm_count()
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Action {
        let action = self.inner.choose(rng);
        self.chosen.push(action);
        action
    }

    fn feedback(&mut self, loss: f64) {
        self.feedbacks.push(loss);
        self.inner.feedback(loss);
    }
}

/// Draw an index from an explicit probability vector by inverse CDF.
fn sample(probs: &[f64], rng: &mut dyn RngCore) -> Action {
    let mut x: f64 = rng.gen();
    for (i, &p) in probs.iter().enumerate() {
        if x < p {
            return i;
        }
        x -= p;
    }
    // Rounding may leave a sliver of mass past the last bucket.
    probs.len() - 1
}
