//! The zoom decision: sigmoid score to probability, the bounded acting
//! probability, action sampling, the advantage-style reward and the
//! score-function gradient seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardSign {
    /// Reward = a * (J1 - J0) / max(J0, eps): positive when the fine loss is
    /// larger, exactly as the advantage is written.
    AsWritten,
    /// Numerator flipped: rewards zooming where the fine network achieves a
    /// lower loss.
    LossDecrease,
}

impl std::fmt::Display for RewardSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RewardSign::AsWritten => write!(f, "as-written"),
            RewardSign::LossDecrease => write!(f, "loss-decrease"),
        }
    }
}

impl std::str::FromStr for RewardSign {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "as-written" => Ok(RewardSign::AsWritten),
            "loss-decrease" => Ok(RewardSign::LossDecrease),
            other => Err(format!("unknown reward sign `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomConfig {
    /// Maximum zoom-in steps per patch.
    pub max_zoom_steps: usize,
    pub zoom_rate: usize,
    /// Acting-probability bound: p~ stays inside [1-alpha, alpha].
    pub alpha: f64,
    pub reward_sign: RewardSign,
    /// Floor for the reward normalizer's denominator. Without a meaningful
    /// floor the advantage ratio explodes whenever the coarse loss is near
    /// zero (trivial patches late in training). 0.05 is a few percent of
    /// the uniform-prediction loss for four classes.
    pub j0_epsilon: f64,
    /// Symmetric saturation on the reward magnitude; 0 disables. The
    /// loss-decrease ratio is intrinsically capped at +1 but unbounded
    /// below (and mirrored for the as-written sign): transiently bad
    /// losses otherwise produce rewards of magnitude in the hundreds that
    /// permanently collapse the policy toward one bound. Saturating at the
    /// intrinsic cap keeps both tails on the same scale.
    pub reward_clamp: f64,
}

impl Default for ZoomConfig {
    fn default() -> Self {
        ZoomConfig {
            max_zoom_steps: 1,
            zoom_rate: 2,
            alpha: 0.8,
            reward_sign: RewardSign::AsWritten,
            j0_epsilon: 0.05,
            reward_clamp: 1.0,
        }
    }
}

impl ZoomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_zoom_steps < 1 {
            return Err(CoreError::BadZoomConfig("max zoom steps must be >= 1".into()));
        }
        if self.zoom_rate < 2 {
            return Err(CoreError::BadZoomConfig(format!(
                "zoom rate must be an integer >= 2, got {}",
                self.zoom_rate
            )));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(CoreError::BadZoomConfig(format!(
                "alpha must lie in (0.5, 1), got {}",
                self.alpha
            )));
        }
        if self.j0_epsilon <= 0.0 {
            return Err(CoreError::BadZoomConfig("epsilon must be positive".into()));
        }
        if self.reward_clamp < 0.0 {
            return Err(CoreError::BadZoomConfig("reward clamp must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Break,
    Zoom,
}

impl Action {
    pub fn as_index(self) -> u8 {
        match self {
            Action::Break => 0,
            Action::Zoom => 1,
        }
    }
}

/// Everything recorded about one policy evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PolicyDecision {
    pub score: f64,
    pub p: f64,
    pub p_tilde: f64,
    pub action: Action,
    /// Uniform draw consumed by sampling; 2.0 marks a forced action.
    pub draw: f64,
}

/// p~ = alpha p + (1 - alpha)(1 - p), confined to [1-alpha, alpha].
pub fn bounded_prob(p: f64, alpha: f64) -> f64 {
    alpha * p + (1.0 - alpha) * (1.0 - p)
}

pub fn sigmoid(score: f64) -> f64 {
    razn_autodiff::sigmoid_scalar(score)
}

/// Samples zoom with probability p~, recording the draw for replay.
pub fn sample_action(p_tilde: f64, rng: &mut ChaCha8Rng) -> (Action, f64) {
    let draw: f64 = rng.random();
    let action = if draw < p_tilde {
        Action::Zoom
    } else {
        Action::Break
    };
    (action, draw)
}

/// Full decision from a raw score, sampling the action.
pub fn decide(score: f64, alpha: f64, rng: &mut ChaCha8Rng) -> PolicyDecision {
    let p = sigmoid(score);
    let p_tilde = bounded_prob(p, alpha);
    let (action, draw) = sample_action(p_tilde, rng);
    PolicyDecision {
        score,
        p,
        p_tilde,
        action,
        draw,
    }
}

/// Deterministic decision for inference: zoom when p~ > 0.5.
pub fn decide_greedy(score: f64, alpha: f64) -> PolicyDecision {
    let p = sigmoid(score);
    let p_tilde = bounded_prob(p, alpha);
    PolicyDecision {
        score,
        p,
        p_tilde,
        action: if p_tilde > 0.5 { Action::Zoom } else { Action::Break },
        draw: 2.0,
    }
}

/// R(a): zero on break; on zoom the normalized loss gap with the configured
/// sign. The denominator floor keeps a tiny coarse loss from exploding the
/// ratio, and the symmetric saturation keeps a transiently huge fine loss
/// from doing the same through the numerator.
pub fn reward(action: Action, j0: f64, j1: f64, cfg: &ZoomConfig) -> f64 {
    match action {
        Action::Break => 0.0,
        Action::Zoom => {
            let numer = match cfg.reward_sign {
                RewardSign::AsWritten => j1 - j0,
                RewardSign::LossDecrease => j0 - j1,
            };
            let r = numer / j0.max(cfg.j0_epsilon);
            if cfg.reward_clamp > 0.0 {
                r.clamp(-cfg.reward_clamp, cfg.reward_clamp)
            } else {
                r
            }
        }
    }
}

/// Per-sample estimate of the negative expected reward:
/// -R(a) log pi~(a), with pi~(1) = p~ and pi~(0) = 1 - p~.
pub fn policy_objective(decision: &PolicyDecision, reward: f64) -> f64 {
    let pi = match decision.action {
        Action::Zoom => decision.p_tilde,
        Action::Break => 1.0 - decision.p_tilde,
    };
    -reward * pi.ln()
}

/// d/d score of the per-sample objective -R(a) log pi~(a), chained through
/// p~ = alpha p + (1-alpha)(1-p) and p = sigmoid(score).
pub fn score_grad_seed(decision: &PolicyDecision, reward: f64, alpha: f64) -> f64 {
    if reward == 0.0 {
        return 0.0;
    }
    let dlog_dp_tilde = match decision.action {
        Action::Zoom => 1.0 / decision.p_tilde,
        Action::Break => -1.0 / (1.0 - decision.p_tilde),
    };
    let dp_tilde_dp = 2.0 * alpha - 1.0;
    -reward * dlog_dp_tilde * dp_tilde_dp * decision.p * (1.0 - decision.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn bounds_of_the_acting_probability() {
        assert!((bounded_prob(1.0, 0.8) - 0.8).abs() < 1e-15);
        assert!((bounded_prob(0.0, 0.8) - 0.2).abs() < 1e-15);
        for alpha in [0.55, 0.7, 0.8, 0.95] {
            assert!((bounded_prob(0.5, alpha) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn reward_hand_cases() {
        let cfg = ZoomConfig::default();
        assert_eq!(reward(Action::Break, 0.9, 0.1, &cfg), 0.0);
        assert!((reward(Action::Zoom, 0.5, 0.6, &cfg) - 0.2).abs() < 1e-12);
        assert!((reward(Action::Zoom, 0.5, 0.25, &cfg) + 0.5).abs() < 1e-12);

        let flipped = ZoomConfig {
            reward_sign: RewardSign::LossDecrease,
            ..cfg
        };
        assert!((reward(Action::Zoom, 0.5, 0.25, &flipped) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reward_saturates_symmetrically() {
        let cfg = ZoomConfig {
            reward_sign: RewardSign::LossDecrease,
            ..ZoomConfig::default()
        };
        // wildly bad fine loss saturates at the clamp instead of exploding
        assert_eq!(reward(Action::Zoom, 0.001, 46.0, &cfg), -1.0);
        // the positive side is intrinsically below +1 for this sign
        let r = reward(Action::Zoom, 46.0, 0.001, &cfg);
        assert!(r > 0.99 && r <= 1.0);
        // an unclamped config keeps the raw ratio
        let open = ZoomConfig {
            reward_clamp: 0.0,
            ..cfg
        };
        assert!(reward(Action::Zoom, 0.001, 46.0, &open) < -900.0);
    }

    #[test]
    fn sampling_frequency_tracks_p_tilde() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let mut zoomed = 0u32;
        for _ in 0..n {
            if matches!(sample_action(0.8, &mut rng).0, Action::Zoom) {
                zoomed += 1;
            }
        }
        let freq = zoomed as f64 / n as f64;
        // 3 sigma of a Bernoulli(0.8) mean over 100k draws
        assert!((freq - 0.8).abs() < 0.004, "freq {freq}");
    }

    #[test]
    fn lower_bound_frequency_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 100_000;
        let mut zoomed = 0u32;
        for _ in 0..n {
            if matches!(sample_action(0.2, &mut rng).0, Action::Zoom) {
                zoomed += 1;
            }
        }
        let freq = zoomed as f64 / n as f64;
        assert!((0.19..=0.21).contains(&freq), "freq {freq}");
    }

    #[test]
    fn same_rng_state_same_action() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for p in [0.2, 0.5, 0.8] {
            let (ma, da) = sample_action(p, &mut a);
            let (mb, db) = sample_action(p, &mut b);
            assert_eq!(ma, mb);
            assert_eq!(da, db);
        }
    }

    #[test]
    fn objective_is_scaled_negative_log_prob() {
        let p = sigmoid(0.4);
        let pt = bounded_prob(p, 0.8);
        let zoom = PolicyDecision {
            score: 0.4,
            p,
            p_tilde: pt,
            action: Action::Zoom,
            draw: 0.0,
        };
        assert!((policy_objective(&zoom, 0.5) + 0.5 * pt.ln()).abs() < 1e-12);
        let brk = PolicyDecision {
            action: Action::Break,
            ..zoom
        };
        assert!((policy_objective(&brk, -2.0) - 2.0 * (1.0 - pt).ln()).abs() < 1e-12);
        // the gradient seed is the score-derivative of this objective
        let h = 1e-6;
        let obj_at = |s: f64| {
            let p = sigmoid(s);
            let d = PolicyDecision {
                score: s,
                p,
                p_tilde: bounded_prob(p, 0.8),
                action: Action::Zoom,
                draw: 0.0,
            };
            policy_objective(&d, 0.5)
        };
        let numeric = (obj_at(0.4 + h) - obj_at(0.4 - h)) / (2.0 * h);
        let analytic = score_grad_seed(&zoom, 0.5, 0.8);
        assert!((numeric - analytic).abs() < 1e-8);
    }

    #[test]
    fn zero_reward_kills_the_gradient() {
        let d = PolicyDecision {
            score: 0.3,
            p: sigmoid(0.3),
            p_tilde: bounded_prob(sigmoid(0.3), 0.8),
            action: Action::Zoom,
            draw: 0.1,
        };
        assert_eq!(score_grad_seed(&d, 0.0, 0.8), 0.0);
    }

    #[test]
    fn gradient_seed_matches_finite_differences_of_expected_objective() {
        // closed form: d/ds of -p~(s) R(1) = -R(1) (2a-1) p(1-p)
        let alpha = 0.8;
        let r1 = 0.37;
        for score in [-1.5, -0.2, 0.0, 0.4, 2.0] {
            let expected_obj = |s: f64| -bounded_prob(sigmoid(s), alpha) * r1;
            let h = 1e-6;
            let numeric = (expected_obj(score + h) - expected_obj(score - h)) / (2.0 * h);
            let p = sigmoid(score);
            let closed = -r1 * (2.0 * alpha - 1.0) * p * (1.0 - p);
            assert!((closed - numeric).abs() < 1e-9, "score {score}");
        }
    }

    #[test]
    fn estimator_expectation_equals_closed_form() {
        // enumerate a in {0,1}: E[seed] must equal -R(1) (2a-1) p (1-p)
        let alpha = 0.8;
        let cfg = ZoomConfig::default();
        for score in [-1.0, 0.0, 0.7] {
            for (j0, j1) in [(0.5, 0.8), (0.9, 0.3)] {
                let p = sigmoid(score);
                let pt = bounded_prob(p, alpha);
                let mk = |action, draw| PolicyDecision {
                    score,
                    p,
                    p_tilde: pt,
                    action,
                    draw,
                };
                let dz = mk(Action::Zoom, 0.0);
                let db = mk(Action::Break, 0.9);
                let rz = reward(Action::Zoom, j0, j1, &cfg);
                let rb = reward(Action::Break, j0, j1, &cfg);
                let expectation = pt * score_grad_seed(&dz, rz, alpha)
                    + (1.0 - pt) * score_grad_seed(&db, rb, alpha);
                let closed = -rz * (2.0 * alpha - 1.0) * p * (1.0 - p);
                assert!(
                    (expectation - closed).abs() < 1e-12,
                    "score {score} j0 {j0} j1 {j1}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn acting_probability_always_bounded(score in -50.0f64..50.0, alpha in 0.501f64..0.999) {
            let pt = bounded_prob(sigmoid(score), alpha);
            prop_assert!(pt >= 1.0 - alpha - 1e-12);
            prop_assert!(pt <= alpha + 1e-12);
        }

        // holds wherever the denominator floor is inactive: both the raw and
        // the scaled coarse loss must sit above the guard
        #[test]
        fn reward_invariant_under_common_scaling(
            j0 in 0.6f64..10.0,
            delta in -0.9f64..4.0,
            scale in 0.1f64..10.0,
        ) {
            let j1 = j0 * (1.0 + delta);
            let cfg = ZoomConfig::default();
            prop_assume!(j0 * scale > cfg.j0_epsilon);
            let r = reward(Action::Zoom, j0, j1, &cfg);
            let r_scaled = reward(Action::Zoom, scale * j0, scale * j1, &cfg);
            prop_assert!((r - r_scaled).abs() < 1e-9 * (1.0 + r.abs()));
        }
    }
}
