//! Rewards, returns and the four loss terms, together with their gradients
//! with respect to the episode outputs.

use crate::agents::SkipAction;
use crate::nn::{log_softmax, softmax};
use crate::reader::{DecisionGrad, EpisodeSeeds, Trajectory};

use super::config::{EntropyTarget, TrainConfig};

/// Reading cost of one skip-agent decision; jumps carry no reward.
pub fn step_reward(action: SkipAction, doc_len: usize, c_skip: f64) -> f64 {
    assert!(doc_len >= 1, "document length must be positive");
    match action {
        SkipAction::Read => -1.0 / doc_len as f64,
        SkipAction::Skip => -c_skip / doc_len as f64,
    }
}

/// Fills the reward slot of every step.
pub fn assign_rewards(traj: &mut Trajectory, c_skip: f64) {
    let n = traj.doc_len;
    for s in &mut traj.steps {
        s.reward = step_reward(s.skip_action, n, c_skip);
    }
}

/// 1 for a correct prediction, otherwise the probability given to the target.
pub fn terminal_bonus(correct: bool, p_target: f64) -> f64 {
    if correct {
        1.0
    } else {
        p_target
    }
}

/// `R_t = bonus + w_rolling · Σ_{t' ≥ t} r_{t'}`, undiscounted. The suffix
/// sums are compensated (Neumaier), so a full read of `n ≤ 48` tokens sums
/// to exactly −1.
pub fn returns(rewards: &[f64], bonus: f64, w_rolling: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in (0..rewards.len()).rev() {
        let r = rewards[t];
        let next = sum + r;
        comp += if sum.abs() >= r.abs() { (sum - next) + r } else { (r - next) + sum };
        sum = next;
        out[t] = bonus + w_rolling * (sum + comp);
    }
    out
}

pub fn class_loss(logits: &[f64], target: usize) -> f64 {
    -log_softmax(logits)[target]
}

/// Returns and advantages the policy-gradient terms treat as constants.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenTargets {
    pub returns: Vec<f64>,
    pub skip_advantage: Vec<Option<f64>>,
    pub jump_advantage: Vec<Option<f64>>,
}

impl FrozenTargets {
    /// Rewards must already be assigned.
    pub fn from_trajectory(traj: &Trajectory, target: usize, w_rolling: f64) -> Self {
        let probs = softmax(&traj.logits);
        let bonus = terminal_bonus(traj.prediction() == target, probs[target]);
        let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
        let returns = returns(&rewards, bonus, w_rolling);
        let skip_advantage = traj
            .steps
            .iter()
            .zip(&returns)
            .map(|(s, r)| s.skip.as_ref().map(|d| r - d.value))
            .collect();
        let jump_advantage = traj
            .steps
            .iter()
            .zip(&returns)
            .map(|(s, r)| s.jump.as_ref().map(|d| r - d.value))
            .collect();
        FrozenTargets {
            returns,
            skip_advantage,
            jump_advantage,
        }
    }
}

/// Per-episode loss terms (sums over the episode's decisions).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossComponents {
    pub class: f64,
    pub actor: f64,
    pub critic: f64,
    pub entropy: f64,
}

impl LossComponents {
    /// `α·class + β·actor + γ·critic + δ·entropy`
    pub fn total(&self, cfg: &TrainConfig) -> f64 {
        cfg.alpha * self.class + cfg.beta * self.actor + cfg.gamma * self.critic + cfg.entropy_weight * self.entropy
    }
}

/// Batch mean of the weighted totals.
pub fn total_loss(components: &[LossComponents], cfg: &TrainConfig) -> f64 {
    if components.is_empty() {
        return 0.0;
    }
    components.iter().map(|c| c.total(cfg)).sum::<f64>() / components.len() as f64
}

/// `-Σ log π(a_t)·A_t` over both agents.
pub fn actor_loss(traj: &Trajectory, targets: &FrozenTargets) -> f64 {
    let mut loss = 0.0;
    for (t, s) in traj.steps.iter().enumerate() {
        if let (Some(d), Some(a)) = (&s.skip, targets.skip_advantage[t]) {
            loss -= d.logprob * a;
        }
        if let (Some(d), Some(a)) = (&s.jump, targets.jump_advantage[t]) {
            loss -= d.logprob * a;
        }
    }
    loss
}

/// `Σ (V_t − R_t)²` over both agents' value heads.
pub fn critic_loss(traj: &Trajectory, targets: &FrozenTargets) -> f64 {
    let mut loss = 0.0;
    for (s, r) in traj.steps.iter().zip(&targets.returns) {
        for d in [&s.skip, &s.jump].into_iter().flatten() {
            loss += (d.value - r).powi(2);
        }
    }
    loss
}

fn dist_cross_entropy(target: &[f64], dist: &[f64]) -> f64 {
    -target.iter().zip(dist).map(|(q, p)| q * p.ln()).sum::<f64>()
}

/// `Σ_t CE(target ‖ π_t)` for every decision of both agents.
pub fn entropy_loss(traj: &Trajectory, target: EntropyTarget) -> f64 {
    let (qs, qj) = (target.distribution(2), target.distribution(4));
    let mut loss = 0.0;
    for s in &traj.steps {
        if let Some(d) = &s.skip {
            loss += dist_cross_entropy(&qs, &d.dist);
        }
        if let Some(d) = &s.jump {
            loss += dist_cross_entropy(&qj, &d.dist);
        }
    }
    loss
}

/// Loss terms of one episode and the gradients of the weighted total with
/// respect to the classifier logits and every agent output. Advantages and
/// returns come from `targets` and receive no gradient.
pub fn episode_objective(
    traj: &Trajectory,
    target: usize,
    targets: &FrozenTargets,
    cfg: &TrainConfig,
) -> (LossComponents, EpisodeSeeds) {
    let components = LossComponents {
        class: class_loss(&traj.logits, target),
        actor: actor_loss(traj, targets),
        critic: critic_loss(traj, targets),
        entropy: entropy_loss(traj, cfg.entropy_target),
    };
    let mut class_dlogits = softmax(&traj.logits);
    class_dlogits[target] -= 1.0;
    for g in &mut class_dlogits {
        *g *= cfg.alpha;
    }

    let (qs, qj) = (cfg.entropy_target.distribution(2), cfg.entropy_target.distribution(4));
    let seed = |dist: &[f64], action: usize, adv: f64, value: f64, ret: f64, q: &[f64]| DecisionGrad {
        dlogits: dist
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let hot = if k == action { 1.0 } else { 0.0 };
                cfg.beta * adv * (p - hot) + cfg.entropy_weight * (p - q[k])
            })
            .collect(),
        dvalue: cfg.gamma * 2.0 * (value - ret),
    };

    let mut skip = Vec::with_capacity(traj.steps.len());
    let mut jump = Vec::with_capacity(traj.steps.len());
    for (t, s) in traj.steps.iter().enumerate() {
        let ret = targets.returns[t];
        skip.push(match (&s.skip, targets.skip_advantage[t]) {
            (Some(d), Some(adv)) => Some(seed(&d.dist, s.skip_action.index(), adv, d.value, ret, &qs)),
            _ => None,
        });
        jump.push(match (&s.jump, targets.jump_advantage[t], s.jump_action) {
            (Some(d), Some(adv), Some(a)) => Some(seed(&d.dist, a.index(), adv, d.value, ret, &qj)),
            _ => None,
        });
    }
    (
        components,
        EpisodeSeeds {
            class_dlogits,
            skip,
            jump,
        },
    )
}
