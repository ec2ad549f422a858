//! Skip and jump agents: a small ReLU trunk shared by a softmax policy head
//! and a linear value head.

use rand::Rng;

use crate::error::Result;
use crate::nn::{softmax, Activation, Dense, DenseCache};

/// Trunk width of both agents.
pub const TRUNK_WIDTH: usize = 25;

/// Policy-head bias put on the "keep reading" action at warm start.
/// softmax(0, 4.6) gives P(Read) ≈ 0.99; with four actions P(NextWord) ≈ 0.97.
pub const WARM_START_BIAS: f64 = 4.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SkipAction {
    Skip = 0,
    Read = 1,
}

impl SkipAction {
    pub const ALL: [SkipAction; 2] = [SkipAction::Skip, SkipAction::Read];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JumpAction {
    NextWord = 0,
    NextSubSep = 1,
    NextSentEnd = 2,
    EndOfText = 3,
}

impl JumpAction {
    pub const ALL: [JumpAction; 4] = [
        JumpAction::NextWord,
        JumpAction::NextSubSep,
        JumpAction::NextSentEnd,
        JumpAction::EndOfText,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

/// Previous skip and jump actions; `None` encodes as an all-zero one-hot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrevActions {
    pub skip: Option<SkipAction>,
    pub jump: Option<JumpAction>,
}

impl PrevActions {
    pub const WIDTH: usize = 6;

    pub fn encode(&self) -> [f64; 6] {
        let mut v = [0.0; 6];
        if let Some(s) = self.skip {
            v[s.index()] = 1.0;
        }
        if let Some(j) = self.jump {
            v[2 + j.index()] = 1.0;
        }
        v
    }
}

/// Skip-agent input: `concat(x_t, o_prev, onehot(skip), onehot(jump))`.
pub fn skip_input(x: &[f64], o_prev: &[f64], prev: PrevActions) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + o_prev.len() + PrevActions::WIDTH);
    z.extend_from_slice(x);
    z.extend_from_slice(o_prev);
    z.extend_from_slice(&prev.encode());
    z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionMode {
    Greedy,
    Sample,
}

/// Greedy takes the argmax (lowest index on ties); Sample draws by inverse CDF.
pub fn select_action<R: Rng + ?Sized>(dist: &[f64], mode: ActionMode, rng: &mut R) -> usize {
    match mode {
        ActionMode::Greedy => argmax(dist),
        ActionMode::Sample => {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            for (k, &p) in dist.iter().enumerate() {
                cum += p;
                if u < cum {
                    return k;
                }
            }
            dist.len() - 1
        }
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentNet {
    pub trunk: Dense,
    pub policy: Dense,
    pub value: Dense,
}

/// Everything one agent evaluation produces, plus what backward needs.
#[derive(Clone, Debug)]
pub struct AgentOutput {
    pub state: Vec<f64>,
    pub probs: Vec<f64>,
    pub value: f64,
    trunk_cache: DenseCache,
    policy_cache: DenseCache,
    value_cache: DenseCache,
}

impl AgentNet {
    pub fn glorot<R: Rng + ?Sized>(input: usize, width: usize, actions: usize, rng: &mut R) -> Self {
        AgentNet {
            trunk: Dense::glorot(input, width, Activation::Relu, rng),
            policy: Dense::glorot(width, actions, Activation::Linear, rng),
            value: Dense::glorot(width, 1, Activation::Linear, rng),
        }
    }

    pub fn zeros(input: usize, width: usize, actions: usize) -> Self {
        AgentNet {
            trunk: Dense::zeros(input, width, Activation::Relu),
            policy: Dense::zeros(width, actions, Activation::Linear),
            value: Dense::zeros(width, 1, Activation::Linear),
        }
    }

    pub fn zeros_like(&self) -> Self {
        AgentNet {
            trunk: self.trunk.zeros_like(),
            policy: self.policy.zeros_like(),
            value: self.value.zeros_like(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.policy.output_dim()
    }

    /// Zero policy weights and put [`WARM_START_BIAS`] on `preferred`, so the
    /// agent starts out almost always choosing that action.
    pub fn warm_start(&mut self, preferred: usize) {
        self.policy.weight.as_mut_slice().fill(0.0);
        self.policy.bias.fill(0.0);
        self.policy.bias[preferred] = WARM_START_BIAS;
    }

    pub fn trunk_state(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trunk.forward(input)?.0)
    }

    pub fn policy_dist(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.policy.forward(state)?.0))
    }

    pub fn state_value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.value.forward(state)?.0[0])
    }

    pub fn evaluate(&self, input: &[f64]) -> Result<AgentOutput> {
        let (state, trunk_cache) = self.trunk.forward(input)?;
        let (logits, policy_cache) = self.policy.forward(&state)?;
        let (v, value_cache) = self.value.forward(&state)?;
        Ok(AgentOutput {
            probs: softmax(&logits),
            value: v[0],
            state,
            trunk_cache,
            policy_cache,
            value_cache,
        })
    }

    /// Backpropagates a policy-logit gradient and a value gradient.
    pub fn backward(
        &self,
        out: &AgentOutput,
        dlogits: &[f64],
        dvalue: f64,
        grad: &mut AgentNet,
        dinput: Option<&mut [f64]>,
    ) {
        let mut dstate = vec![0.0; self.trunk.output_dim()];
        self.policy.backward(&out.policy_cache, dlogits, &mut grad.policy, Some(&mut dstate));
        self.value.backward(&out.value_cache, &[dvalue], &mut grad.value, Some(&mut dstate));
        self.trunk.backward(&out.trunk_cache, &dstate, &mut grad.trunk, dinput);
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.trunk.tensors());
        v.extend(self.policy.tensors());
        v.extend(self.value.tensors());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.trunk.tensors_mut());
        v.extend(self.policy.tensors_mut());
        v.extend(self.value.tensors_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_trunk_gives_zero_state() {
        let net = AgentNet::zeros(10, 5, 2);
        let z = skip_input(&[1.0, 2.0], &[3.0, 4.0], PrevActions::default());
        assert_eq!(net.trunk_state(&z).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn sentinel_leaves_action_slots_zero() {
        let z = skip_input(&[1.0], &[2.0], PrevActions::default());
        assert_eq!(&z[2..], &[0.0; 6]);
        let z = skip_input(
            &[1.0],
            &[2.0],
            PrevActions {
                skip: Some(SkipAction::Read),
                jump: Some(JumpAction::NextSentEnd),
            },
        );
        assert_eq!(&z[2..], &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn trunk_matches_hand_relu() {
        let mut net = AgentNet::zeros(3, 2, 2);
        net.trunk.weight = Matrix::from_rows(&[vec![1.0, -1.0, 0.5], vec![-2.0, 0.0, 1.0]]);
        net.trunk.bias = vec![0.1, -0.2];
        let z = [0.4, 0.2, 1.0];
        // [0.4 - 0.2 + 0.5 + 0.1, -0.8 + 1.0 - 0.2] = [0.8, 0.0]
        let s = net.trunk_state(&z).unwrap();
        assert!((s[0] - 0.8).abs() < 1e-15 && s[1].abs() < 1e-15);
    }

    #[test]
    fn policy_examples() {
        let mut skip = AgentNet::zeros(4, TRUNK_WIDTH, 2);
        let state = vec![0.3; TRUNK_WIDTH];
        assert_eq!(skip.policy_dist(&state).unwrap(), vec![0.5, 0.5]);
        skip.warm_start(SkipAction::Read.index());
        let p = skip.policy_dist(&state).unwrap();
        let expect = 1.0 / (1.0 + (-4.6f64).exp());
        assert!((p[1] - expect).abs() < 1e-12);
        assert!((p[1] - 0.99).abs() < 1e-3);

        let mut jump = AgentNet::zeros(4, TRUNK_WIDTH, 4);
        assert_eq!(jump.policy_dist(&state).unwrap(), vec![0.25; 4]);
        jump.warm_start(JumpAction::NextWord.index());
        let p = jump.policy_dist(&state).unwrap();
        let e = 4.6f64.exp();
        assert!((p[0] - e / (e + 3.0)).abs() < 1e-12);
        assert!((p[0] - 0.97).abs() < 1e-3);
    }

    #[test]
    fn value_head_is_linear() {
        let mut net = AgentNet::zeros(2, 3, 2);
        assert_eq!(net.state_value(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        net.value.weight = Matrix::from_rows(&[vec![1.0, 0.0, 0.0]]);
        net.value.bias = vec![0.5];
        assert_eq!(net.state_value(&[2.0, 0.0, 0.0]).unwrap(), 2.5);
    }

    #[test]
    fn greedy_selection_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&[0.2, 0.8], ActionMode::Greedy, &mut rng), 1);
        assert_eq!(select_action(&[0.5, 0.5], ActionMode::Greedy, &mut rng), 0);
    }

    #[test]
    fn sampling_frequencies_follow_the_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[select_action(&[0.25; 4], ActionMode::Sample, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn skip_trunk_is_sensitive_to_every_input_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (d, m) = (4, 5);
        let mut net = AgentNet::glorot(d + m + 6, TRUNK_WIDTH, 2, &mut rng);
        net.trunk.bias.fill(1.0); // keep units active
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let o: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let prev = PrevActions {
            skip: Some(SkipAction::Read),
            jump: Some(JumpAction::NextWord),
        };
        let base = net.trunk_state(&skip_input(&x, &o, prev)).unwrap();
        let mut x2 = x.clone();
        x2[0] += 0.5;
        assert_ne!(net.trunk_state(&skip_input(&x2, &o, prev)).unwrap(), base);
        let mut o2 = o.clone();
        o2[2] -= 0.5;
        assert_ne!(net.trunk_state(&skip_input(&x, &o2, prev)).unwrap(), base);
        let p2 = PrevActions {
            skip: Some(SkipAction::Skip),
            jump: None,
        };
        assert_ne!(net.trunk_state(&skip_input(&x, &o, p2)).unwrap(), base);
        let p3 = PrevActions {
            skip: Some(SkipAction::Read),
            jump: Some(JumpAction::EndOfText),
        };
        assert_ne!(net.trunk_state(&skip_input(&x, &o, p3)).unwrap(), base);
    }

    proptest! {
        #[test]
        fn policies_are_distributions(seed in 0u64..1000, scale in 0.1f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let skip = AgentNet::glorot(7, TRUNK_WIDTH, 2, &mut rng);
            let jump = AgentNet::glorot(7, TRUNK_WIDTH, 4, &mut rng);
            let z: Vec<f64> = (0..7).map(|_| rng.gen_range(-scale..scale)).collect();
            for net in [&skip, &jump] {
                let p = net.evaluate(&z).unwrap().probs;
                prop_assert!(p.iter().all(|&v| v >= 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            }
        }

        #[test]
        fn greedy_is_deterministic(p in 0.0f64..1.0) {
            let d = [p, 1.0 - p];
            let mut r1 = ChaCha8Rng::seed_from_u64(1);
            let mut r2 = ChaCha8Rng::seed_from_u64(99);
            prop_assert_eq!(
                select_action(&d, ActionMode::Greedy, &mut r1),
                select_action(&d, ActionMode::Greedy, &mut r2)
            );
        }
    }
}
