use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::learn::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CheckpointMeta};
use crate::learn::net::{greedy_action, td_target, Gradients, QNetwork, Trace};
use crate::learn::replay::{ReplayMemory, Transition};
use crate::learn::LearnError;
use crate::seeds::derive_seed;

/// RMSProp squared-gradient averaging factor.
const RMS_DECAY: f64 = 0.95;
/// RMSProp denominator floor; gradients below its root step linearly.
const RMS_EPSILON: f64 = 0.01;

/// Q-learning hyperparameters. The defaults are the tuned production values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Stored transitions required before the first gradient step.
    pub warmup: usize,
    /// Decision steps between learn ticks; the driver counts them and calls
    /// `learn_tick` on every agent at that cadence.
    pub update_period: usize,
    /// Target-network refresh every this many gradient steps.
    pub target_sync_period: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which epsilon decays linearly before holding flat.
    pub epsilon_decay_episodes: u32,
    pub hidden_width: usize,
    pub hidden_layers: usize,
}

impl Default for DqnConfig {
    fn default() -> DqnConfig {
        DqnConfig {
            learning_rate: 1e-3,
            discount: 0.5,
            batch_size: 32,
            replay_capacity: 20_000,
            warmup: 2_000,
            update_period: 5,
            target_sync_period: 200,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 300,
            hidden_width: 256,
            hidden_layers: 4,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let fail = |msg: String| Err(LearnError::Config(msg));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return fail(format!("discount {} must lie in [0, 1]", self.discount));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if self.replay_capacity < self.batch_size {
            return fail(format!(
                "replay_capacity {} is below batch_size {}",
                self.replay_capacity, self.batch_size
            ));
        }
        if self.warmup < self.batch_size || self.warmup > self.replay_capacity {
            return fail(format!(
                "warmup {} must lie in [batch_size, replay_capacity]",
                self.warmup
            ));
        }
        if self.update_period == 0 || self.target_sync_period == 0 {
            return fail("update_period and target_sync_period must be positive".into());
        }
        for (name, eps) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&eps) {
                return fail(format!("{name} {eps} must lie in [0, 1]"));
            }
        }
        if self.epsilon_end > self.epsilon_start {
            return fail("epsilon_end must not exceed epsilon_start".into());
        }
        if self.epsilon_decay_episodes == 0 {
            return fail("epsilon_decay_episodes must be positive".into());
        }
        if self.hidden_width == 0 || self.hidden_layers == 0 {
            return fail("hidden_width and hidden_layers must be positive".into());
        }
        Ok(())
    }
}

struct PendingStep {
    state: Vec<f64>,
    action: usize,
    reward: Option<f64>,
}

/// One Q-learning agent: an online network, a target network, replay
/// memory, and an epsilon-greedy behavior policy. Interaction runs through
/// `act` / `finish` / `end_episode`, and the driver schedules gradient
/// steps with `learn_tick`; given the same seed and the same call sequence,
/// every decision and gradient step is bit-reproducible.
pub struct DqnAgent {
    name: String,
    eval: QNetwork,
    target: QNetwork,
    memory: ReplayMemory,
    rng: ChaCha8Rng,
    cfg: DqnConfig,
    epsilon: f64,
    pending: Option<PendingStep>,
    learn_steps: u64,
    losses: Vec<f64>,
    scratch: Trace,
    grads: Gradients,
    rms_state: Gradients,
    d_out: Vec<f64>,
    input_dim: usize,
    n_actions: usize,
    layout_hash: u64,
    action_descriptor: String,
}

impl DqnAgent {
    /// `seed` fixes both the weight initialization and the behavior stream.
    pub fn new(
        name: &str,
        input_dim: usize,
        n_actions: usize,
        layout_hash: u64,
        action_descriptor: &str,
        cfg: DqnConfig,
        seed: u64,
    ) -> Result<DqnAgent, LearnError> {
        cfg.validate()?;
        if input_dim == 0 || n_actions == 0 {
            return Err(LearnError::Config(
                "input_dim and n_actions must be positive".into(),
            ));
        }
        let mut dims = Vec::with_capacity(cfg.hidden_layers + 2);
        dims.push(input_dim);
        dims.extend(std::iter::repeat(cfg.hidden_width).take(cfg.hidden_layers));
        dims.push(n_actions);
        let eval = QNetwork::new(&dims, derive_seed(seed, 0));
        let target = eval.clone();
        let grads = Gradients::zeros_like(&eval);
        let rms_state = Gradients::zeros_like(&eval);
        Ok(DqnAgent {
            name: name.to_string(),
            target,
            memory: ReplayMemory::new(cfg.replay_capacity),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 1)),
            epsilon: cfg.epsilon_start,
            cfg,
            pending: None,
            learn_steps: 0,
            losses: Vec::new(),
            scratch: Trace::default(),
            grads,
            rms_state,
            d_out: vec![0.0; n_actions],
            input_dim,
            n_actions,
            layout_hash,
            action_descriptor: action_descriptor.to_string(),
            eval,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>, LearnError> {
        self.eval.forward(state)
    }

    /// Sets the exploration rate for an episode: linear decay from
    /// `epsilon_start` to `epsilon_end`, flat afterwards.
    pub fn set_episode(&mut self, episode: u32) {
        let frac = (episode as f64 / self.cfg.epsilon_decay_episodes as f64).min(1.0);
        self.epsilon =
            self.cfg.epsilon_start + (self.cfg.epsilon_end - self.cfg.epsilon_start) * frac;
    }

    /// Chooses an action among `0..valid_actions`. In training mode the
    /// previous decision (if any) is first flushed to replay with this
    /// state as its successor, then an epsilon-greedy draw is made and kept
    /// pending until `finish` supplies its reward. In evaluation mode the
    /// choice is pure greedy and nothing is recorded.
    pub fn act(
        &mut self,
        state: &[f64],
        valid_actions: usize,
        train: bool,
    ) -> Result<usize, LearnError> {
        if state.len() != self.input_dim {
            return Err(LearnError::InputShape {
                got: state.len(),
                expected: self.input_dim,
            });
        }
        if valid_actions == 0 || valid_actions > self.n_actions {
            return Err(LearnError::ActionRange {
                valid: valid_actions,
                actions: self.n_actions,
            });
        }
        if !train {
            let q = self.eval.forward(state)?;
            return Ok(greedy_action(&q[..valid_actions]));
        }

        self.flush_pending(state, false);
        let action = if self.rng.random_bool(self.epsilon) {
            self.rng.random_range(0..valid_actions)
        } else {
            let q = self.eval.forward(state)?;
            greedy_action(&q[..valid_actions])
        };
        self.pending = Some(PendingStep {
            state: state.to_vec(),
            action,
            reward: None,
        });
        Ok(action)
    }

    /// Supplies the reward for the decision returned by the last training
    /// `act`. Must be called exactly once per training decision.
    pub fn finish(&mut self, reward: f64) {
        let pending = self
            .pending
            .as_mut()
            .expect("finish called with no decision outstanding");
        assert!(
            pending.reward.is_none(),
            "finish called twice for one decision"
        );
        pending.reward = Some(reward);
    }

    /// Flushes the last decision of the episode as a terminal transition.
    pub fn end_episode(&mut self) {
        let zeros = vec![0.0; self.input_dim];
        self.flush_pending(&zeros, true);
    }

    fn flush_pending(&mut self, next_state: &[f64], done: bool) {
        let Some(pending) = self.pending.take() else {
            return;
        };
        let reward = pending
            .reward
            .expect("decision left without a reward before the next act");
        self.memory.push(Transition {
            state: pending.state,
            action: pending.action,
            reward,
            next_state: next_state.to_vec(),
            done,
        });
    }

    /// Runs one gradient step if the replay memory has reached warmup.
    /// The caller owns the cadence (one tick per agent every
    /// `update_period` decision steps).
    pub fn learn_tick(&mut self) {
        if self.memory.len() >= self.cfg.warmup {
            self.learn_step();
        }
    }

    fn learn_step(&mut self) {
        let indices = self.memory.sample_indices(self.cfg.batch_size, &mut self.rng);
        self.grads.reset();
        let mut loss_sum = 0.0;
        let inv_batch = 1.0 / self.cfg.batch_size as f64;
        for i in indices {
            let sample = self.memory.get(i);
            let target = if sample.done {
                sample.reward
            } else {
                let next_q = self
                    .target
                    .forward(&sample.next_state)
                    .expect("stored successor has the agent's input width");
                td_target(sample.reward, false, &next_q, self.cfg.discount)
            };
            self.eval.forward_trace(&sample.state, &mut self.scratch);
            let err = self.scratch.output()[sample.action] - target;
            loss_sum += err * err;
            self.d_out.iter_mut().for_each(|v| *v = 0.0);
            self.d_out[sample.action] = 2.0 * err * inv_batch;
            self.eval
                .backward(&sample.state, &self.scratch, &self.d_out, &mut self.grads);
        }
        self.eval.apply_rmsprop_step(
            &self.grads,
            &mut self.rms_state,
            self.cfg.learning_rate,
            RMS_DECAY,
            RMS_EPSILON,
        );
        self.losses.push(loss_sum * inv_batch);
        self.learn_steps += 1;
        if self.learn_steps % self.cfg.target_sync_period as u64 == 0 {
            self.target.copy_from(&self.eval);
        }
    }

    /// Returns and clears the per-gradient-step losses accumulated since
    /// the last drain.
    pub fn drain_losses(&mut self) -> Vec<f64> {
        std::mem::take(&mut self.losses)
    }

    fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            agent_id: self.name.clone(),
            layout_hash: self.layout_hash,
            action_descriptor: self.action_descriptor.clone(),
        }
    }

    /// Saves the online network and the agent's identity.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        save_checkpoint(path, &self.meta(), &self.eval)
    }

    /// Restores weights saved by `save`, rejecting checkpoints from agents
    /// with a different identity or network shape.
    pub fn load(&mut self, path: &Path) -> Result<(), CheckpointError> {
        let net = load_checkpoint(path, &self.meta())?;
        if net.layer_shapes() != self.eval.layer_shapes() {
            return Err(CheckpointError::Mismatch {
                field: "network shape",
                expected: format!("{:?}", self.eval.layer_shapes()),
                found: format!("{:?}", net.layer_shapes()),
            });
        }
        self.eval = net;
        self.target.copy_from(&self.eval);
        Ok(())
    }
}
