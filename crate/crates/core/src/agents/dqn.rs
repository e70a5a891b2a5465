//! DQN baseline: uniform replay, a frozen target network copied every
//! `target_period` actions and the squared TD loss
//! `½(r + γ·max_a' Q̂(s', a') − Q(s, a))²`.

use rand_chacha::ChaCha8Rng;

use super::comper::PARALLEL_MIN_WORK;
use super::{drive, epsilon_at, epsilon_greedy, stream_rng, td_error, Agent, EpsilonSchedule};
use super::{MemoryColumns, Protocol, ReplayBuffer};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::harness::log::{QlstmRoundRow, RunLog, RunSink};
use crate::nn::checkpoint::NetRef;
use crate::nn::{DenseNet, Gradients, Parameters, RmsPropConfig, RmsPropState};
use crate::par;
use crate::types::{StateVector, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    pub replay_capacity: usize,
    /// Frames of uniformly random play before any learning.
    pub replay_start: u64,
    /// Actions between target-network copies.
    pub target_period: u64,
    pub minibatch: usize,
    /// Actions between online-network updates.
    pub update_frequency: u64,
    pub gamma: f64,
    pub budget_frames: u64,
    pub epsilon: EpsilonSchedule,
    pub terminal_mask: bool,
    pub hidden: Vec<usize>,
    pub optimizer: RmsPropConfig,
    pub checkpoint_interval: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            replay_capacity: 100_000,
            replay_start: 1_000,
            target_period: 1_000,
            minibatch: 32,
            update_frequency: 4,
            gamma: 0.99,
            budget_frames: 100_000,
            epsilon: EpsilonSchedule::default(),
            terminal_mask: true,
            hidden: vec![64, 64],
            optimizer: RmsPropConfig::q_network(),
            checkpoint_interval: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dqn.replay_capacity", self.replay_capacity as u64),
            ("dqn.target_period", self.target_period),
            ("dqn.minibatch", self.minibatch as u64),
            ("dqn.update_frequency", self.update_frequency),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("qnet.hidden", "widths must be positive"));
        }
        self.optimizer
            .validate()
            .map_err(|m| Error::config("optimizer", m))?;
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub config: DqnConfig,
    pub qnet: DenseNet,
    pub target: DenseNet,
    pub optimizer: RmsPropState,
    pub replay: ReplayBuffer,
    rng: ChaCha8Rng,
    steps: u64,
    updates: u64,
    target_copies: u64,
}

impl DqnAgent {
    pub fn new(state_dim: usize, action_count: usize, config: DqnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream_rng(seed, 0);
        let mut widths = vec![state_dim];
        widths.extend_from_slice(&config.hidden);
        widths.push(action_count);
        Self::with_network(DenseNet::new(&widths, &mut init), config, seed)
    }

    /// Uses `qnet` as the initial online network, e.g. a tabular linear layer.
    pub fn with_network(qnet: DenseNet, config: DqnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(DqnAgent {
            target: qnet.clone(),
            optimizer: RmsPropState::new(config.optimizer, &qnet),
            replay: ReplayBuffer::new(config.replay_capacity),
            qnet,
            rng: stream_rng(seed, 1),
            config,
            steps: 0,
            updates: 0,
            target_copies: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn target_copies(&self) -> u64 {
        self.target_copies
    }

    fn learn(&mut self) -> Result<()> {
        let picks = self.replay.sample_indices(self.config.minibatch, &mut self.rng);
        let n = picks.len();
        if n == 0 {
            return Ok(());
        }
        let (qnet, target, replay) = (&self.qnet, &self.target, &self.replay);
        let (gamma, mask) = (self.config.gamma, self.config.terminal_mask);
        let scale = -1.0 / n as f64;
        let min_parallel = if n * qnet.param_count() >= PARALLEL_MIN_WORK { 1 } else { usize::MAX };
        let per_sample = par::map_indexed(n, min_parallel, |j| -> Result<Gradients> {
            let t = replay.get(picks[j]);
            let next_q = target.forward(t.next_state.as_slice())?;
            let best_next = next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let trace = qnet.forward_trace(t.prev_state.as_slice())?;
            let td = td_error(t.reward, gamma, best_next, trace.output[t.action], t.terminal, mask);
            let mut upstream = vec![0.0; trace.output.len()];
            upstream[t.action] = scale * td;
            Ok(qnet.backward(&trace, &upstream)?.0)
        });
        let grads = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
        let total = Gradients::sum_ordered(grads).expect("non-empty minibatch");
        self.optimizer.step(&mut self.qnet, &total)?;
        self.updates += 1;
        Ok(())
    }
}

impl Agent for DqnAgent {
    fn act(&mut self, state: &StateVector, frames: u64) -> Result<(usize, f64)> {
        let eps = self.epsilon(frames);
        epsilon_greedy(&self.qnet, state, eps, &mut self.rng)
    }

    fn observe(&mut self, transition: Transition, _q: f64, frames: u64) -> Result<Option<QlstmRoundRow>> {
        self.replay.push(transition);
        self.steps += 1;
        if frames >= self.config.replay_start && self.steps.is_multiple_of(self.config.update_frequency) {
            self.learn()?;
        }
        if self.steps.is_multiple_of(self.config.target_period) {
            self.target.copy_from(&self.qnet)?;
            self.target_copies += 1;
        }
        Ok(None)
    }

    fn epsilon(&self, frames: u64) -> f64 {
        if frames < self.config.replay_start {
            1.0
        } else {
            epsilon_at(frames, &self.config.epsilon)
        }
    }

    fn memory_columns(&self) -> MemoryColumns {
        MemoryColumns::default()
    }

    fn networks(&self) -> Vec<NetRef<'_>> {
        vec![NetRef::Dense(&self.qnet)]
    }
}

pub fn run_dqn<E: Environment + ?Sized>(
    env: &mut E,
    config: &DqnConfig,
    seed: u64,
    trial: usize,
    sink: &mut dyn RunSink,
) -> Result<(RunLog, DqnAgent)> {
    let spec = env.spec().clone();
    let agent = DqnAgent::new(spec.state_dim, spec.action_count, config.clone(), seed)?;
    run_dqn_with(env, agent, trial, sink)
}

/// Runs an already constructed agent under the episodic protocol.
pub fn run_dqn_with<E: Environment + ?Sized>(
    env: &mut E,
    mut agent: DqnAgent,
    trial: usize,
    sink: &mut dyn RunSink,
) -> Result<(RunLog, DqnAgent)> {
    let protocol = Protocol {
        trial,
        budget_frames: agent.config.budget_frames,
        checkpoint_interval: agent.config.checkpoint_interval,
    };
    let log = drive(env, &mut agent, protocol, sink)?;
    Ok((log, agent))
}
