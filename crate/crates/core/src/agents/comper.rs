//! The COMPER control loop.
//!
//! Every step stores `(τ, Q)` in the transition memory, with `Q` the value
//! the ε-greedy policy saw for the chosen action. Every `tf` steps, when the
//! reduced memory is still empty or the step is a multiple of `utf`, the
//! memory's sets are consumed to train the recurrent Q-target predictor and
//! to refresh the reduced memory. Then `K` transitions are drawn uniformly
//! (with replacement) from the reduced memory and the Q-network takes one
//! step on the mean of `td · ∇Q(s, a)` with
//! `td = r + γ·QLSTM(τ) − Q(s, a)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{drive, epsilon_at, epsilon_greedy, stream_rng, td_error, Agent, EpsilonSchedule};
use super::{MemoryColumns, Protocol};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::harness::log::{QlstmRoundRow, RunLog, RunSink};
use crate::memory::{TransitionMemory, DEFAULT_CAPACITY};
use crate::nn::checkpoint::NetRef;
use crate::nn::{DenseNet, Gradients, Parameters, RmsPropConfig, RmsPropState};
use crate::par;
use crate::qlstm::{build_training_set, produce_rtm, Qlstm, QlstmConfig, ReducedTransitionMemory};
use crate::types::{StateVector, Transition};

/// Below this much work (samples × parameters) the batch runs sequentially.
pub(crate) const PARALLEL_MIN_WORK: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ComperConfig {
    /// Transitions sampled from the reduced memory per update (K).
    pub k: usize,
    /// Steps between Q-network updates (tf).
    pub train_frequency: u64,
    /// Steps between predictor training rounds (utf).
    pub update_target_frequency: u64,
    pub gamma: f64,
    /// Similarity threshold (δ).
    pub delta: f64,
    /// Frame budget (sn).
    pub budget_frames: u64,
    pub epsilon: EpsilonSchedule,
    /// Frames of uniformly random play before any learning.
    pub replay_start: u64,
    /// Sets consumed from the transition memory per training round.
    pub similar_sets_batch: usize,
    pub tm_capacity: usize,
    /// Drop the bootstrap term on terminal transitions.
    pub terminal_mask: bool,
    /// Hidden widths of the Q-network.
    pub hidden: Vec<usize>,
    /// Q-network optimizer; `step_size` is α.
    pub optimizer: RmsPropConfig,
    pub qlstm: QlstmConfig,
    pub checkpoint_interval: u64,
}

impl Default for ComperConfig {
    fn default() -> Self {
        ComperConfig {
            k: 32,
            train_frequency: 4,
            update_target_frequency: 100,
            gamma: 0.99,
            delta: 0.0,
            budget_frames: 100_000,
            epsilon: EpsilonSchedule::default(),
            replay_start: 100,
            similar_sets_batch: 1_000,
            tm_capacity: DEFAULT_CAPACITY,
            terminal_mask: false,
            hidden: vec![64, 64],
            optimizer: RmsPropConfig::q_network(),
            qlstm: QlstmConfig::default(),
            checkpoint_interval: 0,
        }
    }
}

impl ComperConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("comper.k", self.k as u64),
            ("comper.tf", self.train_frequency),
            ("comper.utf", self.update_target_frequency),
            ("comper.similar_sets_batch", self.similar_sets_batch as u64),
            ("comper.tm_capacity", self.tm_capacity as u64),
            ("qlstm.minibatch", self.qlstm.minibatch as u64),
            ("qlstm.epochs", self.qlstm.epochs as u64),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config("comper.delta", "must be a non-negative number"));
        }
        if self.qlstm.lstm_widths.is_empty() || self.qlstm.lstm_widths.contains(&0) {
            return Err(Error::config("qlstm.lstm_widths", "needs at least one positive width"));
        }
        if self.hidden.contains(&0) || self.qlstm.dense_widths.contains(&0) {
            return Err(Error::config("qnet.hidden", "widths must be positive"));
        }
        self.optimizer
            .validate()
            .map_err(|m| Error::config("optimizer", m))?;
        self.qlstm
            .optimizer
            .validate()
            .map_err(|m| Error::config("qlstm", m))?;
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TdReport {
    pub skipped: bool,
    pub samples: usize,
    pub mean_td: f64,
}

/// One Q-network step on `K` transitions drawn uniformly with replacement
/// from the reduced memory. `targets[i]` is the predictor's Q-target for
/// `rtm.entry(i)`. The update direction is the mean of `td · ∇Q(s, a)`.
#[allow(clippy::too_many_arguments)]
pub fn comper_td_update<R: Rng + ?Sized>(
    qnet: &mut DenseNet,
    optimizer: &mut RmsPropState,
    rtm: &ReducedTransitionMemory,
    targets: &[f64],
    k: usize,
    gamma: f64,
    terminal_mask: bool,
    rng: &mut R,
) -> Result<TdReport> {
    if rtm.is_empty() || k == 0 {
        return Ok(TdReport {
            skipped: true,
            ..TdReport::default()
        });
    }
    if targets.len() != rtm.len() {
        return Err(Error::shape("one Q-target per reduced-memory entry"));
    }
    let picks: Vec<usize> = (0..k).map(|_| rng.random_range(0..rtm.len())).collect();
    let scale = -1.0 / k as f64;
    let net: &DenseNet = qnet;
    let per_sample = par::map_indexed(
        k,
        if k * net.param_count() >= PARALLEL_MIN_WORK { 1 } else { usize::MAX },
        |j| -> Result<(f64, Gradients)> {
            let i = picks[j];
            let t = &rtm.entry(i).1;
            let trace = net.forward_trace(t.prev_state.as_slice())?;
            let q_value = trace.output[t.action];
            let td = td_error(t.reward, gamma, targets[i], q_value, t.terminal, terminal_mask);
            let mut upstream = vec![0.0; trace.output.len()];
            upstream[t.action] = scale * td;
            let (g, _) = net.backward(&trace, &upstream)?;
            Ok((td, g))
        },
    );
    let mut td_sum = 0.0;
    let mut grads = Vec::with_capacity(k);
    for r in per_sample {
        let (td, g) = r?;
        td_sum += td;
        grads.push(g);
    }
    let total = Gradients::sum_ordered(grads).expect("k > 0");
    optimizer.step(qnet, &total)?;
    Ok(TdReport {
        skipped: false,
        samples: k,
        mean_td: td_sum / k as f64,
    })
}

#[derive(Debug, Clone)]
pub struct ComperAgent {
    pub config: ComperConfig,
    pub qnet: DenseNet,
    pub optimizer: RmsPropState,
    pub qlstm: Qlstm,
    pub tm: TransitionMemory,
    pub rtm: ReducedTransitionMemory,
    /// Predictor output for each reduced-memory entry, refreshed every round.
    targets: Vec<f64>,
    rng: ChaCha8Rng,
    steps: u64,
    rounds: u64,
    td_updates: u64,
}

impl ComperAgent {
    pub fn new(state_dim: usize, action_count: usize, config: ComperConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream_rng(seed, 0);
        let mut widths = vec![state_dim];
        widths.extend_from_slice(&config.hidden);
        widths.push(action_count);
        let qnet = DenseNet::new(&widths, &mut init);
        let qlstm = Qlstm::new(state_dim, config.qlstm.clone(), &mut init);
        let optimizer = RmsPropState::new(config.optimizer, &qnet);
        Ok(ComperAgent {
            tm: TransitionMemory::new(state_dim, config.tm_capacity),
            rtm: ReducedTransitionMemory::new(),
            targets: Vec::new(),
            qnet,
            optimizer,
            qlstm,
            rng: stream_rng(seed, 1),
            config,
            steps: 0,
            rounds: 0,
            td_updates: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn td_updates(&self) -> u64 {
        self.td_updates
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn greedy_q(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.qnet.forward(state.as_slice())
    }

    fn train_predictor(&mut self) -> Result<QlstmRoundRow> {
        let sets = self
            .tm
            .take_training_sets(self.config.similar_sets_batch, &mut self.rng);
        let pairs = build_training_set(&sets);
        let report = self.qlstm.train(&pairs, &mut self.rng)?;
        produce_rtm(&mut self.rtm, &sets);
        self.targets = self.qlstm.predict_all(&self.rtm)?;
        self.rounds += 1;
        Ok(QlstmRoundRow {
            trial: 0,
            round: self.rounds,
            step: self.steps,
            sets_consumed: sets.len(),
            pairs: pairs.len(),
            mean_loss: report.mean_loss,
            rtm_size: self.rtm.len(),
        })
    }
}

impl Agent for ComperAgent {
    fn act(&mut self, state: &StateVector, frames: u64) -> Result<(usize, f64)> {
        let eps = self.epsilon(frames);
        epsilon_greedy(&self.qnet, state, eps, &mut self.rng)
    }

    fn observe(&mut self, transition: Transition, q: f64, frames: u64) -> Result<Option<QlstmRoundRow>> {
        self.tm.store_transition(transition, q, self.config.delta)?;
        self.steps += 1;
        let t = self.steps;
        if !t.is_multiple_of(self.config.train_frequency) || frames < self.config.replay_start {
            return Ok(None);
        }
        let mut round = None;
        if self.rtm.is_empty() || t.is_multiple_of(self.config.update_target_frequency) {
            round = Some(self.train_predictor()?);
        }
        let report = comper_td_update(
            &mut self.qnet,
            &mut self.optimizer,
            &self.rtm,
            &self.targets,
            self.config.k,
            self.config.gamma,
            self.config.terminal_mask,
            &mut self.rng,
        )?;
        if !report.skipped {
            self.td_updates += 1;
        }
        Ok(round)
    }

    fn epsilon(&self, frames: u64) -> f64 {
        if frames < self.config.replay_start {
            1.0
        } else {
            epsilon_at(frames, &self.config.epsilon)
        }
    }

    fn memory_columns(&self) -> MemoryColumns {
        MemoryColumns {
            tm_sets: self.tm.len(),
            rtm_size: self.rtm.len(),
            similarity_hits: self.tm.counters().similarity_hits,
            qlstm_rounds: self.rounds,
        }
    }

    fn networks(&self) -> Vec<NetRef<'_>> {
        vec![NetRef::Dense(&self.qnet), NetRef::Lstm(&self.qlstm.net)]
    }
}

/// Full COMPER run; returns the agent too so callers can inspect it.
pub fn run_comper<E: Environment + ?Sized>(
    env: &mut E,
    config: &ComperConfig,
    seed: u64,
    trial: usize,
    sink: &mut dyn RunSink,
) -> Result<(RunLog, ComperAgent)> {
    let spec = env.spec().clone();
    let mut agent = ComperAgent::new(spec.state_dim, spec.action_count, config.clone(), seed)?;
    let protocol = Protocol {
        trial,
        budget_frames: config.budget_frames,
        checkpoint_interval: config.checkpoint_interval,
    };
    let log = drive(env, &mut agent, protocol, sink)?;
    Ok((log, agent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::SimilarTransitionSet;
    use crate::nn::{Activation, DenseLayer};
    use crate::types::SetId;

    fn one_transition_rtm(reward: f64, terminal: bool) -> ReducedTransitionMemory {
        let mut rtm = ReducedTransitionMemory::new();
        produce_rtm(
            &mut rtm,
            &[SimilarTransitionSet {
                set_id: SetId(1),
                representative: Transition::new(
                    StateVector::new(vec![1.0]),
                    0,
                    reward,
                    StateVector::new(vec![1.0]),
                    terminal,
                ),
                q_history: vec![0.0],
                created_at: 1,
                last_updated_at: 1,
            }],
        );
        rtm
    }

    fn scalar_net(w: f64) -> DenseNet {
        let mut l = DenseLayer::zeros(1, 1, Activation::Linear);
        l.weights = vec![w];
        DenseNet::from_layers(vec![l]).unwrap()
    }

    #[test]
    fn zero_td_leaves_the_network() {
        // Q = 1, r = 0.01, target = 1 ⇒ td = 0.01 + 0.99 - 1 = 0
        let rtm = one_transition_rtm(0.01, false);
        let mut net = scalar_net(1.0);
        let before = net.clone();
        let mut opt = RmsPropState::new(RmsPropConfig::q_network(), &net);
        let mut rng = stream_rng(0, 0);
        let r = comper_td_update(&mut net, &mut opt, &rtm, &[1.0], 8, 0.99, false, &mut rng).unwrap();
        assert!(r.mean_td.abs() < 1e-15);
        let moved = (net.layers[0].weights[0] - before.layers[0].weights[0]).abs();
        assert!(moved < 1e-9, "{moved}");
    }

    #[test]
    fn positive_td_raises_q() {
        let rtm = one_transition_rtm(1.0, false);
        let mut net = scalar_net(0.0);
        let mut opt = RmsPropState::new(RmsPropConfig::q_network(), &net);
        let mut rng = stream_rng(0, 0);
        let r = comper_td_update(&mut net, &mut opt, &rtm, &[2.0], 4, 0.99, false, &mut rng).unwrap();
        assert!((r.mean_td - 2.98).abs() < 1e-12);
        assert!(net.forward(&[1.0]).unwrap()[0] > 0.0);
    }

    #[test]
    fn masked_terminal_ignores_target() {
        let rtm = one_transition_rtm(1.0, true);
        let mut net = scalar_net(0.25);
        let mut opt = RmsPropState::new(RmsPropConfig::q_network(), &net);
        let mut rng = stream_rng(0, 0);
        let r = comper_td_update(&mut net, &mut opt, &rtm, &[50.0], 4, 0.99, true, &mut rng).unwrap();
        assert!((r.mean_td - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_rtm_is_skipped() {
        let rtm = ReducedTransitionMemory::new();
        let mut net = scalar_net(0.0);
        let mut opt = RmsPropState::new(RmsPropConfig::q_network(), &net);
        let mut rng = stream_rng(0, 0);
        let r = comper_td_update(&mut net, &mut opt, &rtm, &[], 32, 0.99, false, &mut rng).unwrap();
        assert!(r.skipped);
        assert_eq!(opt.steps, 0);
    }

    #[test]
    fn invalid_config_names_the_field() {
        let cfg = ComperConfig {
            train_frequency: 0,
            ..ComperConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "comper.tf"),
            other => panic!("{other:?}"),
        }
    }
}
