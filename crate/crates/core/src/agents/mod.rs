//! COMPER and DQN agents, the ε-greedy policy and the episodic driver both
//! agents run under.

mod comper;
mod dqn;
mod replay;

pub use comper::{comper_td_update, run_comper, ComperAgent, ComperConfig, TdReport};
pub use dqn::{run_dqn, run_dqn_with, DqnAgent, DqnConfig};
pub use replay::ReplayBuffer;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::harness::log::{EpisodeRow, QlstmRoundRow, RunLog, RunSink};
use crate::nn::checkpoint::NetRef;
use crate::nn::DenseNet;
use crate::types::{StateVector, Transition};

/// Linear annealing over environment frames, clamped at `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon_frames: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            end: 0.001,
            horizon_frames: 90_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("epsilon.start", self.start), ("epsilon.end", self.end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

pub fn epsilon_at(frames: u64, schedule: &EpsilonSchedule) -> f64 {
    if frames >= schedule.horizon_frames {
        return schedule.end;
    }
    let frac = frames as f64 / schedule.horizon_frames as f64;
    schedule.start + (schedule.end - schedule.start) * frac
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Returns the chosen action and the network's Q-value for it, also when the
/// action was drawn at random.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    qnet: &DenseNet,
    state: &StateVector,
    epsilon: f64,
    rng: &mut R,
) -> Result<(usize, f64)> {
    let q_values = qnet.forward(state.as_slice())?;
    let action = if rng.random::<f64>() < epsilon {
        rng.random_range(0..q_values.len())
    } else {
        argmax(&q_values)
    };
    Ok((action, q_values[action]))
}

/// `r + γ·target − value`, dropping the bootstrap on masked terminals.
pub fn td_error(
    reward: f64,
    gamma: f64,
    q_target: f64,
    q_value: f64,
    terminal: bool,
    terminal_mask: bool,
) -> f64 {
    let bootstrap = if terminal && terminal_mask {
        0.0
    } else {
        gamma * q_target
    };
    reward + bootstrap - q_value
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Columns describing an agent's memories at an episode boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryColumns {
    pub tm_sets: usize,
    pub rtm_size: usize,
    pub similarity_hits: u64,
    pub qlstm_rounds: u64,
}

/// What the episodic driver needs from a learning agent.
pub trait Agent {
    /// Chooses an action for `state` given the frames consumed so far.
    fn act(&mut self, state: &StateVector, frames: u64) -> Result<(usize, f64)>;
    /// Records a transition and runs any learning due at this step. `frames`
    /// already includes the step. Returns a predictor training round if one
    /// ran.
    fn observe(&mut self, transition: Transition, q: f64, frames: u64) -> Result<Option<QlstmRoundRow>>;
    fn epsilon(&self, frames: u64) -> f64;
    fn memory_columns(&self) -> MemoryColumns;
    fn networks(&self) -> Vec<NetRef<'_>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub trial: usize,
    /// Stop at the first episode end with at least this many frames.
    pub budget_frames: u64,
    /// Write a checkpoint every this many steps (0 = only at the end).
    pub checkpoint_interval: u64,
}

/// Runs whole episodes until the frame budget is met at an episode end.
/// Episodes are never cut short by the budget.
pub fn drive<E, A>(env: &mut E, agent: &mut A, protocol: Protocol, sink: &mut dyn RunSink) -> Result<RunLog>
where
    E: Environment + ?Sized,
    A: Agent + ?Sized,
{
    let fps = env.spec().frames_per_step;
    let mut log = RunLog::default();
    let mut frames = 0u64;
    let mut steps = 0u64;
    let mut episode = 0usize;
    loop {
        episode += 1;
        let mut state = env.reset();
        let mut ep_frames = 0u64;
        let mut score = 0.0;
        loop {
            let (action, q) = agent.act(&state, frames)?;
            let step = env.step(action)?;
            frames += fps;
            ep_frames += fps;
            steps += 1;
            score += step.reward;
            let over = step.episode_over();
            let next = step.next_state.clone();
            let transition = Transition::new(state, action, step.reward, step.next_state, step.terminal);
            if let Some(mut round) = agent.observe(transition, q, frames)? {
                round.trial = protocol.trial;
                sink.qlstm_round(&round)?;
                log.qlstm_rounds.push(round);
            }
            if protocol.checkpoint_interval > 0 && steps.is_multiple_of(protocol.checkpoint_interval) {
                sink.checkpoint(steps, &agent.networks())?;
            }
            if over {
                break;
            }
            state = next;
        }
        let mem = agent.memory_columns();
        let row = EpisodeRow {
            trial: protocol.trial,
            episode,
            episode_frames: ep_frames,
            cumulative_frames: frames,
            score,
            epsilon: agent.epsilon(frames),
            tm_sets: mem.tm_sets,
            rtm_size: mem.rtm_size,
            similarity_hits: mem.similarity_hits,
            qlstm_rounds: mem.qlstm_rounds,
        };
        sink.episode(&row)?;
        log.episodes.push(row);
        if frames >= protocol.budget_frames {
            break;
        }
    }
    log.total_steps = steps;
    if protocol.checkpoint_interval == 0 || !steps.is_multiple_of(protocol.checkpoint_interval) {
        sink.checkpoint(steps, &agent.networks())?;
    }
    Ok(log)
}
