use super::{check_action, EnvSpec, Environment, Step};
use crate::error::{Error, Result};
use crate::types::StateVector;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// States `0..n` as one-hot vectors, starting at 0. Moving right from
/// `n - 2` pays the reward and ends the episode; every other move pays 0.
/// Left clamps at 0. Episodes are capped at `10 n` steps.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    spec: EnvSpec,
    n: usize,
    reward: f64,
    pos: usize,
    steps: usize,
    done: bool,
}

impl ChainMdp {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_reward(n, 1.0)
    }

    pub fn with_reward(n: usize, reward: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::config("env.n", "chain needs at least 3 states"));
        }
        Ok(ChainMdp {
            spec: EnvSpec {
                name: format!("chain{n}"),
                state_dim: n,
                action_count: 2,
                frames_per_step: 1,
            },
            n,
            reward,
            pos: 0,
            steps: 0,
            done: true,
        })
    }

    pub fn with_frames_per_step(mut self, frames: u64) -> Self {
        self.spec.frames_per_step = frames;
        self
    }

    pub fn step_cap(&self) -> usize {
        10 * self.n
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

impl Environment for ChainMdp {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> StateVector {
        self.pos = 0;
        self.steps = 0;
        self.done = false;
        StateVector::one_hot(self.n, 0)
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        check_action(&self.spec, action)?;
        if self.done {
            return Err(Error::Env("step after episode end".into()));
        }
        self.steps += 1;
        let mut reward = 0.0;
        let mut terminal = false;
        if action == RIGHT {
            if self.pos == self.n - 2 {
                reward = self.reward;
                terminal = true;
            }
            self.pos += 1;
        } else {
            self.pos = self.pos.saturating_sub(1);
        }
        let truncated = !terminal && self.steps >= self.step_cap();
        self.done = terminal || truncated;
        Ok(Step {
            next_state: StateVector::one_hot(self.n, self.pos),
            reward,
            terminal,
            truncated,
        })
    }
}
