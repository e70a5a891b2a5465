//! Small episodic environments with natural terminal states, step caps and
//! an optional sticky-action wrapper.

pub mod chain;
pub mod grid;
mod sticky;

pub use chain::ChainMdp;
pub use grid::{GridEncoding, SparseGrid};
pub use sticky::{StickyActions, StickyConfig};

use crate::error::Result;
use crate::types::StateVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvSpec {
    pub name: String,
    pub state_dim: usize,
    pub action_count: usize,
    /// Frames charged against the budget per agent step.
    pub frames_per_step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next_state: StateVector,
    pub reward: f64,
    /// `next_state` is a final state of the task.
    pub terminal: bool,
    /// The episode hit its step cap without reaching a final state.
    pub truncated: bool,
}

impl Step {
    pub fn episode_over(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;
    /// Starts a new episode and returns its initial state.
    fn reset(&mut self) -> StateVector;
    fn step(&mut self, action: usize) -> Result<Step>;
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> &EnvSpec {
        (**self).spec()
    }
    fn reset(&mut self) -> StateVector {
        (**self).reset()
    }
    fn step(&mut self, action: usize) -> Result<Step> {
        (**self).step(action)
    }
}

pub(crate) fn check_action(spec: &EnvSpec, action: usize) -> Result<()> {
    if action >= spec.action_count {
        return Err(crate::error::Error::Env(format!(
            "action {action} out of range for {} ({} actions)",
            spec.name, spec.action_count
        )));
    }
    Ok(())
}
