//! Multi-trial driver, per-trial CSV logs and score summaries.

pub mod files;
pub mod log;
pub mod summary;

pub use log::{EpisodeRow, NullSink, QlstmRoundRow, RunLog, RunSink};
pub use summary::{compare, summarize, CheckpointStat, ComparisonReport, ComparisonRow, Summary};

use crate::agents::{run_comper, run_dqn, ComperConfig, DqnConfig};
use crate::env::{ChainMdp, Environment, GridEncoding, SparseGrid, StickyActions, StickyConfig};
use crate::error::Result;

/// Which environment a run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    Chain { n: usize },
    Grid { width: usize, height: usize, encoding: GridEncoding },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub reward_scale: f64,
    pub frames_per_step: u64,
    /// Sticky-action probability ς; 0 disables the wrapper.
    pub sticky: f64,
}

impl EnvConfig {
    pub fn chain(n: usize) -> Self {
        EnvConfig {
            kind: EnvKind::Chain { n },
            reward_scale: 1.0,
            frames_per_step: 1,
            sticky: 0.0,
        }
    }

    /// Builds the environment for one trial. The sticky wrapper draws from
    /// its own stream derived from `seed`.
    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment>> {
        let base: Box<dyn Environment> = match self.kind {
            EnvKind::Chain { n } => Box::new(
                ChainMdp::with_reward(n, self.reward_scale)?.with_frames_per_step(self.frames_per_step),
            ),
            EnvKind::Grid {
                width,
                height,
                encoding,
            } => {
                if self.reward_scale != 1.0 {
                    return Err(crate::error::Error::config(
                        "env.reward_scale",
                        "only the chain supports reward scaling",
                    ));
                }
                Box::new(SparseGrid::new(width, height, encoding)?.with_frames_per_step(self.frames_per_step))
            }
        };
        if self.sticky > 0.0 {
            let sticky_seed = seed ^ 0x5eed_5eed_5eed_5eed;
            Ok(Box::new(StickyActions::new(
                base,
                StickyConfig {
                    varsigma: self.sticky,
                },
                sticky_seed,
            )?))
        } else {
            Ok(base)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentConfig {
    Comper(ComperConfig),
    Dqn(DqnConfig),
}

impl AgentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AgentConfig::Comper(_) => "comper",
            AgentConfig::Dqn(_) => "dqn",
        }
    }
}

/// Runs one trial with seed `seed`, writing through `sink`.
pub fn run_trial(
    agent: &AgentConfig,
    env: &EnvConfig,
    trial: usize,
    seed: u64,
    sink: &mut dyn RunSink,
) -> Result<RunLog> {
    let mut environment = env.build(seed)?;
    match agent {
        AgentConfig::Comper(cfg) => Ok(run_comper(&mut environment, cfg, seed, trial, sink)?.0),
        AgentConfig::Dqn(cfg) => Ok(run_dqn(&mut environment, cfg, seed, trial, sink)?.0),
    }
}

/// Runs `trials` independent trials with seeds `base_seed + i`. The sink
/// factory is called once per trial.
pub fn run_trials<F, S>(
    agent: &AgentConfig,
    env: &EnvConfig,
    trials: usize,
    base_seed: u64,
    parallel: bool,
    make_sink: F,
) -> Result<Vec<RunLog>>
where
    F: Fn(usize) -> Result<S> + Sync,
    S: RunSink,
{
    let one = |i: usize| -> Result<RunLog> {
        let mut sink = make_sink(i)?;
        run_trial(agent, env, i, base_seed.wrapping_add(i as u64), &mut sink)
    };
    let results: Vec<Result<RunLog>> = if parallel {
        crate::par::map_indexed(trials, 1, one)
    } else {
        (0..trials).map(one).collect()
    };
    results.into_iter().collect()
}
