//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! `agent` and `env` are required, every other key has a default. Overrides
//! given on the command line are applied after the file, in order.
//! [`RunConfig::to_cfg`] writes every key, so its output parses back to the
//! same configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::{ComperConfig, DqnConfig, EpsilonSchedule};
use crate::env::GridEncoding;
use crate::error::{Error, Result};
use crate::harness::log::fmt_f64;
use crate::harness::{AgentConfig, EnvConfig, EnvKind};
use crate::nn::RmsPropConfig;

pub const DEFAULT_TRIALS: usize = 5;
pub const DEFAULT_STICKY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub env: EnvConfig,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// Raw key/value pairs, remembering where each one came from.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            raw.set_line(line, &format!("{origin}:{}", n + 1))?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        self.set_line(spec.trim(), "override")
    }

    pub fn set(&mut self, key: &str, value: &str, origin: &str) {
        self.entries
            .insert(key.to_string(), (value.to_string(), origin.to_string()));
    }

    fn set_line(&mut self, line: &str, origin: &str) -> Result<()> {
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::config(origin, format!("expected key = value, got {line:?}"))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::config(origin, "empty key"));
        }
        self.set(k, v, origin);
        Ok(())
    }

    fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some((v, origin)) => v.parse().map_err(|_| {
                Error::config(key, format!("cannot parse {v:?} ({origin})"))
            }),
        }
    }

    fn take_list(&mut self, key: &str, default: Vec<usize>) -> Result<Vec<usize>> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some((v, origin)) => {
                if v.is_empty() {
                    return Ok(Vec::new());
                }
                v.split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| {
                        Error::config(key, format!("expected comma-separated widths, got {v:?} ({origin})"))
                    })
            }
        }
    }

    fn take_optimizer(&mut self, prefix: &str, default: RmsPropConfig) -> Result<RmsPropConfig> {
        Ok(RmsPropConfig {
            step_size: self.take(&format!("{prefix}.step_size"), default.step_size)?,
            momentum: self.take(&format!("{prefix}.momentum"), default.momentum)?,
            decay: self.take(&format!("{prefix}.decay"), default.decay)?,
            epsilon: self.take(&format!("{prefix}.epsilon"), default.epsilon)?,
        })
    }

    /// Builds and validates a [`RunConfig`]. Unknown keys are rejected.
    pub fn resolve(mut self) -> Result<RunConfig> {
        let agent_name = self
            .take_str("agent")
            .ok_or_else(|| Error::config("agent", "missing required field (comper | dqn)"))?;
        let env_name = self
            .take_str("env")
            .ok_or_else(|| Error::config("env", "missing required field (chain | grid)"))?;

        let kind = match env_name.as_str() {
            "chain" => EnvKind::Chain {
                n: self.take("env.n", 5)?,
            },
            "grid" => {
                let encoding = match self.take_str("env.encoding").as_deref() {
                    None | Some("coordinates") => GridEncoding::Coordinates,
                    Some("onehot") => GridEncoding::OneHot,
                    Some(other) => {
                        return Err(Error::config(
                            "env.encoding",
                            format!("expected coordinates or onehot, got {other:?}"),
                        ))
                    }
                };
                EnvKind::Grid {
                    width: self.take("env.width", 5)?,
                    height: self.take("env.height", 5)?,
                    encoding,
                }
            }
            other => {
                return Err(Error::config("env", format!("expected chain or grid, got {other:?}")))
            }
        };
        let env = EnvConfig {
            kind,
            reward_scale: self.take("env.reward_scale", 1.0)?,
            frames_per_step: self.take("env.frames_per_step", 1)?,
            sticky: self.take("env.sticky", DEFAULT_STICKY)?,
        };
        if !(0.0..=1.0).contains(&env.sticky) {
            return Err(Error::config("env.sticky", "must lie in [0, 1]"));
        }
        if env.frames_per_step == 0 {
            return Err(Error::config("env.frames_per_step", "must be positive"));
        }

        let trials = self.take("trials", DEFAULT_TRIALS)?;
        if trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let seed = self.take("seed", 0u64)?;
        let out = PathBuf::from(self.take_str("out").unwrap_or_else(|| "runs".into()));

        let agent = match agent_name.as_str() {
            "comper" => AgentConfig::Comper(self.take_comper()?),
            "dqn" => AgentConfig::Dqn(self.take_dqn()?),
            other => {
                return Err(Error::config("agent", format!("expected comper or dqn, got {other:?}")))
            }
        };

        if let Some((key, (_, origin))) = self.entries.iter().next() {
            return Err(Error::config(
                key.clone(),
                format!("unknown key for agent {agent_name} and env {env_name} ({origin})"),
            ));
        }
        match &agent {
            AgentConfig::Comper(c) => c.validate()?,
            AgentConfig::Dqn(c) => c.validate()?,
        }
        // Construction checks the environment's own invariants.
        env.build(seed)?;
        Ok(RunConfig {
            agent,
            env,
            trials,
            seed,
            out,
        })
    }

    fn take_epsilon(&mut self) -> Result<EpsilonSchedule> {
        let d = EpsilonSchedule::default();
        Ok(EpsilonSchedule {
            start: self.take("epsilon.start", d.start)?,
            end: self.take("epsilon.end", d.end)?,
            horizon_frames: self.take("epsilon.horizon", d.horizon_frames)?,
        })
    }

    fn take_comper(&mut self) -> Result<ComperConfig> {
        let d = ComperConfig::default();
        let q = d.qlstm.clone();
        let mut c = ComperConfig {
            k: self.take("comper.k", d.k)?,
            train_frequency: self.take("comper.tf", d.train_frequency)?,
            update_target_frequency: self.take("comper.utf", d.update_target_frequency)?,
            gamma: self.take("gamma", d.gamma)?,
            delta: self.take("comper.delta", d.delta)?,
            budget_frames: self.take("budget", d.budget_frames)?,
            epsilon: self.take_epsilon()?,
            replay_start: self.take("replay_start", d.replay_start)?,
            similar_sets_batch: self.take("comper.sets_batch", d.similar_sets_batch)?,
            tm_capacity: self.take("comper.tm_capacity", d.tm_capacity)?,
            terminal_mask: self.take("terminal_mask", d.terminal_mask)?,
            hidden: self.take_list("qnet.hidden", d.hidden.clone())?,
            optimizer: self.take_optimizer("optimizer", d.optimizer)?,
            qlstm: d.qlstm.clone(),
            checkpoint_interval: self.take("checkpoint_interval", d.checkpoint_interval)?,
        };
        c.qlstm.lstm_widths = self.take_list("qlstm.lstm", q.lstm_widths)?;
        c.qlstm.dense_widths = self.take_list("qlstm.dense", q.dense_widths)?;
        c.qlstm.epochs = self.take("qlstm.epochs", q.epochs)?;
        c.qlstm.minibatch = self.take("qlstm.minibatch", q.minibatch)?;
        c.qlstm.optimizer = self.take_optimizer("qlstm", q.optimizer)?;
        Ok(c)
    }

    fn take_dqn(&mut self) -> Result<DqnConfig> {
        let d = DqnConfig::default();
        Ok(DqnConfig {
            replay_capacity: self.take("dqn.replay_capacity", d.replay_capacity)?,
            replay_start: self.take("replay_start", d.replay_start)?,
            target_period: self.take("dqn.target_period", d.target_period)?,
            minibatch: self.take("dqn.minibatch", d.minibatch)?,
            update_frequency: self.take("dqn.update_frequency", d.update_frequency)?,
            gamma: self.take("gamma", d.gamma)?,
            budget_frames: self.take("budget", d.budget_frames)?,
            epsilon: self.take_epsilon()?,
            terminal_mask: self.take("terminal_mask", d.terminal_mask)?,
            hidden: self.take_list("qnet.hidden", d.hidden.clone())?,
            optimizer: self.take_optimizer("optimizer", d.optimizer)?,
            checkpoint_interval: self.take("checkpoint_interval", d.checkpoint_interval)?,
        })
    }
}

/// Reads `path`, applies `overrides` in order and resolves.
pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let mut raw = RawConfig::from_file(path)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    raw.resolve()
}

fn list(v: &[usize]) -> String {
    v.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
}

fn push_optimizer(s: &mut String, prefix: &str, o: &RmsPropConfig) {
    let _ = writeln!(s, "{prefix}.step_size = {}", fmt_f64(o.step_size));
    let _ = writeln!(s, "{prefix}.momentum = {}", fmt_f64(o.momentum));
    let _ = writeln!(s, "{prefix}.decay = {}", fmt_f64(o.decay));
    let _ = writeln!(s, "{prefix}.epsilon = {}", fmt_f64(o.epsilon));
}

fn push_epsilon(s: &mut String, e: &EpsilonSchedule) {
    let _ = writeln!(s, "epsilon.start = {}", fmt_f64(e.start));
    let _ = writeln!(s, "epsilon.end = {}", fmt_f64(e.end));
    let _ = writeln!(s, "epsilon.horizon = {}", e.horizon_frames);
}

impl RunConfig {
    /// Full snapshot with every key spelled out.
    pub fn to_cfg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "agent = {}", self.agent.name());
        match self.env.kind {
            EnvKind::Chain { n } => {
                let _ = writeln!(s, "env = chain\nenv.n = {n}");
            }
            EnvKind::Grid {
                width,
                height,
                encoding,
            } => {
                let enc = match encoding {
                    GridEncoding::Coordinates => "coordinates",
                    GridEncoding::OneHot => "onehot",
                };
                let _ = writeln!(
                    s,
                    "env = grid\nenv.width = {width}\nenv.height = {height}\nenv.encoding = {enc}"
                );
            }
        }
        let _ = writeln!(s, "env.reward_scale = {}", fmt_f64(self.env.reward_scale));
        let _ = writeln!(s, "env.frames_per_step = {}", self.env.frames_per_step);
        let _ = writeln!(s, "env.sticky = {}", fmt_f64(self.env.sticky));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        match &self.agent {
            AgentConfig::Comper(c) => {
                let _ = writeln!(s, "budget = {}", c.budget_frames);
                let _ = writeln!(s, "gamma = {}", fmt_f64(c.gamma));
                push_epsilon(&mut s, &c.epsilon);
                let _ = writeln!(s, "replay_start = {}", c.replay_start);
                let _ = writeln!(s, "terminal_mask = {}", c.terminal_mask);
                let _ = writeln!(s, "checkpoint_interval = {}", c.checkpoint_interval);
                let _ = writeln!(s, "qnet.hidden = {}", list(&c.hidden));
                push_optimizer(&mut s, "optimizer", &c.optimizer);
                let _ = writeln!(s, "comper.k = {}", c.k);
                let _ = writeln!(s, "comper.tf = {}", c.train_frequency);
                let _ = writeln!(s, "comper.utf = {}", c.update_target_frequency);
                let _ = writeln!(s, "comper.delta = {}", fmt_f64(c.delta));
                let _ = writeln!(s, "comper.sets_batch = {}", c.similar_sets_batch);
                let _ = writeln!(s, "comper.tm_capacity = {}", c.tm_capacity);
                let _ = writeln!(s, "qlstm.lstm = {}", list(&c.qlstm.lstm_widths));
                let _ = writeln!(s, "qlstm.dense = {}", list(&c.qlstm.dense_widths));
                let _ = writeln!(s, "qlstm.epochs = {}", c.qlstm.epochs);
                let _ = writeln!(s, "qlstm.minibatch = {}", c.qlstm.minibatch);
                push_optimizer(&mut s, "qlstm", &c.qlstm.optimizer);
            }
            AgentConfig::Dqn(c) => {
                let _ = writeln!(s, "budget = {}", c.budget_frames);
                let _ = writeln!(s, "gamma = {}", fmt_f64(c.gamma));
                push_epsilon(&mut s, &c.epsilon);
                let _ = writeln!(s, "replay_start = {}", c.replay_start);
                let _ = writeln!(s, "terminal_mask = {}", c.terminal_mask);
                let _ = writeln!(s, "checkpoint_interval = {}", c.checkpoint_interval);
                let _ = writeln!(s, "qnet.hidden = {}", list(&c.hidden));
                push_optimizer(&mut s, "optimizer", &c.optimizer);
                let _ = writeln!(s, "dqn.replay_capacity = {}", c.replay_capacity);
                let _ = writeln!(s, "dqn.target_period = {}", c.target_period);
                let _ = writeln!(s, "dqn.minibatch = {}", c.minibatch);
                let _ = writeln!(s, "dqn.update_frequency = {}", c.update_frequency);
            }
        }
        s
    }
}
