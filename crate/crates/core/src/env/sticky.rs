use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, Step};
use crate::error::{Error, Result};
use crate::types::StateVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickyConfig {
    /// Probability of repeating the previously executed action.
    pub varsigma: f64,
}

impl Default for StickyConfig {
    fn default() -> Self {
        StickyConfig { varsigma: 0.25 }
    }
}

/// With probability ς the previously executed action replaces the chosen
/// one. The first step of every episode always executes the chosen action.
#[derive(Debug, Clone)]
pub struct StickyActions<E> {
    inner: E,
    varsigma: f64,
    rng: ChaCha8Rng,
    last: Option<usize>,
    eligible_steps: u64,
    overrides: u64,
}

impl<E: Environment> StickyActions<E> {
    pub fn new(inner: E, config: StickyConfig, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.varsigma) {
            return Err(Error::config("env.sticky", "must lie in [0, 1]"));
        }
        Ok(StickyActions {
            inner,
            varsigma: config.varsigma,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
            eligible_steps: 0,
            overrides: 0,
        })
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Steps after the first of an episode, where a repeat could happen.
    pub fn eligible_steps(&self) -> u64 {
        self.eligible_steps
    }

    /// Steps on which the previous action was forced.
    pub fn overrides(&self) -> u64 {
        self.overrides
    }

    pub fn last_executed(&self) -> Option<usize> {
        self.last
    }
}

impl<E: Environment> Environment for StickyActions<E> {
    fn spec(&self) -> &EnvSpec {
        self.inner.spec()
    }

    fn reset(&mut self) -> StateVector {
        self.last = None;
        self.inner.reset()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let executed = match self.last {
            Some(prev) => {
                self.eligible_steps += 1;
                if self.rng.random::<f64>() < self.varsigma {
                    self.overrides += 1;
                    prev
                } else {
                    action
                }
            }
            None => action,
        };
        let step = self.inner.step(executed)?;
        self.last = Some(executed);
        Ok(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ChainMdp;

    #[test]
    fn zero_probability_is_pass_through() {
        let actions = [1, 0, 1, 1, 0, 1, 1];
        let mut plain = ChainMdp::new(5).unwrap();
        let mut wrapped = StickyActions::new(ChainMdp::new(5).unwrap(), StickyConfig { varsigma: 0.0 }, 3).unwrap();
        assert_eq!(plain.reset(), wrapped.reset());
        for a in actions {
            assert_eq!(plain.step(a).unwrap(), wrapped.step(a).unwrap());
        }
        assert_eq!(wrapped.overrides(), 0);
    }

    #[test]
    fn certain_repeat_locks_the_first_action() {
        let mut env = StickyActions::new(ChainMdp::new(5).unwrap(), StickyConfig { varsigma: 1.0 }, 3).unwrap();
        env.reset();
        env.step(0).unwrap();
        for _ in 0..20 {
            let s = env.step(1).unwrap();
            assert_eq!(env.last_executed(), Some(0));
            assert_eq!(s.next_state, StateVector::one_hot(5, 0));
        }
        // a new episode honours the first choice again
        env.reset();
        env.step(1).unwrap();
        assert_eq!(env.last_executed(), Some(1));
    }

    #[test]
    fn rejects_out_of_range_probability() {
        assert!(StickyActions::new(ChainMdp::new(3).unwrap(), StickyConfig { varsigma: 1.5 }, 0).is_err());
    }
}
