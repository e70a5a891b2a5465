use super::{check_action, EnvSpec, Environment, Step};
use crate::error::{Error, Result};
use crate::types::StateVector;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridEncoding {
    /// `(x / (w-1), y / (h-1))`.
    Coordinates,
    /// One-hot over `w·h` cells, index `y·w + x`.
    OneHot,
}

/// `w × h` grid from `(0, 0)` to the goal `(w-1, h-1)`. Entering the goal
/// pays 1 and ends the episode; moves into a wall leave the position as is.
/// Episodes are capped at `4 w h` steps.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    spec: EnvSpec,
    width: usize,
    height: usize,
    encoding: GridEncoding,
    x: usize,
    y: usize,
    steps: usize,
    done: bool,
}

impl SparseGrid {
    pub fn new(width: usize, height: usize, encoding: GridEncoding) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::config("env.width", "grid sides must be at least 2"));
        }
        let state_dim = match encoding {
            GridEncoding::Coordinates => 2,
            GridEncoding::OneHot => width * height,
        };
        Ok(SparseGrid {
            spec: EnvSpec {
                name: format!("grid{width}x{height}"),
                state_dim,
                action_count: 4,
                frames_per_step: 1,
            },
            width,
            height,
            encoding,
            x: 0,
            y: 0,
            steps: 0,
            done: true,
        })
    }

    pub fn with_frames_per_step(mut self, frames: u64) -> Self {
        self.spec.frames_per_step = frames;
        self
    }

    pub fn step_cap(&self) -> usize {
        4 * self.width * self.height
    }

    pub fn position(&self) -> (usize, usize) {
        (self.x, self.y)
    }

    pub fn encode(&self, x: usize, y: usize) -> StateVector {
        match self.encoding {
            GridEncoding::Coordinates => StateVector::new(vec![
                x as f64 / (self.width - 1) as f64,
                y as f64 / (self.height - 1) as f64,
            ]),
            GridEncoding::OneHot => StateVector::one_hot(self.width * self.height, y * self.width + x),
        }
    }
}

impl Environment for SparseGrid {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> StateVector {
        self.x = 0;
        self.y = 0;
        self.steps = 0;
        self.done = false;
        self.encode(0, 0)
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        check_action(&self.spec, action)?;
        if self.done {
            return Err(Error::Env("step after episode end".into()));
        }
        self.steps += 1;
        match action {
            UP => self.y = (self.y + 1).min(self.height - 1),
            DOWN => self.y = self.y.saturating_sub(1),
            LEFT => self.x = self.x.saturating_sub(1),
            _ => self.x = (self.x + 1).min(self.width - 1),
        }
        let terminal = self.x == self.width - 1 && self.y == self.height - 1;
        let truncated = !terminal && self.steps >= self.step_cap();
        self.done = terminal || truncated;
        Ok(Step {
            next_state: self.encode(self.x, self.y),
            reward: if terminal { 1.0 } else { 0.0 },
            terminal,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_path_on_2x2() {
        let mut g = SparseGrid::new(2, 2, GridEncoding::Coordinates).unwrap();
        assert_eq!(g.reset().0, vec![0.0, 0.0]);
        let s = g.step(RIGHT).unwrap();
        assert_eq!((s.reward, s.terminal), (0.0, false));
        let s = g.step(UP).unwrap();
        assert_eq!((s.reward, s.terminal), (1.0, true));
        assert_eq!(s.next_state.0, vec![1.0, 1.0]);
    }

    #[test]
    fn walls_clamp() {
        let mut g = SparseGrid::new(3, 2, GridEncoding::OneHot).unwrap();
        let s0 = g.reset();
        assert_eq!(g.step(DOWN).unwrap().next_state, s0);
        assert_eq!(g.step(LEFT).unwrap().next_state, s0);
        assert_eq!(g.position(), (0, 0));
        g.step(RIGHT).unwrap();
        g.step(RIGHT).unwrap();
        let s = g.step(RIGHT).unwrap();
        assert_eq!(g.position(), (2, 0));
        assert_eq!(s.next_state, g.encode(2, 0));
    }

    #[test]
    fn cap_truncates() {
        let mut g = SparseGrid::new(2, 2, GridEncoding::Coordinates).unwrap();
        g.reset();
        for i in 1..=16 {
            let s = g.step(LEFT).unwrap();
            assert_eq!(s.truncated, i == 16);
        }
        assert!(g.step(LEFT).is_err());
    }
}
