//! RMSProp with optional momentum.
//!
//! For every parameter `θ` with gradient `g`:
//!
//! ```text
//! s ← ρ·s + (1 − ρ)·g²
//! d ← g / sqrt(s + ε)
//! m ← μ·m + d            (only when μ > 0; otherwise m = d)
//! θ ← θ − α·m
//! ```
//!
//! Two parameterisations are used. The Q-network variant uses gradient
//! momentum μ = 0.95, squared-gradient momentum ρ = 0.95 and a minimum
//! squared gradient ε = 0.01 added under the root. The recurrent Q-target
//! predictor uses the momentum-free variant with decay ρ = 0.9 and
//! ε = 1e-10. Both step with α = 0.00025.

use super::{Gradients, Parameters};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub step_size: f64,
    pub momentum: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl RmsPropConfig {
    /// Q-network optimizer.
    pub const fn q_network() -> Self {
        RmsPropConfig {
            step_size: 0.000_25,
            momentum: 0.95,
            decay: 0.95,
            epsilon: 0.01,
        }
    }

    /// Recurrent Q-target predictor optimizer.
    pub const fn q_target() -> Self {
        RmsPropConfig {
            step_size: 0.000_25,
            momentum: 0.0,
            decay: 0.9,
            epsilon: 1e-10,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err("step size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err("momentum must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err("decay must lie in [0, 1)".into());
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err("epsilon must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub config: RmsPropConfig,
    pub mean_square: Vec<Vec<f64>>,
    /// Empty when momentum is zero.
    pub momentum: Vec<Vec<f64>>,
    pub steps: u64,
}

impl RmsPropState {
    pub fn new<P: Parameters + ?Sized>(config: RmsPropConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        let momentum = if config.momentum > 0.0 {
            zeros.clone()
        } else {
            Vec::new()
        };
        RmsPropState {
            config,
            mean_square: zeros,
            momentum,
            steps: 0,
        }
    }

    /// One descent step along `grads`.
    pub fn step<P: Parameters + ?Sized>(&mut self, params: &mut P, grads: &Gradients) -> Result<()> {
        if !grads.matches(params) || self.mean_square.len() != grads.tensors.len() {
            return Err(Error::shape("optimizer state, parameters and gradients differ in shape"));
        }
        let RmsPropConfig {
            step_size,
            momentum,
            decay,
            epsilon,
        } = self.config;
        let use_momentum = momentum > 0.0;
        for (k, theta) in params.tensors_mut().into_iter().enumerate() {
            let g = &grads.tensors[k];
            let s = &mut self.mean_square[k];
            if s.len() != theta.len() {
                return Err(Error::shape("optimizer accumulator length differs"));
            }
            for j in 0..theta.len() {
                s[j] = decay * s[j] + (1.0 - decay) * g[j] * g[j];
                let d = g[j] / (s[j] + epsilon).sqrt();
                let update = if use_momentum {
                    let m = &mut self.momentum[k][j];
                    *m = momentum * *m + d;
                    *m
                } else {
                    d
                };
                theta[j] -= step_size * update;
            }
        }
        self.steps += 1;
        Ok(())
    }
}

pub fn rmsprop_step<P: Parameters + ?Sized>(
    params: &mut P,
    grads: &Gradients,
    state: &mut RmsPropState,
) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(Vec<f64>);

    impl Parameters for Scalar {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
        fn shapes(&self) -> Vec<Vec<usize>> {
            vec![vec![self.0.len()]]
        }
    }

    fn grad(v: f64) -> Gradients {
        Gradients {
            tensors: vec![vec![v]],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for cfg in [RmsPropConfig::q_network(), RmsPropConfig::q_target()] {
            let mut p = Scalar(vec![1.5]);
            let mut st = RmsPropState::new(cfg, &p);
            for _ in 0..5 {
                st.step(&mut p, &grad(0.0)).unwrap();
            }
            assert_eq!(p.0, vec![1.5]);
        }
    }

    #[test]
    fn first_step_from_zeroed_state() {
        let cfg = RmsPropConfig::q_target();
        let mut p = Scalar(vec![0.0]);
        let mut st = RmsPropState::new(cfg, &p);
        let g = 0.3;
        st.step(&mut p, &grad(g)).unwrap();
        let acc = (1.0 - 0.9) * g * g;
        assert!((st.mean_square[0][0] - acc).abs() < 1e-18);
        let expected = -0.000_25 * g / (acc + 1e-10).sqrt();
        assert!((p.0[0] - expected).abs() < 1e-15, "{} vs {expected}", p.0[0]);
    }

    #[test]
    fn momentum_accumulates() {
        let cfg = RmsPropConfig::q_network();
        let mut p = Scalar(vec![0.0]);
        let mut st = RmsPropState::new(cfg, &p);
        st.step(&mut p, &grad(1.0)).unwrap();
        let s1: f64 = 0.05;
        let d1 = 1.0 / (s1 + 0.01).sqrt();
        assert!((p.0[0] + 0.000_25 * d1).abs() < 1e-15);
        st.step(&mut p, &grad(1.0)).unwrap();
        let s2 = 0.95 * s1 + 0.05;
        let m2 = 0.95 * d1 + 1.0 / (s2 + 0.01).sqrt();
        assert!((p.0[0] + 0.000_25 * (d1 + m2)).abs() < 1e-15);
    }

    #[test]
    fn the_two_variants_diverge_on_the_same_stream() {
        let stream = [0.5, -0.2, 0.9, 0.1, -0.7, 0.3];
        let run = |cfg| {
            let mut p = Scalar(vec![0.0]);
            let mut st = RmsPropState::new(cfg, &p);
            stream
                .iter()
                .map(|&g| {
                    st.step(&mut p, &grad(g)).unwrap();
                    p.0[0]
                })
                .collect::<Vec<_>>()
        };
        let a = run(RmsPropConfig::q_network());
        let b = run(RmsPropConfig::q_target());
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = Scalar(vec![0.0, 1.0]);
        let mut st = RmsPropState::new(RmsPropConfig::q_target(), &p);
        assert!(st.step(&mut p, &grad(1.0)).is_err());
    }
}
