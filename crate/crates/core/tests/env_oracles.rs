#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::HashSet;

use common::TabularModel;
use comper::agents::{epsilon_at, EpsilonSchedule};
use comper::env::chain::{LEFT, RIGHT};
use comper::env::{ChainMdp, Environment, GridEncoding, SparseGrid, StickyActions, StickyConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn chain3_value_iteration() {
    let q = TabularModel::chain(3, 1.0).q_star(0.99);
    assert!((q[1][RIGHT] - 1.0).abs() < 1e-12);
    assert!((q[0][RIGHT] - 0.99).abs() < 1e-12);
    assert!((q[1][LEFT] - 0.9801).abs() < 1e-12);
    assert!((q[0][LEFT] - 0.9801).abs() < 1e-12);
}

#[test]
fn chain_optimal_policy_goes_right() {
    for n in 3..9 {
        let q = TabularModel::chain(n, 1.0).q_star(0.99);
        let greedy = TabularModel::greedy(&q[..n - 1]);
        assert!(greedy.iter().all(|&a| a == RIGHT), "n={n}: {greedy:?}");
        // Q*(s, right) = γ^(n-2-s)
        for s in 0..n - 1 {
            assert!((q[s][RIGHT] - 0.99f64.powi((n - 2 - s) as i32)).abs() < 1e-12);
        }
    }
}

#[test]
fn grid_value_is_discounted_manhattan_distance() {
    let (w, h) = (4, 3);
    let q = TabularModel::grid(w, h).q_star(0.9);
    for y in 0..h {
        for x in 0..w {
            if (x, y) == (w - 1, h - 1) {
                continue;
            }
            let d = (w - 1 - x) + (h - 1 - y);
            let v = q[y * w + x].iter().copied().fold(f64::MIN, f64::max);
            assert!((v - 0.9f64.powi(d as i32 - 1)).abs() < 1e-12, "({x},{y})");
        }
    }
}

/// Every transition the environment produces agrees with the tabular model.
#[test]
fn environments_agree_with_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 6;
    let model = TabularModel::chain(n, 2.5);
    let mut env = ChainMdp::with_reward(n, 2.5).unwrap();
    let mut seen = HashSet::new();
    let mut s = env.reset();
    for _ in 0..5_000 {
        let a = rng.random_range(0..2);
        let from = env.position();
        let step = env.step(a).unwrap();
        let (to, r, term) = model.next[from][a];
        assert_eq!((env.position(), step.reward, step.terminal), (to, r, term));
        assert_eq!(step.next_state, comper::StateVector::one_hot(n, to));
        seen.insert((from, a, r.to_bits(), to));
        s = if step.episode_over() { env.reset() } else { step.next_state };
    }
    let _ = s;
    assert_eq!(seen.len(), model.distinct_transitions(0));
    assert_eq!(seen.len(), (n - 1) * 2);

    let (w, h) = (3, 4);
    let model = TabularModel::grid(w, h);
    let mut env = SparseGrid::new(w, h, GridEncoding::OneHot).unwrap();
    env.reset();
    for _ in 0..5_000 {
        let a = rng.random_range(0..4);
        let (x, y) = env.position();
        let step = env.step(a).unwrap();
        let (to, r, term) = model.next[y * w + x][a];
        let (nx, ny) = env.position();
        assert_eq!((ny * w + nx, step.reward, step.terminal), (to, r, term));
        assert_eq!(step.next_state, env.encode(nx, ny));
        if step.episode_over() {
            env.reset();
        }
    }
}

#[test]
fn sticky_repeat_frequency() {
    for (varsigma, seed) in [(0.25, 1u64), (0.5, 2), (0.1, 3)] {
        let mut env = StickyActions::new(ChainMdp::new(8).unwrap(), StickyConfig { varsigma }, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        env.reset();
        while env.eligible_steps() < 100_000 {
            let s = env.step(rng.random_range(0..2)).unwrap();
            if s.episode_over() {
                env.reset();
            }
        }
        let freq = env.overrides() as f64 / env.eligible_steps() as f64;
        assert!((freq - varsigma).abs() < 0.01, "ς={varsigma}: {freq}");
    }
}

proptest! {
    #[test]
    fn epsilon_schedule_is_monotone_and_clamped(
        start in 0.5f64..=1.0,
        end in 0.0f64..0.5,
        horizon in 1u64..200_000,
        a in 0u64..400_000,
        b in 0u64..400_000,
    ) {
        let s = EpsilonSchedule { start, end, horizon_frames: horizon };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(epsilon_at(lo, &s) >= epsilon_at(hi, &s));
        prop_assert_eq!(epsilon_at(0, &s), start);
        prop_assert_eq!(epsilon_at(horizon + a, &s), end);
        let e = epsilon_at(a, &s);
        prop_assert!(e <= start && e >= end);
    }
}
