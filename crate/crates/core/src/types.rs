//! Shared domain types and the transition feature encoding.
//!
//! The feature layout is fixed as `[prev_state.., action, reward, next_state..]`,
//! giving `2 * state_dim + 2` entries. The terminal flag is not part of the
//! feature; it only affects bootstrapping in the TD update.

use std::fmt;

/// An environment observation. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        StateVector(values)
    }

    pub fn one_hot(len: usize, hot: usize) -> Self {
        let mut v = vec![0.0; len];
        v[hot] = 1.0;
        StateVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One step of experience: `(s, a, r, s')` plus whether `s'` is final.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub prev_state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateVector,
    pub terminal: bool,
}

impl Transition {
    pub fn new(
        prev_state: StateVector,
        action: usize,
        reward: f64,
        next_state: StateVector,
        terminal: bool,
    ) -> Self {
        debug_assert_eq!(prev_state.dim(), next_state.dim());
        debug_assert!(reward.is_finite());
        Transition {
            prev_state,
            action,
            reward,
            next_state,
            terminal,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.prev_state.dim()
    }

    pub fn feature(&self) -> TransitionFeature {
        encode_transition(self)
    }
}

/// Flat encoding of a transition, length `2 * state_dim + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionFeature(pub Vec<f64>);

impl TransitionFeature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn state_dim(&self) -> usize {
        (self.0.len() - 2) / 2
    }

    pub fn action(&self) -> f64 {
        self.0[self.state_dim()]
    }

    pub fn reward(&self) -> f64 {
        self.0[self.state_dim() + 1]
    }
}

pub fn feature_len(state_dim: usize) -> usize {
    2 * state_dim + 2
}

pub fn encode_transition(t: &Transition) -> TransitionFeature {
    let dim = t.state_dim();
    let mut v = Vec::with_capacity(feature_len(dim));
    v.extend_from_slice(t.prev_state.as_slice());
    v.push(t.action as f64);
    v.push(t.reward);
    v.extend_from_slice(t.next_state.as_slice());
    TransitionFeature(v)
}

/// Identifier of a similar-transition set. Issued from 1; 0 means "not found".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetId(pub u64);

impl SetId {
    pub const NONE: SetId = SetId(0);

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tr(s: &[f64], a: usize, r: f64, s2: &[f64]) -> Transition {
        Transition::new(
            StateVector::new(s.to_vec()),
            a,
            r,
            StateVector::new(s2.to_vec()),
            false,
        )
    }

    #[test]
    fn layout_matches_tuple_order() {
        let f = encode_transition(&tr(&[0.0, 1.0], 3, 0.5, &[1.0, 0.0]));
        assert_eq!(f.0, vec![0.0, 1.0, 3.0, 0.5, 1.0, 0.0]);
        assert_eq!(f.len(), feature_len(2));
    }

    #[test]
    fn all_zero_transition() {
        let f = encode_transition(&tr(&[0.0], 0, 0.0, &[0.0]));
        assert_eq!(f.0, vec![0.0; 4]);
    }

    #[test]
    fn terminal_flag_is_not_encoded() {
        let mut t = tr(&[1.0], 1, 1.0, &[2.0]);
        let a = encode_transition(&t);
        t.terminal = true;
        assert_eq!(a, encode_transition(&t));
    }

    fn transition_strategy() -> impl Strategy<Value = (usize, Transition)> {
        (1usize..6).prop_flat_map(|dim| {
            (
                prop::collection::vec(-10.0f64..10.0, dim),
                0usize..18,
                -5.0f64..5.0,
                prop::collection::vec(-10.0f64..10.0, dim),
            )
                .prop_map(move |(s, a, r, s2)| (dim, tr(&s, a, r, &s2)))
        })
    }

    proptest! {
        #[test]
        fn encoding_round_trips_action_and_reward((dim, t) in transition_strategy()) {
            let f = encode_transition(&t);
            prop_assert_eq!(f.len(), 2 * dim + 2);
            prop_assert_eq!(f.state_dim(), dim);
            prop_assert_eq!(f.action() as usize, t.action);
            prop_assert_eq!(f.reward(), t.reward);
            prop_assert_eq!(&f.0[..dim], t.prev_state.as_slice());
            prop_assert_eq!(&f.0[dim + 2..], t.next_state.as_slice());
        }

        #[test]
        fn distinct_transitions_have_distinct_features(
            (_, a) in transition_strategy(),
            (_, b) in transition_strategy(),
        ) {
            let same_tuple = a.prev_state == b.prev_state
                && a.action == b.action
                && a.reward == b.reward
                && a.next_state == b.next_state;
            prop_assert_eq!(same_tuple, encode_transition(&a) == encode_transition(&b));
        }
    }
}
