//! COMPER: Q-learning with a compact transition memory.
//!
//! Transitions are grouped into sets of near-identical feature vectors by a
//! threshold nearest-neighbour index. Each set keeps the history of Q-values
//! observed for it. A small LSTM learns to map a transition to the next value
//! in its set's history and stands in for the frozen target network of DQN,
//! while one representative per set forms the reduced memory the Q-network
//! samples from.
//!
//! The crate also ships a DQN baseline, toy environments, a multi-trial
//! harness with offline summaries, and the `comper` command-line tool.

pub mod agents;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod index;
pub mod memory;
pub mod nn;
pub mod par;
pub mod qlstm;
pub mod types;

pub use error::{Error, Result};
pub use index::TransitionMemoryIndex;
pub use memory::{SimilarTransitionSet, TransitionMemory};
pub use qlstm::{Qlstm, ReducedTransitionMemory};
pub use types::{SetId, StateVector, Transition, TransitionFeature};
