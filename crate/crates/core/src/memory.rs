//! Transition memory: similar-transition sets keyed by [`SetId`], each with
//! the ordered history of Q-values observed for it.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::index::TransitionMemoryIndex;
use crate::types::{feature_len, SetId, Transition};

/// Default cap on the number of live sets.
pub const DEFAULT_CAPACITY: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarTransitionSet {
    pub set_id: SetId,
    pub representative: Transition,
    /// Oldest first.
    pub q_history: Vec<f64>,
    pub created_at: u64,
    pub last_updated_at: u64,
}

/// Cumulative counters; none of them reset when sets are consumed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryCounters {
    pub stores: u64,
    pub similarity_hits: u64,
    pub sets_created: u64,
    pub sets_recreated: u64,
    pub sets_consumed: u64,
    pub q_values_consumed: u64,
    pub evictions: u64,
    pub q_values_evicted: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SizeDistribution {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MemoryStats {
    pub set_count: usize,
    pub sizes: SizeDistribution,
    pub similarity_hits: u64,
    pub evictions: u64,
    pub ids_issued: u64,
}

#[derive(Debug, Clone)]
pub struct TransitionMemory {
    index: TransitionMemoryIndex,
    sets: BTreeMap<SetId, SimilarTransitionSet>,
    // (last_updated_at, id) for LRU eviction
    recency: BTreeSet<(u64, SetId)>,
    capacity: usize,
    clock: u64,
    counters: MemoryCounters,
}

impl TransitionMemory {
    pub fn new(state_dim: usize, capacity: usize) -> Self {
        assert!(capacity > 0, "transition memory capacity must be positive");
        TransitionMemory {
            index: TransitionMemoryIndex::new(feature_len(state_dim)),
            sets: BTreeMap::new(),
            recency: BTreeSet::new(),
            capacity,
            clock: 0,
            counters: MemoryCounters::default(),
        }
    }

    pub fn index(&self) -> &TransitionMemoryIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, id: SetId) -> Option<&SimilarTransitionSet> {
        self.sets.get(&id)
    }

    pub fn sets(&self) -> impl Iterator<Item = &SimilarTransitionSet> {
        self.sets.values()
    }

    pub fn counters(&self) -> MemoryCounters {
        self.counters
    }

    /// Routes `(t, q)` to its similar-transition set, creating the set when
    /// the index has no feature within `delta`.
    ///
    /// A set whose id is known to the index but which was consumed earlier is
    /// re-created under the same id with `t` as representative.
    pub fn store_transition(&mut self, t: Transition, q: f64, delta: f64) -> Result<SetId> {
        if !q.is_finite() {
            return Err(Error::NonFinite("Q-value"));
        }
        let feature = t.feature();
        let mut id = self.index.get_index(&feature, delta)?;
        self.clock += 1;
        self.counters.stores += 1;
        let now = self.clock;

        if id.is_none() {
            id = self.index.update_index(&feature)?;
            self.counters.sets_created += 1;
            self.insert_new(id, t, q, now);
        } else if let Some(set) = self.sets.get_mut(&id) {
            self.recency.remove(&(set.last_updated_at, id));
            set.q_history.push(q);
            set.last_updated_at = now;
            self.recency.insert((now, id));
            self.counters.similarity_hits += 1;
        } else {
            self.counters.sets_recreated += 1;
            self.insert_new(id, t, q, now);
        }
        Ok(id)
    }

    fn insert_new(&mut self, id: SetId, t: Transition, q: f64, now: u64) {
        if self.sets.len() >= self.capacity {
            self.evict_oldest();
        }
        self.sets.insert(
            id,
            SimilarTransitionSet {
                set_id: id,
                representative: t,
                q_history: vec![q],
                created_at: now,
                last_updated_at: now,
            },
        );
        self.recency.insert((now, id));
    }

    fn evict_oldest(&mut self) {
        if let Some((_, id)) = self.recency.pop_first() {
            if let Some(set) = self.sets.remove(&id) {
                self.counters.evictions += 1;
                self.counters.q_values_evicted += set.q_history.len() as u64;
            }
        }
    }

    /// Removes and returns `min(batch, len)` sets chosen uniformly without
    /// replacement, ordered by id. The index is left untouched so consumed
    /// sets keep their ids if the transition shows up again.
    pub fn take_training_sets<R: Rng + ?Sized>(
        &mut self,
        batch: usize,
        rng: &mut R,
    ) -> Vec<SimilarTransitionSet> {
        let chosen: Vec<SetId> = if batch >= self.sets.len() {
            self.sets.keys().copied().collect()
        } else {
            let keys: Vec<SetId> = self.sets.keys().copied().collect();
            let mut picked: Vec<SetId> = rand::seq::index::sample(rng, keys.len(), batch)
                .into_iter()
                .map(|i| keys[i])
                .collect();
            picked.sort_unstable();
            picked
        };
        let mut out = Vec::with_capacity(chosen.len());
        for id in chosen {
            let set = self.sets.remove(&id).expect("chosen id is live");
            self.recency.remove(&(set.last_updated_at, id));
            self.counters.sets_consumed += 1;
            self.counters.q_values_consumed += set.q_history.len() as u64;
            out.push(set);
        }
        out
    }

    pub fn memory_stats(&self) -> MemoryStats {
        let mut sizes = SizeDistribution::default();
        if !self.sets.is_empty() {
            sizes.min = usize::MAX;
            for s in self.sets.values() {
                let n = s.q_history.len();
                sizes.min = sizes.min.min(n);
                sizes.max = sizes.max.max(n);
                sizes.total += n;
            }
            sizes.mean = sizes.total as f64 / self.sets.len() as f64;
        }
        MemoryStats {
            set_count: self.sets.len(),
            sizes,
            similarity_hits: self.counters.similarity_hits,
            evictions: self.counters.evictions,
            ids_issued: self.index.len() as u64,
        }
    }
}
