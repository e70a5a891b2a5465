//! Recurrent Q-target predictor and the reduced transition memory.
//!
//! Consumed similar-transition sets are turned into training pairs by
//! aligning each set's representative with the *next* Q-value in its
//! history: a history `[q1, .., qN]` yields `N - 1` pairs `(τ → q_{k+1})`.
//! The network is fit with mean-squared error and then predicts Q-targets
//! for the transitions kept in the [`ReducedTransitionMemory`].

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::memory::SimilarTransitionSet;
use crate::nn::{Gradients, LstmNet, Parameters, RmsPropConfig, RmsPropState};
use crate::par;
use crate::types::{encode_transition, feature_len, SetId, Transition, TransitionFeature};

/// Samples per minibatch below which gradients are computed sequentially.
const PARALLEL_MIN_BATCH: usize = 8;

/// One representative transition per set id, in first-insertion order.
#[derive(Debug, Clone, Default)]
pub struct ReducedTransitionMemory {
    entries: Vec<(SetId, Transition)>,
    position: HashMap<SetId, usize>,
}

impl ReducedTransitionMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: SetId) -> Option<&Transition> {
        self.position.get(&id).map(|&i| &self.entries[i].1)
    }

    pub fn entry(&self, i: usize) -> &(SetId, Transition) {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[(SetId, Transition)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = SetId> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn upsert(&mut self, id: SetId, t: Transition) {
        match self.position.get(&id) {
            Some(&i) => self.entries[i].1 = t,
            None => {
                self.position.insert(id, self.entries.len());
                self.entries.push((id, t));
            }
        }
    }
}

/// Upserts each consumed set's representative; other entries are kept.
pub fn produce_rtm(rtm: &mut ReducedTransitionMemory, consumed: &[SimilarTransitionSet]) {
    for set in consumed {
        rtm.upsert(set.set_id, set.representative.clone());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QlstmTrainPair {
    pub input: TransitionFeature,
    pub target: f64,
}

pub fn build_training_set(sets: &[SimilarTransitionSet]) -> Vec<QlstmTrainPair> {
    let mut pairs = Vec::new();
    for set in sets {
        if set.q_history.len() < 2 {
            continue;
        }
        let input = encode_transition(&set.representative);
        pairs.extend(set.q_history[1..].iter().map(|&q| QlstmTrainPair {
            input: input.clone(),
            target: q,
        }));
    }
    pairs
}

pub fn predict_q(net: &LstmNet, t: &Transition) -> Result<f64> {
    net.forward(encode_transition(t).as_slice())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrainReport {
    pub pairs: usize,
    pub optimizer_steps: usize,
    /// Mean of `½(prediction − target)²` over every pair seen, evaluated
    /// before the step that used it.
    pub mean_loss: f64,
}

/// Minibatch MSE descent for `epochs` passes, shuffling with `rng`.
pub fn train<R: Rng + ?Sized>(
    net: &mut LstmNet,
    pairs: &[QlstmTrainPair],
    opt: &mut RmsPropState,
    epochs: usize,
    minibatch: usize,
    rng: &mut R,
) -> Result<TrainReport> {
    if pairs.is_empty() || epochs == 0 {
        return Ok(TrainReport::default());
    }
    let minibatch = minibatch.max(1);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut loss_sum = 0.0;
    let mut seen = 0usize;
    let mut steps = 0usize;
    for _ in 0..epochs {
        order.shuffle(rng);
        for batch in order.chunks(minibatch) {
            let (loss, grads) = minibatch_gradient(net, pairs, batch)?;
            loss_sum += loss;
            seen += batch.len();
            opt.step(net, &grads)?;
            steps += 1;
        }
    }
    Ok(TrainReport {
        pairs: pairs.len(),
        optimizer_steps: steps,
        mean_loss: loss_sum / seen as f64,
    })
}

/// Summed loss and mean gradient of `½(pred − target)²` over `batch`.
fn minibatch_gradient(
    net: &LstmNet,
    pairs: &[QlstmTrainPair],
    batch: &[usize],
) -> Result<(f64, Gradients)> {
    let per_sample = par::map_indexed(batch.len(), PARALLEL_MIN_BATCH, |k| {
        let p = &pairs[batch[k]];
        net.backward(p.input.as_slice(), 1.0).map(|(pred, mut g)| {
            let err = pred - p.target;
            g.scale(err);
            (0.5 * err * err, g)
        })
    });
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(batch.len());
    for r in per_sample {
        let (l, g) = r?;
        loss += l;
        grads.push(g);
    }
    let mut total = Gradients::sum_ordered(grads).expect("non-empty minibatch");
    total.scale(1.0 / batch.len() as f64);
    Ok((loss, total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QlstmConfig {
    pub lstm_widths: Vec<usize>,
    pub dense_widths: Vec<usize>,
    pub optimizer: RmsPropConfig,
    pub epochs: usize,
    pub minibatch: usize,
}

impl Default for QlstmConfig {
    /// Recurrent widths scaled down from 64/32/32 with an 18→8 dense layer.
    fn default() -> Self {
        QlstmConfig {
            lstm_widths: vec![32, 16, 16],
            dense_widths: vec![8],
            optimizer: RmsPropConfig::q_target(),
            epochs: 1,
            minibatch: 16,
        }
    }
}

/// The predictor network with its optimizer state.
#[derive(Debug, Clone)]
pub struct Qlstm {
    pub net: LstmNet,
    pub optimizer: RmsPropState,
    pub config: QlstmConfig,
}

impl Qlstm {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, config: QlstmConfig, rng: &mut R) -> Self {
        let net = LstmNet::new(
            feature_len(state_dim),
            &config.lstm_widths,
            &config.dense_widths,
            rng,
        );
        let optimizer = RmsPropState::new(config.optimizer, &net);
        Qlstm {
            net,
            optimizer,
            config,
        }
    }

    pub fn train<R: Rng + ?Sized>(
        &mut self,
        pairs: &[QlstmTrainPair],
        rng: &mut R,
    ) -> Result<TrainReport> {
        train(
            &mut self.net,
            pairs,
            &mut self.optimizer,
            self.config.epochs,
            self.config.minibatch,
            rng,
        )
    }

    pub fn predict(&self, t: &Transition) -> Result<f64> {
        predict_q(&self.net, t)
    }

    /// Predictions for every RTM entry, in entry order.
    pub fn predict_all(&self, rtm: &ReducedTransitionMemory) -> Result<Vec<f64>> {
        par::map_indexed(rtm.len(), 64, |i| self.predict(&rtm.entry(i).1))
            .into_iter()
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }
}
