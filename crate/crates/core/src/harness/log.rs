//! Per-run records and the sink interface the training loops write through.

use crate::error::Result;
use crate::nn::checkpoint::NetRef;

/// One finished episode. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub trial: usize,
    /// 1-based.
    pub episode: usize,
    pub episode_frames: u64,
    pub cumulative_frames: u64,
    /// Undiscounted sum of the episode's rewards.
    pub score: f64,
    pub epsilon: f64,
    pub tm_sets: usize,
    pub rtm_size: usize,
    pub similarity_hits: u64,
    pub qlstm_rounds: u64,
}

impl EpisodeRow {
    pub const HEADER: [&'static str; 10] = [
        "trial",
        "episode",
        "episode_frames",
        "cumulative_frames",
        "score",
        "epsilon",
        "tm_sets",
        "rtm_size",
        "similarity_hits",
        "qlstm_rounds",
    ];

    pub fn record(&self) -> [String; 10] {
        [
            self.trial.to_string(),
            self.episode.to_string(),
            self.episode_frames.to_string(),
            self.cumulative_frames.to_string(),
            fmt_f64(self.score),
            fmt_f64(self.epsilon),
            self.tm_sets.to_string(),
            self.rtm_size.to_string(),
            self.similarity_hits.to_string(),
            self.qlstm_rounds.to_string(),
        ]
    }
}

/// One training round of the Q-target predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct QlstmRoundRow {
    pub trial: usize,
    /// 1-based.
    pub round: u64,
    /// Agent step at which the round ran.
    pub step: u64,
    pub sets_consumed: usize,
    pub pairs: usize,
    pub mean_loss: f64,
    pub rtm_size: usize,
}

impl QlstmRoundRow {
    pub const HEADER: [&'static str; 7] = [
        "trial",
        "round",
        "step",
        "sets_consumed",
        "pairs",
        "mean_loss",
        "rtm_size",
    ];

    pub fn record(&self) -> [String; 7] {
        [
            self.trial.to_string(),
            self.round.to_string(),
            self.step.to_string(),
            self.sets_consumed.to_string(),
            self.pairs.to_string(),
            fmt_f64(self.mean_loss),
            self.rtm_size.to_string(),
        ]
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub episodes: Vec<EpisodeRow>,
    pub qlstm_rounds: Vec<QlstmRoundRow>,
    pub total_steps: u64,
}

impl RunLog {
    pub fn total_frames(&self) -> u64 {
        self.episodes.last().map_or(0, |e| e.cumulative_frames)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.score).collect()
    }
}

pub trait RunSink {
    fn episode(&mut self, row: &EpisodeRow) -> Result<()>;
    fn qlstm_round(&mut self, row: &QlstmRoundRow) -> Result<()>;
    fn checkpoint(&mut self, step: u64, nets: &[NetRef<'_>]) -> Result<()>;
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl RunSink for NullSink {
    fn episode(&mut self, _: &EpisodeRow) -> Result<()> {
        Ok(())
    }
    fn qlstm_round(&mut self, _: &QlstmRoundRow) -> Result<()> {
        Ok(())
    }
    fn checkpoint(&mut self, _: u64, _: &[NetRef<'_>]) -> Result<()> {
        Ok(())
    }
}
