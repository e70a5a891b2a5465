//! On-disk artifacts of a run: per-trial CSV logs and parameter checkpoints.
//!
//! Layout inside an output directory:
//! `trial_<i>.csv`, `qlstm_<i>.csv`, `checkpoint_<i>_<step>.bin`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::log::{EpisodeRow, QlstmRoundRow, RunLog, RunSink};
use crate::error::{Error, Result};
use crate::nn::checkpoint::{write_checkpoint, NetRef};

pub fn trial_log_path(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("trial_{trial}.csv"))
}

pub fn qlstm_log_path(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("qlstm_{trial}.csv"))
}

pub fn checkpoint_path(dir: &Path, trial: usize, step: u64) -> PathBuf {
    dir.join(format!("checkpoint_{trial}_{step}.bin"))
}

/// Writes one trial's artifacts, flushing after each row so an interrupted
/// run leaves complete lines behind.
pub struct CsvSink {
    dir: PathBuf,
    trial: usize,
    episodes: csv::Writer<File>,
    rounds: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(dir: &Path, trial: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut episodes = csv::Writer::from_path(trial_log_path(dir, trial))?;
        episodes.write_record(EpisodeRow::HEADER)?;
        episodes.flush()?;
        let mut rounds = csv::Writer::from_path(qlstm_log_path(dir, trial))?;
        rounds.write_record(QlstmRoundRow::HEADER)?;
        rounds.flush()?;
        Ok(CsvSink {
            dir: dir.to_path_buf(),
            trial,
            episodes,
            rounds,
        })
    }
}

impl RunSink for CsvSink {
    fn episode(&mut self, row: &EpisodeRow) -> Result<()> {
        self.episodes.write_record(row.record())?;
        self.episodes.flush()?;
        Ok(())
    }

    fn qlstm_round(&mut self, row: &QlstmRoundRow) -> Result<()> {
        self.rounds.write_record(row.record())?;
        self.rounds.flush()?;
        Ok(())
    }

    fn checkpoint(&mut self, step: u64, nets: &[NetRef<'_>]) -> Result<()> {
        let file = File::create(checkpoint_path(&self.dir, self.trial, step))?;
        let mut w = BufWriter::new(file);
        write_checkpoint(&mut w, nets)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Format {
        what: "trial log",
        message: format!("{}: missing column {}", path.display(), EpisodeRow::HEADER[i]),
    })?;
    raw.parse().map_err(|_| Error::Format {
        what: "trial log",
        message: format!(
            "{}: bad value {raw:?} in column {}",
            path.display(),
            EpisodeRow::HEADER[i]
        ),
    })
}

/// Reads the episode rows of a `trial_<i>.csv` file.
pub fn read_trial_log(path: &Path) -> Result<RunLog> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(EpisodeRow::HEADER.iter().copied()) {
        return Err(Error::Format {
            what: "trial log",
            message: format!("{}: unexpected header", path.display()),
        });
    }
    let mut log = RunLog::default();
    for rec in reader.records() {
        let rec = rec?;
        log.episodes.push(EpisodeRow {
            trial: field(&rec, 0, path)?,
            episode: field(&rec, 1, path)?,
            episode_frames: field(&rec, 2, path)?,
            cumulative_frames: field(&rec, 3, path)?,
            score: field(&rec, 4, path)?,
            epsilon: field(&rec, 5, path)?,
            tm_sets: field(&rec, 6, path)?,
            rtm_size: field(&rec, 7, path)?,
            similarity_hits: field(&rec, 8, path)?,
            qlstm_rounds: field(&rec, 9, path)?,
        });
    }
    Ok(log)
}

/// Trial logs in `dir`, ordered by trial index.
pub fn list_trial_logs(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut found = Vec::new();
    if dir.is_dir() {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let idx = name
                .strip_prefix("trial_")
                .and_then(|s| s.strip_suffix(".csv"))
                .and_then(|s| s.parse::<usize>().ok());
            if let Some(i) = idx {
                found.push((i, path));
            }
        }
    }
    if found.is_empty() {
        return Err(Error::NoLogs {
            dir: dir.to_path_buf(),
        });
    }
    found.sort();
    Ok(found)
}

pub fn read_trial_logs(dir: &Path) -> Result<Vec<RunLog>> {
    list_trial_logs(dir)?
        .iter()
        .map(|(_, p)| read_trial_log(p))
        .collect()
}
