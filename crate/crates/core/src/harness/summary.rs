//! Tertile summaries of episode scores and side-by-side comparisons.
//!
//! Each trial's episodes are split into three contiguous blocks whose sizes
//! differ by at most one, remainders going to the earlier blocks. At the end
//! of every block the last `min(k, block size)` scores are taken; the final
//! row takes the last `min(k, episodes)` scores. Selected scores are pooled
//! across trials and reported as mean and population standard deviation.

use std::fmt::Write as _;

use super::log::{fmt_f64, RunLog};
use crate::error::{Error, Result};

pub const TERTILES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointStat {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    /// Number of pooled scores.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub tertiles: Vec<CheckpointStat>,
    pub last: CheckpointStat,
    pub trial_count: usize,
    pub k_last: usize,
}

impl Summary {
    pub fn rows(&self) -> impl Iterator<Item = &CheckpointStat> {
        self.tertiles.iter().chain(std::iter::once(&self.last))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("checkpoint,mean,std,count,trials,k_last\n");
        for r in self.rows() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.label,
                fmt_f64(r.mean),
                fmt_f64(r.std),
                r.count,
                self.trial_count,
                self.k_last
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("trials: {}  last-k: {}\n", self.trial_count, self.k_last);
        let _ = writeln!(s, "{:<12} {:>14} {:>14} {:>7}", "checkpoint", "mean", "std", "count");
        for r in self.rows() {
            let _ = writeln!(
                s,
                "{:<12} {:>14} {:>14} {:>7}",
                r.label,
                fmt_f64(r.mean),
                fmt_f64(r.std),
                r.count
            );
        }
        s
    }
}

/// Block sizes for `n` episodes, earlier blocks taking the remainder.
pub fn tertile_sizes(n: usize) -> [usize; TERTILES] {
    let base = n / TERTILES;
    let rem = n % TERTILES;
    let mut sizes = [base; TERTILES];
    for s in sizes.iter_mut().take(rem) {
        *s += 1;
    }
    sizes
}

/// Mean and population standard deviation. Values are sorted first so the
/// result does not depend on trial order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn summarize(logs: &[RunLog], k_last: usize) -> Result<Summary> {
    if logs.is_empty() {
        return Err(Error::Report("no trials to summarize".into()));
    }
    if k_last == 0 {
        return Err(Error::config("k_last", "must be positive"));
    }
    let mut pools: Vec<Vec<f64>> = vec![Vec::new(); TERTILES];
    let mut last_pool = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        let scores = log.scores();
        if scores.len() < TERTILES {
            return Err(Error::Report(format!(
                "trial {i} has {} episodes; at least {TERTILES} are needed",
                scores.len()
            )));
        }
        let mut end = 0;
        for (pool, size) in pools.iter_mut().zip(tertile_sizes(scores.len())) {
            end += size;
            let take = k_last.min(size);
            pool.extend_from_slice(&scores[end - take..end]);
        }
        let take = k_last.min(scores.len());
        last_pool.extend_from_slice(&scores[scores.len() - take..]);
    }
    let stat = |label: String, pool: &[f64]| {
        let (mean, std) = mean_std(pool);
        CheckpointStat {
            label,
            mean,
            std,
            count: pool.len(),
        }
    };
    Ok(Summary {
        tertiles: pools
            .iter()
            .enumerate()
            .map(|(j, p)| stat(format!("tertile{}", j + 1), p))
            .collect(),
        last: stat("final".into(), &last_pool),
        trial_count: logs.len(),
        k_last,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub mean_a: f64,
    pub std_a: f64,
    pub mean_b: f64,
    pub std_b: f64,
    /// `mean_b − mean_a`.
    pub delta: f64,
    /// `"a"`, `"b"` or `"tie"`.
    pub better: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("checkpoint,mean_a,std_a,mean_b,std_b,delta,better\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.label,
                fmt_f64(r.mean_a),
                fmt_f64(r.std_a),
                fmt_f64(r.mean_b),
                fmt_f64(r.std_b),
                fmt_f64(r.delta),
                r.better
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6}\n",
            "checkpoint", "mean_a", "std_a", "mean_b", "std_b", "delta", "better"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6}",
                r.label,
                fmt_f64(r.mean_a),
                fmt_f64(r.std_a),
                fmt_f64(r.mean_b),
                fmt_f64(r.std_b),
                fmt_f64(r.delta),
                r.better
            );
        }
        s
    }
}

pub fn compare(a: &Summary, b: &Summary) -> Result<ComparisonReport> {
    if a.tertiles.len() != b.tertiles.len() {
        return Err(Error::Report(format!(
            "checkpoint counts differ: {} vs {}",
            a.tertiles.len(),
            b.tertiles.len()
        )));
    }
    let rows = a
        .rows()
        .zip(b.rows())
        .map(|(x, y)| ComparisonRow {
            label: x.label.clone(),
            mean_a: x.mean,
            std_a: x.std,
            mean_b: y.mean,
            std_b: y.std,
            delta: y.mean - x.mean,
            better: if y.mean > x.mean {
                "b"
            } else if x.mean > y.mean {
                "a"
            } else {
                "tie"
            },
        })
        .collect();
    Ok(ComparisonReport { rows })
}
