//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 for invalid configuration or input, 2 for
//! faults during a run.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::harness::files::{list_trial_logs, read_trial_log, read_trial_logs, CsvSink};
use crate::harness::{compare, run_trials, summarize, ComparisonReport, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAULT: i32 = 2;

pub const RESOLVED_CONFIG: &str = "resolved.cfg";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

#[derive(Debug, Parser)]
#[command(name = "comper", version, about = "Train and evaluate COMPER and DQN agents on small MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run trials from a config file and write logs into the output directory.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// `key=value`, applied after the file; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (same as `--override out=...`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (same as `--override seed=...`).
        #[arg(long)]
        seed: Option<u64>,
        /// Run trials on a thread pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Summarize the trial logs of one run directory.
    Summarize {
        dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        k_last: usize,
        /// Where to write summary.csv and summary.txt; defaults to `dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the summaries of two run directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        #[arg(long, default_value_t = 3)]
        k_last: usize,
        /// Also write the comparison as CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print per-trial totals from a run directory.
    Inspect { dir: PathBuf },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::NoLogs { .. } => EXIT_INVALID,
        _ => EXIT_FAULT,
    }
}

/// Resolves the config with command-line flags folded in as overrides.
pub fn resolve_train_config(
    path: &Path,
    overrides: &[String],
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<RunConfig> {
    let mut all = overrides.to_vec();
    if let Some(o) = out {
        all.push(format!("out={}", o.display()));
    }
    if let Some(s) = seed {
        all.push(format!("seed={s}"));
    }
    config::load(path, &all)
}

/// Runs every trial of `cfg`, writing `resolved.cfg` before the first trial.
pub fn cmd_train(cfg: &RunConfig, parallel: bool) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join(RESOLVED_CONFIG), cfg.to_cfg())?;
    let out = cfg.out.clone();
    run_trials(&cfg.agent, &cfg.env, cfg.trials, cfg.seed, parallel, move |i| {
        CsvSink::create(&out, i)
    })?;
    Ok(())
}

pub fn cmd_summarize(dir: &Path, k_last: usize, out: Option<&Path>) -> Result<Summary> {
    let logs = read_trial_logs(dir)?;
    let summary = summarize(&logs, k_last)?;
    let target = out.unwrap_or(dir);
    std::fs::create_dir_all(target)?;
    std::fs::write(target.join(SUMMARY_CSV), summary.to_csv())?;
    std::fs::write(target.join(SUMMARY_TXT), summary.to_table())?;
    Ok(summary)
}

pub fn cmd_compare(dir_a: &Path, dir_b: &Path, k_last: usize) -> Result<ComparisonReport> {
    let a = summarize(&read_trial_logs(dir_a)?, k_last)?;
    let b = summarize(&read_trial_logs(dir_b)?, k_last)?;
    compare(&a, &b)
}

pub fn cmd_inspect(dir: &Path) -> Result<String> {
    let mut s = format!(
        "{:<6} {:>9} {:>12} {:>12} {:>8} {:>8} {:>12} {:>7}\n",
        "trial", "episodes", "frames", "last_score", "tm_sets", "rtm", "sim_hits", "rounds"
    );
    for (i, path) in list_trial_logs(dir)? {
        let log = read_trial_log(&path)?;
        let last = log.episodes.last();
        s.push_str(&format!(
            "{:<6} {:>9} {:>12} {:>12} {:>8} {:>8} {:>12} {:>7}\n",
            i,
            log.episodes.len(),
            log.total_frames(),
            last.map_or("-".into(), |e| crate::harness::log::fmt_f64(e.score)),
            last.map_or(0, |e| e.tm_sets),
            last.map_or(0, |e| e.rtm_size),
            last.map_or(0, |e| e.similarity_hits),
            last.map_or(0, |e| e.qlstm_rounds),
        ));
    }
    Ok(s)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            overrides,
            out,
            seed,
            parallel,
        } => {
            let cfg = resolve_train_config(&config, &overrides, out.as_deref(), seed)?;
            cmd_train(&cfg, parallel)?;
            println!("wrote {} trial(s) to {}", cfg.trials, cfg.out.display());
        }
        Command::Summarize { dir, k_last, out } => {
            let s = cmd_summarize(&dir, k_last, out.as_deref())?;
            print!("{}", s.to_table());
        }
        Command::Compare {
            dir_a,
            dir_b,
            k_last,
            out,
        } => {
            let r = cmd_compare(&dir_a, &dir_b, k_last)?;
            if let Some(path) = out {
                std::fs::write(path, r.to_csv())?;
            }
            print!("{}", r.to_table());
        }
        Command::Inspect { dir } => print!("{}", cmd_inspect(&dir)?),
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
