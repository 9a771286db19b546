//! CSV output and summary statistics.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::trainer::{Budget, EpisodeRecord, ExperimentResult, RunResult, WindowRecord};

pub const EPISODES_HEADER: &str = "run,episode,steps,total_reward,truncated";
pub const WINDOWS_HEADER: &str = "run,step,avg_reward_last_1000";

/// Episodes averaged for the final-performance summary of episodic budgets.
pub const FINAL_EPISODES: usize = 20;

fn write_records<T: Serialize>(records: &[T], header: &str, out: impl Write) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()
}

/// Writes `episodes.csv`-format rows. Floats use the shortest representation
/// that parses back to the same `f64`.
pub fn write_episodes_csv(records: &[EpisodeRecord], out: impl Write) -> io::Result<()> {
    write_records(records, EPISODES_HEADER, out)
}

pub fn write_windows_csv(records: &[WindowRecord], out: impl Write) -> io::Result<()> {
    write_records(records, WINDOWS_HEADER, out)
}

/// Writes `episodes.csv` and `windows.csv` into `dir`, creating it if needed.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_episodes_csv(
        &result.episode_records(),
        io::BufWriter::new(File::create(dir.join("episodes.csv"))?),
    )?;
    write_windows_csv(
        &result.window_records(),
        io::BufWriter::new(File::create(dir.join("windows.csv"))?),
    )?;
    Ok(())
}

pub fn read_episodes_csv(input: impl io::Read) -> csv::Result<Vec<EpisodeRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn read_windows_csv(input: impl io::Read) -> csv::Result<Vec<WindowRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Final performance of one run: mean episode length over its last
/// [`FINAL_EPISODES`] episodes for episodic budgets, the last trailing-window
/// reward average for step budgets.
pub fn final_performance(run: &RunResult, budget: Budget) -> Option<f64> {
    match budget {
        Budget::Episodes(_) => {
            let tail = &run.episodes[run.episodes.len().saturating_sub(FINAL_EPISODES)..];
            (!tail.is_empty())
                .then(|| tail.iter().map(|e| e.steps as f64).sum::<f64>() / tail.len() as f64)
        }
        Budget::Steps(_) => run.windows.last().map(|w| w.avg_reward_last_1000),
    }
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}
