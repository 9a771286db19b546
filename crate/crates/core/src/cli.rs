//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::env::{shortest_path_len, EnvName, Maze};
use crate::preset::{ExperimentPreset, PolicyKind};
use crate::report::{final_performance, mean_std, write_experiment};
use crate::trainer::{
    run_experiment, Budget, Hyperparams, DEFAULT_DISCOUNT, DEFAULT_RUNS, DEFAULT_STEP_SIZE,
};

/// Environment variable capping the number of runs trained in parallel.
pub const THREADS_ENV: &str = "FACTOREDQ_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "factoredq",
    version,
    about = "Q-learning with a linear-in-action value head on the benchmark tasks"
)]
pub struct Args {
    /// Benchmark: grid-onehot, grid-binary4, grid-population or blocker
    #[arg(long)]
    pub preset: String,

    /// Behavior policy: epsilon, bitwise, agentwise or softmax [default: the preset's first policy]
    #[arg(long)]
    pub policy: Option<String>,

    /// Exploration rate of the epsilon-family policies [default: preset value for the chosen policy]
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Inverse temperature of the softmax policy [default: 20]
    #[arg(long)]
    pub beta: Option<f64>,

    /// Hidden units [default: 50 for grid worlds, 100 for blocker]
    #[arg(long)]
    pub hidden: Option<usize>,

    /// SGD step size
    #[arg(long, default_value_t = DEFAULT_STEP_SIZE)]
    pub alpha: f64,

    /// Discount factor
    #[arg(long, default_value_t = DEFAULT_DISCOUNT)]
    pub gamma: f64,

    /// Episodes per run [default: 1000 for grid-onehot/grid-binary4, 2000 for grid-population]
    #[arg(long, conflicts_with = "steps")]
    pub episodes: Option<usize>,

    /// Environment steps per run [default: 200000 for blocker]
    #[arg(long)]
    pub steps: Option<usize>,

    /// Independent runs
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,

    /// Base seed; run r uses seed + r
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory for episodes.csv and windows.csv
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

impl Args {
    /// Resolves the preset and the overriding flags into an environment and hyperparameters.
    pub fn resolve(&self) -> Result<(EnvName, Hyperparams), String> {
        let env: EnvName = self.preset.parse().map_err(|e| format!("{e}"))?;
        let preset = ExperimentPreset::for_env(env);
        let kind = match &self.policy {
            Some(p) => p.parse::<PolicyKind>().map_err(|e| format!("{e}"))?,
            None => match preset.default_policy() {
                crate::policy::PolicySpec::EpsilonGreedy(_) => PolicyKind::Epsilon,
                crate::policy::PolicySpec::BitwiseEpsilonGreedy(_) => PolicyKind::Bitwise,
                crate::policy::PolicySpec::AgentwiseEpsilonGreedy(_) => PolicyKind::Agentwise,
                crate::policy::PolicySpec::Softmax(_) => PolicyKind::Softmax,
            },
        };
        let preset_param = preset.policy_of_kind(kind).map(|p| p.parameter());
        let param = match kind {
            PolicyKind::Softmax => {
                if self.epsilon.is_some() {
                    return Err("--epsilon does not apply to the softmax policy".into());
                }
                self.beta.or(preset_param).unwrap_or(20.0)
            }
            _ => {
                if self.beta.is_some() {
                    return Err(format!("--beta does not apply to the {kind} policy"));
                }
                self.epsilon.or(preset_param).ok_or_else(|| {
                    format!("--epsilon is required for the {kind} policy on {env}")
                })?
            }
        };
        let mut hyper = preset.hyperparams_with(kind.with_parameter(param));
        if let Some(h) = self.hidden {
            hyper.n_hidden = h;
        }
        hyper.step_size = self.alpha;
        hyper.discount = self.gamma;
        hyper.runs = self.runs;
        hyper.base_seed = self.seed;
        if let Some(n) = self.episodes {
            hyper.budget = Budget::Episodes(n);
        }
        if let Some(n) = self.steps {
            hyper.budget = Budget::Steps(n);
        }
        hyper
            .validate(&env.build().spec().action_space)
            .map_err(|e| e.to_string())?;
        Ok((env, hyper))
    }
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

/// Parses `argv`, runs the experiment, writes the CSVs and prints a summary.
///
/// Exit codes: 0 on success, 1 if the run failed or every run diverged, 2 on usage errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (env, hyper) = match args.resolve() {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    eprintln!(
        "{env}: {} hidden, {}, alpha={}, gamma={}, {:?}, {} runs from seed {}",
        hyper.n_hidden,
        hyper.policy,
        hyper.step_size,
        hyper.discount,
        hyper.budget,
        hyper.runs,
        hyper.base_seed
    );
    let result = match run_experiment(env, &hyper, threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = write_experiment(&result, &args.out) {
        eprintln!("error: writing results to {}: {e}", args.out.display());
        return 1;
    }
    for r in result.diverged() {
        let d = r.diverged.as_ref().expect("diverged run");
        println!(
            "run {} (seed {}) diverged in episode {}: {}",
            r.run, r.seed, d.episode, d.message
        );
    }
    let finals: Vec<f64> = result
        .completed()
        .filter_map(|r| final_performance(r, hyper.budget))
        .collect();
    let label = match hyper.budget {
        Budget::Episodes(_) => "mean steps over the last 20 episodes",
        Budget::Steps(_) => "average reward over the last 1000 steps",
    };
    match mean_std(&finals) {
        Some((m, s)) => println!(
            "{env}: {label}: {m:.3} ± {s:.3} ({} of {} runs)",
            finals.len(),
            hyper.runs
        ),
        None => {
            println!("{env}: all {} runs diverged", hyper.runs);
            return 1;
        }
    }
    if env != EnvName::Blocker {
        if let Some(opt) = shortest_path_len(&Maze::dyna()) {
            println!("{env}: shortest path {opt} steps");
        }
    }
    println!("wrote {}", args.out.display());
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicySpec;

    fn resolve(extra: &[&str]) -> Result<(EnvName, Hyperparams), String> {
        let argv = std::iter::once("factoredq").chain(extra.iter().copied());
        Args::try_parse_from(argv)
            .map_err(|e| e.to_string())?
            .resolve()
    }

    #[test]
    fn preset_defaults_apply() {
        let (env, h) = resolve(&["--preset", "grid-onehot"]).unwrap();
        assert_eq!(env, EnvName::GridOneHot);
        assert_eq!(h.policy, PolicySpec::EpsilonGreedy(0.1));
        assert_eq!(
            (h.n_hidden, h.budget, h.runs),
            (50, Budget::Episodes(1000), 10)
        );
    }

    #[test]
    fn policy_flags() {
        let (_, h) = resolve(&[
            "--preset",
            "grid-population",
            "--policy",
            "softmax",
            "--beta",
            "20",
        ])
        .unwrap();
        assert_eq!(h.policy, PolicySpec::Softmax(20.0));
        let (_, h) = resolve(&["--preset", "grid-population", "--policy", "bitwise"]).unwrap();
        assert_eq!(h.policy, PolicySpec::BitwiseEpsilonGreedy(0.05));
        let (_, h) = resolve(&[
            "--preset",
            "blocker",
            "--policy",
            "agentwise",
            "--epsilon",
            "0.1",
        ])
        .unwrap();
        assert_eq!(h.policy, PolicySpec::AgentwiseEpsilonGreedy(0.1));
        assert_eq!(h.budget, Budget::Steps(200_000));
        let (_, h) = resolve(&[
            "--preset", "blocker", "--steps", "5000", "--hidden", "20", "--alpha", "0.05",
        ])
        .unwrap();
        assert_eq!(
            (h.budget, h.n_hidden, h.step_size),
            (Budget::Steps(5000), 20, 0.05)
        );
    }

    #[test]
    fn bad_flags_are_rejected() {
        assert!(resolve(&["--preset", "maze"]).is_err());
        assert!(resolve(&["--preset", "grid-onehot", "--policy", "bitwise"]).is_err());
        assert!(resolve(&[
            "--preset",
            "blocker",
            "--policy",
            "bitwise",
            "--epsilon",
            "0.1"
        ])
        .is_err());
        assert!(resolve(&["--preset", "grid-onehot", "--beta", "3"]).is_err());
        assert!(resolve(&["--preset", "grid-onehot", "--gamma", "1.0"]).is_err());
        assert!(resolve(&["--preset", "grid-onehot", "--bogus"]).is_err());
        assert!(resolve(&["--preset", "grid-onehot", "--episodes", "3", "--steps", "4"]).is_err());
    }

    #[test]
    fn usage_errors_exit_nonzero() {
        assert_eq!(run_cli(["factoredq", "--preset", "nope"]), 2);
        assert_eq!(run_cli(["factoredq", "--unknown"]), 2);
    }
}
