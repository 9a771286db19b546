//! Online Q-learning over the two-headed network.
//!
//! One gradient update per environment step, no replay and no target network.
//! The TD target uses the exact `max_a Q(s', a)` from [`max_q`]; step-cap
//! truncations bootstrap like any other non-terminal transition.

use std::collections::VecDeque;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::{greedy_action, max_q, q_value, ActionSpace};
use crate::env::{EnvName, Environment};
use crate::error::{Error, Result};
use crate::mlp::{NetworkParams, QOutputs};
use crate::policy::PolicySpec;

pub const DEFAULT_STEP_SIZE: f64 = 0.01;
pub const DEFAULT_DISCOUNT: f64 = 0.95;
pub const DEFAULT_RUNS: usize = 10;
/// Length of the trailing reward window.
pub const REWARD_WINDOW: usize = 1000;
/// A TD error beyond this magnitude counts as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Episodes(usize),
    /// Total environment steps; the episode in progress is cut when the budget runs out.
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub step_size: f64,
    pub discount: f64,
    pub n_hidden: usize,
    pub policy: PolicySpec,
    pub budget: Budget,
    pub runs: usize,
    pub base_seed: u64,
    /// Emit a [`WindowRecord`] every this many steps.
    pub window_stride: usize,
}

impl Hyperparams {
    pub fn new(n_hidden: usize, policy: PolicySpec, budget: Budget) -> Self {
        Self {
            step_size: DEFAULT_STEP_SIZE,
            discount: DEFAULT_DISCOUNT,
            n_hidden,
            policy,
            budget,
            runs: DEFAULT_RUNS,
            base_seed: 0,
            window_stride: REWARD_WINDOW,
        }
    }

    pub fn validate(&self, space: &ActionSpace) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad("step size must be a non-negative finite number");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must be in [0, 1)");
        }
        if self.n_hidden == 0 {
            return bad("hidden layer needs at least one unit");
        }
        if self.runs == 0 {
            return bad("need at least one run");
        }
        if self.window_stride == 0 {
            return bad("window stride must be positive");
        }
        if matches!(self.budget, Budget::Episodes(0) | Budget::Steps(0)) {
            return bad("budget must be positive");
        }
        self.policy.validate(space)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpisodeRecord {
    pub run: usize,
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindowRecord {
    pub run: usize,
    pub step: usize,
    pub avg_reward_last_1000: f64,
}

/// `reward` on terminal transitions, `reward + discount * max_a Q(s', a)` otherwise.
pub fn td_target(
    reward: f64,
    next_out: &QOutputs,
    space: &ActionSpace,
    discount: f64,
    terminal: bool,
) -> Result<f64> {
    if terminal {
        return Ok(reward);
    }
    Ok(reward + discount * max_q(next_out, space)?)
}

/// Per-step reward history for the trailing-window average.
#[derive(Debug, Clone, Default)]
pub struct RewardWindow {
    recent: VecDeque<f64>,
}

impl RewardWindow {
    pub fn push(&mut self, reward: f64) {
        if self.recent.len() == REWARD_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(reward);
    }

    /// Mean over the last `min(steps seen, 1000)` rewards; `NaN` before the first step.
    pub fn average(&self) -> f64 {
        self.recent.iter().sum::<f64>() / self.recent.len() as f64
    }
}

/// Runs one episode of online Q-learning, updating `params` in place.
///
/// `max_steps` cuts the episode early (the record is then marked truncated);
/// `on_step` sees every reward. Returns the record with `run` and `episode` set to 0.
pub fn run_episode(
    env: &mut dyn Environment,
    params: &mut NetworkParams,
    hyper: &Hyperparams,
    rng: &mut dyn RngCore,
    max_steps: Option<usize>,
    mut on_step: impl FnMut(f64),
) -> Result<EpisodeRecord> {
    let space = env.spec().action_space.clone();
    let mut state = env.reset(rng);
    let mut record = EpisodeRecord {
        run: 0,
        episode: 0,
        steps: 0,
        total_reward: 0.0,
        truncated: false,
    };
    let mut out = params.forward(&state)?;
    loop {
        if max_steps.is_some_and(|m| record.steps >= m) {
            record.truncated = true;
            return Ok(record);
        }
        let action = hyper.policy.select(&out, &space, rng)?;
        let result = env.step(&action, rng)?;
        let next_out = params.forward(&result.next_state)?;
        let target = td_target(
            result.reward,
            &next_out,
            &space,
            hyper.discount,
            result.terminal,
        )?;
        let td_error = target - q_value(&out, &action)?;
        if td_error.is_nan() || td_error.abs() > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged(format!(
                "TD error {td_error} exceeds {DIVERGENCE_THRESHOLD}"
            )));
        }
        if hyper.step_size != 0.0 {
            params.q_gradient_step(&state, &action, td_error, hyper.step_size)?;
        }
        record.steps += 1;
        record.total_reward += result.reward;
        on_step(result.reward);
        if result.terminal || result.truncated {
            record.truncated = result.truncated;
            return Ok(record);
        }
        state = result.next_state;
        // parameters changed, so the cached next-state outputs are stale
        out = if hyper.step_size != 0.0 {
            params.forward(&state)?
        } else {
            next_out
        };
    }
}

/// Follows the greedy policy of `params` for one episode without learning.
pub fn greedy_episode(
    env: &mut dyn Environment,
    params: &NetworkParams,
    rng: &mut dyn RngCore,
) -> Result<EpisodeRecord> {
    let space = env.spec().action_space.clone();
    let mut state = env.reset(rng);
    let mut record = EpisodeRecord {
        run: 0,
        episode: 0,
        steps: 0,
        total_reward: 0.0,
        truncated: false,
    };
    loop {
        let out = params.forward(&state)?;
        let result = env.step(&greedy_action(&out.phi, &space)?, rng)?;
        record.steps += 1;
        record.total_reward += result.reward;
        if result.terminal || result.truncated {
            record.truncated = result.truncated;
            return Ok(record);
        }
        state = result.next_state;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Episode index during which the run diverged.
    pub episode: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    pub windows: Vec<WindowRecord>,
    pub diverged: Option<Divergence>,
    /// Parameters at the end of the run (at the failing update if it diverged).
    pub params: NetworkParams,
}

impl RunResult {
    pub fn total_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.steps).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub env: EnvName,
    pub hyper: Hyperparams,
    /// Ordered by run index.
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn completed(&self) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(|r| r.diverged.is_none())
    }

    pub fn diverged(&self) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(|r| r.diverged.is_some())
    }

    /// Episode records of the runs that did not diverge.
    pub fn episode_records(&self) -> Vec<EpisodeRecord> {
        self.completed()
            .flat_map(|r| r.episodes.iter().cloned())
            .collect()
    }

    pub fn window_records(&self) -> Vec<WindowRecord> {
        self.completed()
            .flat_map(|r| r.windows.iter().cloned())
            .collect()
    }
}

/// One independent training run seeded with `base_seed + run`.
pub fn run_single(env_name: EnvName, hyper: &Hyperparams, run: usize) -> Result<RunResult> {
    let seed = hyper.base_seed.wrapping_add(run as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = env_name.build();
    let spec = env.spec().clone();
    hyper.validate(&spec.action_space)?;
    let mut params = NetworkParams::init(
        spec.state_dim,
        hyper.n_hidden,
        spec.action_space.bit_len(),
        &mut rng,
    )?;
    let mut result = RunResult {
        run,
        seed,
        episodes: Vec::new(),
        windows: Vec::new(),
        diverged: None,
        params: NetworkParams::zeros(1, 1, 1)?,
    };
    let mut window = RewardWindow::default();
    let mut total_steps = 0usize;
    let stride = hyper.window_stride;
    for episode in 0.. {
        let max_steps = match hyper.budget {
            Budget::Episodes(n) if episode >= n => break,
            Budget::Steps(n) if total_steps >= n => break,
            Budget::Episodes(_) => None,
            Budget::Steps(n) => Some(n - total_steps),
        };
        let windows = &mut result.windows;
        let outcome = run_episode(env.as_mut(), &mut params, hyper, &mut rng, max_steps, |r| {
            window.push(r);
            total_steps += 1;
            if total_steps.is_multiple_of(stride) {
                windows.push(WindowRecord {
                    run,
                    step: total_steps,
                    avg_reward_last_1000: window.average(),
                });
            }
        });
        match outcome {
            Ok(mut rec) => {
                rec.run = run;
                rec.episode = episode;
                result.episodes.push(rec);
            }
            Err(Error::Diverged(message)) => {
                result.diverged = Some(Divergence { episode, message });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    result.params = params;
    Ok(result)
}

/// Runs `hyper.runs` independent runs, at most `threads` at a time (default: one per run).
///
/// Diverged runs are reported in [`RunResult::diverged`] rather than failing the
/// experiment. Output is identical regardless of scheduling.
pub fn run_experiment(
    env_name: EnvName,
    hyper: &Hyperparams,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    hyper.validate(&env_name.build().spec().action_space)?;
    let threads = threads.unwrap_or(hyper.runs).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let runs = pool.install(|| {
        (0..hyper.runs)
            .into_par_iter()
            .map(|r| run_single(env_name, hyper, r))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult {
        env: env_name,
        hyper: hyper.clone(),
        runs,
    })
}
