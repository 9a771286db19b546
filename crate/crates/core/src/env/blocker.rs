//! Cooperative blocker task.
//!
//! Three agents on a 4x7 grid try to get any one of them into the top row (the
//! end-zone). Two 1x3 blockers slide along the end-zone and cover cells the
//! agents may not enter. Agents move in index order; a move onto another agent,
//! a blocker cell or off the grid is cancelled. Blockers then react to agents
//! standing in the row just below the end-zone.

use rand::seq::index::sample;
use rand::RngCore;

use super::{EnvSpec, Environment, GridPos, Move, StepResult};
use crate::action::{ActionSpace, ActionVector};
use crate::error::{Error, Result};

pub const BLOCKER_ROWS: usize = 4;
pub const BLOCKER_COLS: usize = 7;
pub const BLOCKER_WIDTH: usize = 3;
pub const BLOCKER_EPISODE_CAP: usize = 40;
const N_AGENTS: usize = 3;
const N_BLOCKERS: usize = 2;
const CELLS: usize = BLOCKER_ROWS * BLOCKER_COLS;
pub const BLOCKER_STATE_DIM: usize = CELLS * (N_AGENTS + N_BLOCKERS) + 1;
const END_ZONE_ROW: usize = 0;
const THREAT_ROW: usize = 1;
const START_ROW: usize = BLOCKER_ROWS - 1;
const INITIAL_SPANS: [usize; N_BLOCKERS] = [0, 4];

/// Agent cells and the westmost column of each blocker span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockerState {
    pub agents: [GridPos; N_AGENTS],
    pub blockers: [usize; N_BLOCKERS],
}

impl BlockerState {
    pub fn covered(&self, p: GridPos) -> bool {
        p.row == END_ZONE_ROW
            && self
                .blockers
                .iter()
                .any(|&b| (b..b + BLOCKER_WIDTH).contains(&p.col))
    }

    fn occupied(&self, p: GridPos) -> bool {
        self.covered(p) || self.agents.contains(&p)
    }

    pub fn any_in_end_zone(&self) -> bool {
        self.agents.iter().any(|a| a.row == END_ZONE_ROW)
    }

    /// Bounds, disjointness and no overlap between agents and blockers.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        for (i, a) in self.agents.iter().enumerate() {
            if a.row >= BLOCKER_ROWS || a.col >= BLOCKER_COLS {
                return bad(format!("agent {i} at {a:?} is off the grid"));
            }
            if self.covered(*a) {
                return bad(format!("agent {i} at {a:?} overlaps a blocker"));
            }
            if self.agents[..i].contains(a) {
                return bad(format!("agent {i} at {a:?} overlaps another agent"));
            }
        }
        for b in self.blockers {
            if b + BLOCKER_WIDTH > BLOCKER_COLS {
                return bad(format!(
                    "blocker span starting at column {b} leaves the grid"
                ));
            }
        }
        if self.blockers[0].abs_diff(self.blockers[1]) < BLOCKER_WIDTH {
            return bad("blocker spans overlap".into());
        }
        Ok(())
    }
}

/// 141-bit encoding: one 28-cell one-hot block per agent, one per blocker
/// (marking its eastmost cell), then a bias bit that is always 1.
pub fn encode_blocker_state(state: &BlockerState) -> Result<Vec<f64>> {
    state.validate()?;
    let mut v = vec![0.0; BLOCKER_STATE_DIM];
    let cell = |p: GridPos| p.row * BLOCKER_COLS + p.col;
    for (i, a) in state.agents.iter().enumerate() {
        v[i * CELLS + cell(*a)] = 1.0;
    }
    for (j, &b) in state.blockers.iter().enumerate() {
        let eastmost = GridPos::new(END_ZONE_ROW, b + BLOCKER_WIDTH - 1);
        v[(N_AGENTS + j) * CELLS + cell(eastmost)] = 1.0;
    }
    v[BLOCKER_STATE_DIM - 1] = 1.0;
    Ok(v)
}

/// Blocker reaction: each blocker in turn looks at agents in the row below the
/// end-zone, picks the one nearest its span centre (westernmost on ties) and, if
/// it does not already cover that column, shifts one column toward it when the
/// shifted span stays on the grid and clear of the other blocker.
fn move_blockers(state: &mut BlockerState) {
    let threats: Vec<usize> = state
        .agents
        .iter()
        .filter(|a| a.row == THREAT_ROW)
        .map(|a| a.col)
        .collect();
    if threats.is_empty() {
        return;
    }
    for j in 0..N_BLOCKERS {
        let start = state.blockers[j];
        let centre = start + BLOCKER_WIDTH / 2;
        let target = *threats
            .iter()
            .min_by_key(|&&c| (c.abs_diff(centre), c))
            .expect("non-empty");
        if (start..start + BLOCKER_WIDTH).contains(&target) {
            continue;
        }
        let shifted = if target > centre {
            start + 1
        } else {
            start.wrapping_sub(1)
        };
        let other = state.blockers[1 - j];
        if shifted + BLOCKER_WIDTH <= BLOCKER_COLS && shifted.abs_diff(other) >= BLOCKER_WIDTH {
            state.blockers[j] = shifted;
        }
    }
}

/// One joint move. Returns `(reward, terminal)`: `+1` and terminal when an agent
/// enters the end-zone, `-1` otherwise. Blockers do not move on the winning step.
pub fn blocker_step(
    state: &mut BlockerState,
    action: &ActionVector,
    space: &ActionSpace,
) -> Result<(f64, bool)> {
    space.validate(action)?;
    for (i, range) in space.group_ranges().into_iter().enumerate() {
        let mv = Move::COMPASS[action.choice_in(range.clone()).expect("validated") - range.start];
        if let Some(target) = state.agents[i].offset(mv, BLOCKER_ROWS, BLOCKER_COLS) {
            if !state.occupied(target) {
                state.agents[i] = target;
            }
        }
    }
    if state.any_in_end_zone() {
        return Ok((1.0, true));
    }
    move_blockers(state);
    Ok((-1.0, false))
}

pub struct Blocker {
    spec: EnvSpec,
    state: BlockerState,
    steps: usize,
    done: bool,
}

impl Default for Blocker {
    fn default() -> Self {
        Self::new()
    }
}

impl Blocker {
    pub fn new() -> Self {
        let spec = EnvSpec {
            state_dim: BLOCKER_STATE_DIM,
            action_space: ActionSpace::factored(&[4; N_AGENTS]).expect("non-empty"),
            episode_cap: BLOCKER_EPISODE_CAP,
        };
        let agents = [0, 1, 2].map(|c| GridPos::new(START_ROW, c));
        Self {
            spec,
            state: BlockerState {
                agents,
                blockers: INITIAL_SPANS,
            },
            steps: 0,
            done: false,
        }
    }

    pub fn state(&self) -> &BlockerState {
        &self.state
    }

    /// Replaces the configuration mid-episode.
    pub fn set_state(&mut self, state: BlockerState) -> Result<()> {
        state.validate()?;
        self.state = state;
        Ok(())
    }
}

impl Environment for Blocker {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let cols = sample(rng, BLOCKER_COLS, N_AGENTS);
        let mut agents = [GridPos::new(START_ROW, 0); N_AGENTS];
        for (a, c) in agents.iter_mut().zip(cols.iter()) {
            a.col = c;
        }
        self.state = BlockerState {
            agents,
            blockers: INITIAL_SPANS,
        };
        self.steps = 0;
        self.done = false;
        encode_blocker_state(&self.state).expect("valid initial state")
    }

    fn step(&mut self, action: &ActionVector, _rng: &mut dyn RngCore) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let (reward, terminal) = blocker_step(&mut self.state, action, &self.spec.action_space)?;
        self.steps += 1;
        let truncated = !terminal && self.steps >= self.spec.episode_cap;
        self.done = terminal || truncated;
        Ok(StepResult {
            next_state: encode_blocker_state(&self.state)?,
            reward,
            terminal,
            truncated,
        })
    }
}
