//! Benchmark environments.
//!
//! Every environment emits binary state vectors (as `f64` 0/1 entries, ready to
//! feed the network) and accepts [`ActionVector`]s from its [`ActionSpace`].

mod blocker;
mod grid;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::action::{ActionSpace, ActionVector};
use crate::error::{Error, Result};

pub use blocker::{
    blocker_step, encode_blocker_state, Blocker, BlockerState, BLOCKER_COLS, BLOCKER_EPISODE_CAP,
    BLOCKER_ROWS, BLOCKER_STATE_DIM, BLOCKER_WIDTH,
};
pub use grid::{
    decode_binary4, population_move_probs, shortest_path_len, ActionCoding, GridWorld, Maze,
    GRID_EPISODE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPos {
    pub row: usize,
    pub col: usize,
}

impl GridPos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Neighbouring cell in direction `mv` if it lies inside a `rows x cols` grid.
    pub fn offset(self, mv: Move, rows: usize, cols: usize) -> Option<GridPos> {
        let (row, col) = (self.row, self.col);
        let next = match mv {
            Move::North => GridPos::new(row.checked_sub(1)?, col),
            Move::South => GridPos::new(row + 1, col),
            Move::East => GridPos::new(row, col + 1),
            Move::West => GridPos::new(row, col.checked_sub(1)?),
            Move::Stay => self,
        };
        (next.row < rows && next.col < cols).then_some(next)
    }
}

/// Agent moves. One-hot action index `i` maps to `Move::COMPASS[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    North,
    South,
    East,
    West,
    Stay,
}

impl Move {
    pub const COMPASS: [Move; 4] = [Move::North, Move::South, Move::East, Move::West];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub episode_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    /// Episode hit the step cap without reaching a terminal state.
    pub truncated: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode and returns the initial state.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Fails with [`Error::EpisodeFinished`] once the episode has terminated or
    /// been truncated; call [`Environment::reset`] first.
    fn step(&mut self, action: &ActionVector, rng: &mut dyn RngCore) -> Result<StepResult>;
}

/// The four benchmark environments by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvName {
    GridOneHot,
    GridBinary4,
    GridPopulation,
    Blocker,
}

impl EnvName {
    pub const ALL: [EnvName; 4] = [
        EnvName::GridOneHot,
        EnvName::GridBinary4,
        EnvName::GridPopulation,
        EnvName::Blocker,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EnvName::GridOneHot => "grid-onehot",
            EnvName::GridBinary4 => "grid-binary4",
            EnvName::GridPopulation => "grid-population",
            EnvName::Blocker => "blocker",
        }
    }

    pub fn build(&self) -> Box<dyn Environment> {
        match self {
            EnvName::GridOneHot => Box::new(GridWorld::new(ActionCoding::OneHot)),
            EnvName::GridBinary4 => Box::new(GridWorld::new(ActionCoding::Binary4)),
            EnvName::GridPopulation => Box::new(GridWorld::new(ActionCoding::Population)),
            EnvName::Blocker => Box::new(Blocker::new()),
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown environment '{s}'")))
    }
}
