//! Shortest-path maze with three action codings.

use std::collections::VecDeque;

use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, GridPos, Move, StepResult};
use crate::action::{ActionSpace, ActionVector};
use crate::error::{Error, Result};

pub const GRID_EPISODE_CAP: usize = 800;

const POPULATION_BITS: usize = 40;
const POPULATION_GROUP: usize = 10;

/// Grid maze with obstacles, a start cell and a goal cell.
///
/// States are one-hot over free cells, indexed by row-major rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maze {
    rows: usize,
    cols: usize,
    blocked: Vec<bool>,
    /// row-major cell -> free-cell index
    index: Vec<Option<usize>>,
    start: GridPos,
    goal: GridPos,
}

impl Maze {
    pub fn new(
        rows: usize,
        cols: usize,
        obstacles: &[GridPos],
        start: GridPos,
        goal: GridPos,
    ) -> Result<Self> {
        let mut blocked = vec![false; rows * cols];
        for p in obstacles {
            if p.row >= rows || p.col >= cols {
                return Err(Error::InvalidParameter(format!(
                    "obstacle {p:?} outside the grid"
                )));
            }
            blocked[p.row * cols + p.col] = true;
        }
        for (name, p) in [("start", start), ("goal", goal)] {
            if p.row >= rows || p.col >= cols || blocked[p.row * cols + p.col] {
                return Err(Error::InvalidParameter(format!(
                    "{name} {p:?} is not a free cell"
                )));
            }
        }
        let mut next = 0;
        let index = blocked
            .iter()
            .map(|&b| {
                (!b).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Ok(Self {
            rows,
            cols,
            blocked,
            index,
            start,
            goal,
        })
    }

    /// The 6x9 Dyna maze: 47 free cells, start (2,0), goal (0,8).
    pub fn dyna() -> Self {
        let obstacles = [(1, 2), (2, 2), (3, 2), (4, 5), (0, 7), (1, 7), (2, 7)]
            .map(|(r, c)| GridPos::new(r, c));
        Self::new(6, 9, &obstacles, GridPos::new(2, 0), GridPos::new(0, 8)).expect("valid layout")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn start(&self) -> GridPos {
        self.start
    }

    pub fn goal(&self) -> GridPos {
        self.goal
    }

    pub fn free_cells(&self) -> usize {
        self.blocked.iter().filter(|&&b| !b).count()
    }

    pub fn is_free(&self, p: GridPos) -> bool {
        p.row < self.rows && p.col < self.cols && !self.blocked[p.row * self.cols + p.col]
    }

    /// State index of a free cell.
    pub fn state_index(&self, p: GridPos) -> Option<usize> {
        if p.row >= self.rows || p.col >= self.cols {
            return None;
        }
        self.index[p.row * self.cols + p.col]
    }

    /// Result of moving from `p`; blocked moves leave the agent in place.
    pub fn apply(&self, p: GridPos, mv: Move) -> GridPos {
        match p.offset(mv, self.rows, self.cols) {
            Some(q) if self.is_free(q) => q,
            _ => p,
        }
    }

    pub fn encode(&self, p: GridPos) -> Vec<f64> {
        let mut s = vec![0.0; self.free_cells()];
        s[self.state_index(p).expect("agent on a free cell")] = 1.0;
        s
    }
}

/// Breadth-first shortest path length from start to goal, `None` if unreachable.
pub fn shortest_path_len(maze: &Maze) -> Option<usize> {
    let mut dist = vec![usize::MAX; maze.rows * maze.cols];
    let idx = |p: GridPos| p.row * maze.cols + p.col;
    let mut queue = VecDeque::from([maze.start]);
    dist[idx(maze.start)] = 0;
    while let Some(p) = queue.pop_front() {
        if p == maze.goal {
            return Some(dist[idx(p)]);
        }
        for mv in Move::COMPASS {
            let q = maze.apply(p, mv);
            if dist[idx(q)] == usize::MAX {
                dist[idx(q)] = dist[idx(p)] + 1;
                queue.push_back(q);
            }
        }
    }
    None
}

/// 4-bit action table; every pattern not listed is `Stay`.
pub fn decode_binary4(a: &ActionVector) -> Result<Move> {
    if a.len() != 4 {
        return Err(Error::LengthMismatch {
            expected: 4,
            actual: a.len(),
        });
    }
    Ok(match a.bits() {
        [true, true, false, false] => Move::North,
        [false, false, true, true] => Move::South,
        [true, false, true, false] => Move::East,
        [false, true, false, true] => Move::West,
        _ => Move::Stay,
    })
}

/// Move probabilities `(North, South, East, West, Stay)` for a 40-bit population code.
///
/// `E_1..E_4` count the set bits in consecutive blocks of ten, `E_5 = max(10 - sum, 0)`,
/// and `P_j = E_j / sum_k E_k`. The denominator is always at least 10.
pub fn population_move_probs(a: &ActionVector) -> Result<[f64; 5]> {
    if a.len() != POPULATION_BITS {
        return Err(Error::LengthMismatch {
            expected: POPULATION_BITS,
            actual: a.len(),
        });
    }
    let mut counts = [0usize; 5];
    for (k, block) in a.bits().chunks(POPULATION_GROUP).enumerate() {
        counts[k] = block.iter().filter(|&&b| b).count();
    }
    let moving: usize = counts[..4].iter().sum();
    counts[4] = POPULATION_GROUP.saturating_sub(moving);
    let total = (moving + counts[4]) as f64;
    Ok(counts.map(|c| c as f64 / total))
}

const POPULATION_MOVES: [Move; 5] = [Move::North, Move::South, Move::East, Move::West, Move::Stay];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionCoding {
    /// 4-bit one-hot, order North, South, East, West.
    OneHot,
    /// 4-bit patterns, see [`decode_binary4`].
    Binary4,
    /// 40-bit population code, see [`population_move_probs`].
    Population,
}

pub struct GridWorld {
    maze: Maze,
    coding: ActionCoding,
    spec: EnvSpec,
    pos: GridPos,
    steps: usize,
    done: bool,
}

impl GridWorld {
    pub fn new(coding: ActionCoding) -> Self {
        Self::with_maze(Maze::dyna(), coding)
    }

    pub fn with_maze(maze: Maze, coding: ActionCoding) -> Self {
        let action_space = match coding {
            ActionCoding::OneHot => ActionSpace::one_hot(4),
            ActionCoding::Binary4 => ActionSpace::binary(4),
            ActionCoding::Population => ActionSpace::binary(POPULATION_BITS),
        }
        .expect("non-empty action space");
        let spec = EnvSpec {
            state_dim: maze.free_cells(),
            action_space,
            episode_cap: GRID_EPISODE_CAP,
        };
        let pos = maze.start();
        Self {
            maze,
            coding,
            spec,
            pos,
            steps: 0,
            done: false,
        }
    }

    pub fn maze(&self) -> &Maze {
        &self.maze
    }

    pub fn position(&self) -> GridPos {
        self.pos
    }

    /// Places the agent on `pos` mid-episode.
    pub fn set_position(&mut self, pos: GridPos) -> Result<()> {
        if !self.maze.is_free(pos) {
            return Err(Error::InvalidParameter(format!(
                "{pos:?} is not a free cell"
            )));
        }
        self.pos = pos;
        Ok(())
    }

    fn decode(&self, a: &ActionVector, rng: &mut dyn RngCore) -> Result<Move> {
        self.spec.action_space.validate(a)?;
        match self.coding {
            ActionCoding::OneHot => Ok(Move::COMPASS[a.choice_in(0..4).expect("validated")]),
            ActionCoding::Binary4 => decode_binary4(a),
            ActionCoding::Population => {
                let probs = population_move_probs(a)?;
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (p, mv) in probs.iter().zip(POPULATION_MOVES) {
                    acc += p;
                    if u < acc {
                        return Ok(mv);
                    }
                }
                // rounding: fall back to the last move with non-zero probability
                let last = probs
                    .iter()
                    .rposition(|&p| p > 0.0)
                    .expect("probabilities sum to one");
                Ok(POPULATION_MOVES[last])
            }
        }
    }
}

impl Environment for GridWorld {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.pos = self.maze.start();
        self.steps = 0;
        self.done = false;
        self.maze.encode(self.pos)
    }

    fn step(&mut self, action: &ActionVector, rng: &mut dyn RngCore) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let mv = self.decode(action, rng)?;
        self.pos = self.maze.apply(self.pos, mv);
        self.steps += 1;
        let terminal = self.pos == self.maze.goal();
        let truncated = !terminal && self.steps >= self.spec.episode_cap;
        self.done = terminal || truncated;
        Ok(StepResult {
            next_state: self.maze.encode(self.pos),
            reward: if terminal { 0.0 } else { -1.0 },
            terminal,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn av(bits: &[u8]) -> ActionVector {
        ActionVector::from_bits(bits)
    }

    fn onehot(i: usize) -> ActionVector {
        let mut a = ActionVector::zeros(4);
        a.set(i, true);
        a
    }

    #[test]
    fn dyna_maze_layout() {
        let m = Maze::dyna();
        assert_eq!(m.free_cells(), 47);
        assert_eq!(shortest_path_len(&m), Some(14));
        assert_eq!(m.state_index(GridPos::new(0, 0)), Some(0));
        assert_eq!(m.state_index(GridPos::new(1, 2)), None);
        // row 0 has 8 free cells (col 7 blocked), so (0, 8) is index 7
        assert_eq!(m.state_index(m.goal()), Some(7));
        assert_eq!(m.state_index(GridPos::new(5, 8)), Some(46));
    }

    #[test]
    fn reset_is_one_hot_at_start() {
        let mut env = GridWorld::new(ActionCoding::OneHot);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = env.reset(&mut rng);
        assert_eq!(s.len(), 47);
        assert_eq!(s.iter().filter(|&&x| x == 1.0).count(), 1);
        let start = env.maze().state_index(env.maze().start()).unwrap();
        assert_eq!(s[start], 1.0);
    }

    #[test]
    fn north_moves_up() {
        let mut env = GridWorld::new(ActionCoding::OneHot);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        env.reset(&mut rng);
        let r = env.step(&onehot(0), &mut rng).unwrap();
        assert_eq!(env.position(), GridPos::new(1, 0));
        assert_eq!(r.reward, -1.0);
        assert!(!r.terminal && !r.truncated);
    }

    #[test]
    fn blocked_move_stays() {
        let mut env = GridWorld::new(ActionCoding::OneHot);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        env.reset(&mut rng);
        let before = env.reset(&mut rng);
        // west of (2,0) is the wall
        let r = env.step(&onehot(3), &mut rng).unwrap();
        assert_eq!(r.next_state, before);
        assert_eq!(r.reward, -1.0);
        // east of (2,1) is the obstacle (2,2)
        env.set_position(GridPos::new(2, 1)).unwrap();
        env.step(&onehot(2), &mut rng).unwrap();
        assert_eq!(env.position(), GridPos::new(2, 1));
    }

    #[test]
    fn reaching_goal_terminates_with_zero_reward() {
        let mut env = GridWorld::new(ActionCoding::OneHot);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        env.reset(&mut rng);
        env.set_position(GridPos::new(1, 8)).unwrap();
        let r = env.step(&onehot(0), &mut rng).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(r.terminal && !r.truncated);
        assert_eq!(
            env.step(&onehot(0), &mut rng).unwrap_err(),
            Error::EpisodeFinished
        );
    }

    #[test]
    fn truncates_at_cap() {
        let mut env = GridWorld::new(ActionCoding::Binary4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        env.reset(&mut rng);
        let stay = av(&[0, 0, 0, 0]);
        for _ in 0..GRID_EPISODE_CAP - 1 {
            let r = env.step(&stay, &mut rng).unwrap();
            assert!(!r.truncated);
        }
        let r = env.step(&stay, &mut rng).unwrap();
        assert!(r.truncated && !r.terminal);
        assert!(env.step(&stay, &mut rng).is_err());
        env.reset(&mut rng);
        assert!(env.step(&stay, &mut rng).is_ok());
    }

    #[test]
    fn invalid_one_hot_action_rejected() {
        let mut env = GridWorld::new(ActionCoding::OneHot);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        env.reset(&mut rng);
        assert!(env.step(&av(&[1, 1, 0, 0]), &mut rng).is_err());
        assert!(env.step(&av(&[1, 0, 0]), &mut rng).is_err());
    }

    #[test]
    fn binary4_table() {
        assert_eq!(decode_binary4(&av(&[1, 1, 0, 0])).unwrap(), Move::North);
        assert_eq!(decode_binary4(&av(&[0, 0, 1, 1])).unwrap(), Move::South);
        assert_eq!(decode_binary4(&av(&[1, 0, 1, 0])).unwrap(), Move::East);
        assert_eq!(decode_binary4(&av(&[0, 1, 0, 1])).unwrap(), Move::West);
        assert_eq!(decode_binary4(&av(&[0, 0, 0, 0])).unwrap(), Move::Stay);
        let moving = (0u8..16)
            .map(|c| av(&[c >> 3 & 1, c >> 2 & 1, c >> 1 & 1, c & 1]))
            .filter(|a| decode_binary4(a).unwrap() != Move::Stay)
            .count();
        assert_eq!(moving, 4);
        assert!(decode_binary4(&av(&[1, 1, 0])).is_err());
    }

    fn population(set: impl Fn(usize) -> bool) -> ActionVector {
        ActionVector::new((0..40).map(set).collect())
    }

    #[test]
    fn population_examples() {
        assert_eq!(
            population_move_probs(&population(|_| false)).unwrap(),
            [0.0, 0.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(
            population_move_probs(&population(|i| i < 10)).unwrap(),
            [1.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            population_move_probs(&population(|i| i < 5)).unwrap(),
            [0.5, 0.0, 0.0, 0.0, 0.5]
        );
        // 10 + 10 + 5 set bits, no stay mass: 10/25, 10/25, 5/25
        let p = population_move_probs(&population(|i| i < 20 || (30..35).contains(&i))).unwrap();
        assert_eq!(p, [0.4, 0.4, 0.0, 0.2, 0.0]);
        assert!(population_move_probs(&ActionVector::zeros(39)).is_err());
    }

    #[test]
    fn population_sampling_matches_probabilities() {
        let env = GridWorld::new(ActionCoding::Population);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // E = (3, 2, 0, 1), E_5 = 4
        let a = population(|i| i < 3 || (10..12).contains(&i) || i == 30);
        let probs = population_move_probs(&a).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            let mv = env.decode(&a, &mut rng).unwrap();
            counts[POPULATION_MOVES.iter().position(|&m| m == mv).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
    }
}
