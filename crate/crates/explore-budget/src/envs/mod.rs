//! Desk-scale cooperative gridworld environments.
//!
//! Both environments are decentralized POMDPs with a single shared team
//! reward per step: a bottleneck corridor where agents must cross to goals on
//! the opposite side through a one-cell gap, and a pursuit grid where learning
//! predators chase a scripted prey. Movement is simultaneous with
//! index-priority conflict resolution, so trajectories are fully
//! deterministic given the action sequence.

mod corridor;
mod tag;

pub use corridor::{CorridorConfig, CorridorGrid};
pub use tag::{TagConfig, TagGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-agent grid moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Up, Move::Down, Move::Left, Move::Right, Move::Stay];

    pub fn from_index(index: usize) -> Result<Move> {
        Move::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("action index {index} out of range 0..5")))
    }

    pub fn index(self) -> usize {
        Move::ALL.iter().position(|m| *m == self).unwrap()
    }

    /// Applies the move on a `width x height` grid, clamping at the borders.
    pub(crate) fn apply(self, col: usize, row: usize, width: usize, height: usize) -> (usize, usize) {
        match self {
            Move::Up => (col, row.saturating_sub(1)),
            Move::Down => (col, (row + 1).min(height - 1)),
            Move::Left => (col.saturating_sub(1), row),
            Move::Right => ((col + 1).min(width - 1), row),
            Move::Stay => (col, row),
        }
    }
}

/// Result of one environment step: the shared team reward and the episode
/// termination flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

/// Interface shared by the desk-scale cooperative environments.
///
/// Observations are deterministic given the state; each agent observes its
/// own local features only (its grid cell), which also serve as the state
/// identity for the successor-distance machinery.
pub trait DecPomdp {
    fn n_agents(&self) -> usize;

    /// Per-agent action count (the five grid moves).
    fn n_actions(&self) -> usize {
        Move::ALL.len()
    }

    /// Size of the per-agent local state space (`width * height`).
    fn n_local_states(&self) -> usize;

    fn grid_dims(&self) -> (usize, usize);

    fn max_steps(&self) -> usize;

    /// Restores the fixed initial configuration.
    fn reset(&mut self);

    /// Advances all agents simultaneously with the given joint action.
    ///
    /// Rejects joint actions whose length does not match the agent count.
    fn step(&mut self, joint_action: &[Move]) -> Result<StepOutcome>;

    /// The agent's own `(col, row)` cell; unaffected by other agents.
    fn local_features(&self, agent: usize) -> (usize, usize);

    /// Flattened local-state index, `row * width + col`.
    fn local_state(&self, agent: usize) -> usize {
        let (col, row) = self.local_features(agent);
        let (width, _) = self.grid_dims();
        row * width + col
    }
}

/// Inverse of [`DecPomdp::local_state`]: recovers `(col, row)` from the
/// flattened index.
pub fn features_from_state(state: usize, width: usize) -> (usize, usize) {
    (state % width, state / width)
}

/// Moves agents one at a time in index order. An agent moves only when its
/// target cell is neither blocked, occupied by an agent that has not yet
/// vacated it, nor already claimed this step; otherwise it stays. This
/// realizes simultaneous movement with index-priority conflict resolution:
/// the lower-indexed of two agents contending for a cell wins.
pub(crate) fn resolve_moves(
    positions: &mut [(usize, usize)],
    moves: &[Move],
    width: usize,
    height: usize,
    blocked: impl Fn(usize, usize) -> bool,
) {
    for i in 0..positions.len() {
        let (col, row) = positions[i];
        let (tc, tr) = moves[i].apply(col, row, width, height);
        if (tc, tr) == (col, row) || blocked(tc, tr) {
            continue;
        }
        if positions.contains(&(tc, tr)) {
            continue;
        }
        positions[i] = (tc, tr);
    }
}
