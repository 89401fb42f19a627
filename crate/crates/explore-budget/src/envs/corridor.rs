//! Bottleneck corridor gridworld.
//!
//! Agents start on opposite sides of a wall row with a narrow gap and must
//! reach goals across the wall. The shared reward is a small distance-shaping
//! term plus an arrival bonus paid once per agent, so the extrinsic signal
//! stays sparse-ish and exploration matters. The single gap forces the team
//! through one cell, which is what differentiates per-agent signal quality:
//! congestion near the gap makes those agents' novelty streams erratic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{resolve_moves, DecPomdp, Move, StepOutcome};

/// Weight of the mean-distance shaping term. Small enough that shaping never
/// dominates the arrival bonus.
pub const DISTANCE_SHAPING: f64 = 0.01;

/// Arrival bonus paid the first time an agent reaches its goal in an episode.
pub const ARRIVAL_BONUS: f64 = 1.0;

/// Corridor geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorridorConfig {
    pub width: usize,
    pub height: usize,
    pub n_agents: usize,
    /// Number of open cells in the bottleneck wall (grids with `height >= 3`
    /// place the wall across the middle row).
    pub bottleneck_gap: usize,
    pub max_steps: usize,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            width: 11,
            height: 7,
            n_agents: 4,
            bottleneck_gap: 1,
            max_steps: 64,
        }
    }
}

impl CorridorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 1 {
            return Err(Error::Config(format!(
                "env.width/env.height must be at least 2x1, got {}x{}",
                self.width, self.height
            )));
        }
        if self.n_agents == 0 {
            return Err(Error::Config("env.n_agents must be >= 1".into()));
        }
        if self.height >= 3 && (self.bottleneck_gap == 0 || self.bottleneck_gap >= self.width) {
            return Err(Error::Config(format!(
                "env.bottleneck_gap must be in 1..width, got {}",
                self.bottleneck_gap
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("env.max_steps must be >= 1".into()));
        }
        let per_side = self.n_agents.div_ceil(2);
        if self.height >= 3 && per_side >= self.width {
            return Err(Error::Config(format!(
                "{} agents per side do not fit a width-{} corridor",
                per_side, self.width
            )));
        }
        Ok(())
    }
}

/// Bottleneck corridor environment.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorGrid {
    width: usize,
    height: usize,
    max_steps: usize,
    /// True for wall cells, row-major.
    walls: Vec<bool>,
    starts: Vec<(usize, usize)>,
    goals: Vec<(usize, usize)>,
    positions: Vec<(usize, usize)>,
    arrived: Vec<bool>,
    step_count: usize,
    done: bool,
}

impl CorridorGrid {
    /// Builds the default layout: a wall with a centered gap across the
    /// middle row, agents split between the top and bottom rows, and each
    /// agent's goal mirrored to the opposite side at its start column.
    pub fn new(config: &CorridorConfig) -> Result<Self> {
        config.validate()?;
        let (width, height, n) = (config.width, config.height, config.n_agents);

        let mut walls = vec![false; width * height];
        if height >= 3 {
            let wall_row = height / 2;
            // Off-center gap: agents start at different distances from it,
            // which is the congestion-vs-edge asymmetry that differentiates
            // per-agent signal quality.
            let gap_start = (width / 4).min(width - config.bottleneck_gap);
            for col in 0..width {
                let open = col >= gap_start && col < gap_start + config.bottleneck_gap;
                walls[wall_row * width + col] = !open;
            }
        }

        let mut starts = Vec::with_capacity(n);
        let mut goals = Vec::with_capacity(n);
        if height >= 3 {
            let n_top = n.div_ceil(2);
            for i in 0..n {
                let (side, k, count) = if i < n_top {
                    (0, i, n_top)
                } else {
                    (height - 1, i - n_top, n - n_top)
                };
                let col = (k + 1) * width / (count + 1);
                starts.push((col, side));
                goals.push((col, height - 1 - side));
            }
        } else {
            // Degenerate flat layouts used for single-agent fixtures: start
            // at the left edge, goal at the mirrored far corner.
            for i in 0..n {
                let (col, row) = (i % width, i / width);
                starts.push((col, row));
                goals.push((width - 1 - col, height - 1 - row));
            }
        }

        Self::with_layout(width, height, walls, starts, goals, config.max_steps)
    }

    /// Builds an explicit layout. Starts must be distinct, and no start or
    /// goal may sit on a wall cell.
    pub fn with_layout(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        starts: Vec<(usize, usize)>,
        goals: Vec<(usize, usize)>,
        max_steps: usize,
    ) -> Result<Self> {
        if walls.len() != width * height {
            return Err(Error::InvalidInput("wall mask does not match the grid".into()));
        }
        if starts.len() != goals.len() || starts.is_empty() {
            return Err(Error::InvalidInput(
                "starts and goals must be non-empty and matched".into(),
            ));
        }
        for (i, &(c, r)) in starts.iter().chain(goals.iter()).enumerate() {
            if c >= width || r >= height || walls[r * width + c] {
                return Err(Error::InvalidInput(format!(
                    "start/goal {i} at ({c}, {r}) is off-grid or inside a wall"
                )));
            }
        }
        for i in 0..starts.len() {
            for j in (i + 1)..starts.len() {
                if starts[i] == starts[j] {
                    return Err(Error::InvalidInput(format!(
                        "agents {i} and {j} share the start cell {:?}",
                        starts[i]
                    )));
                }
            }
        }
        let n = starts.len();
        Ok(Self {
            width,
            height,
            max_steps,
            walls,
            positions: starts.clone(),
            starts,
            goals,
            arrived: vec![false; n],
            step_count: 0,
            done: false,
        })
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn goals(&self) -> &[(usize, usize)] {
        &self.goals
    }

    pub fn is_wall(&self, col: usize, row: usize) -> bool {
        self.walls[row * self.width + col]
    }

    fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
        a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
    }
}

impl DecPomdp for CorridorGrid {
    fn n_agents(&self) -> usize {
        self.positions.len()
    }

    fn n_local_states(&self) -> usize {
        self.width * self.height
    }

    fn grid_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self) {
        self.positions.copy_from_slice(&self.starts);
        self.arrived.fill(false);
        self.step_count = 0;
        self.done = false;
    }

    fn step(&mut self, joint_action: &[Move]) -> Result<StepOutcome> {
        if joint_action.len() != self.n_agents() {
            return Err(Error::InvalidInput(format!(
                "joint action has {} entries for {} agents",
                joint_action.len(),
                self.n_agents()
            )));
        }
        if self.done {
            return Err(Error::InvalidInput(
                "episode already done; reset before stepping".into(),
            ));
        }

        let walls = &self.walls;
        let width = self.width;
        resolve_moves(&mut self.positions, joint_action, width, self.height, |c, r| {
            walls[r * width + c]
        });
        self.step_count += 1;

        let n = self.positions.len() as f64;
        let mut reward = 0.0;
        let mut all_at_goal = true;
        for (i, &pos) in self.positions.iter().enumerate() {
            reward -= DISTANCE_SHAPING * Self::manhattan(pos, self.goals[i]) as f64 / n;
            if pos == self.goals[i] {
                if !self.arrived[i] {
                    self.arrived[i] = true;
                    reward += ARRIVAL_BONUS;
                }
            } else {
                all_at_goal = false;
            }
        }
        self.done = all_at_goal || self.step_count >= self.max_steps;
        Ok(StepOutcome {
            reward,
            done: self.done,
        })
    }

    fn local_features(&self, agent: usize) -> (usize, usize) {
        self.positions[agent]
    }
}
