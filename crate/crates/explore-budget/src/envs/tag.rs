//! Pursuit gridworld: learning predators chase scripted prey.
//!
//! Prey move after the predators each step, deterministically picking the
//! move that maximizes their minimum Manhattan distance to any predator
//! (first move in enumeration order on ties). The team earns +1 per prey
//! within the capture radius per step, and episodes run a fixed length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{resolve_moves, DecPomdp, Move, StepOutcome};

/// Pursuit grid geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TagConfig {
    pub width: usize,
    pub height: usize,
    pub n_predators: usize,
    pub n_prey: usize,
    /// Manhattan radius within which a prey counts as captured.
    pub capture_radius: usize,
    pub max_steps: usize,
}

impl Default for TagConfig {
    fn default() -> Self {
        Self {
            width: 9,
            height: 9,
            n_predators: 3,
            n_prey: 1,
            capture_radius: 2,
            max_steps: 64,
        }
    }
}

impl TagConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 1 {
            return Err(Error::Config(format!(
                "env.width/env.height must be at least 2x1, got {}x{}",
                self.width, self.height
            )));
        }
        if self.n_predators == 0 || self.n_prey == 0 {
            return Err(Error::Config(
                "env.n_predators and env.n_prey must be >= 1".into(),
            ));
        }
        if self.n_predators > 4 {
            return Err(Error::Config(
                "the default layout places predators at the corners; at most 4 supported".into(),
            ));
        }
        if self.n_prey > self.width {
            return Err(Error::Config(format!(
                "{} prey do not fit the center row of a width-{} grid",
                self.n_prey, self.width
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("env.max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Pursuit environment. Learning agents are the predators; prey are scripted.
#[derive(Debug, Clone, PartialEq)]
pub struct TagGrid {
    width: usize,
    height: usize,
    capture_radius: usize,
    max_steps: usize,
    predator_starts: Vec<(usize, usize)>,
    prey_starts: Vec<(usize, usize)>,
    predators: Vec<(usize, usize)>,
    prey: Vec<(usize, usize)>,
    step_count: usize,
    done: bool,
}

impl TagGrid {
    /// Default layout: predators at the grid corners in order, prey across
    /// the center.
    pub fn new(config: &TagConfig) -> Result<Self> {
        config.validate()?;
        let (w, h) = (config.width, config.height);
        let corners = [(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1)];
        let predator_starts: Vec<_> = corners.into_iter().take(config.n_predators).collect();
        let center_row = (h - 1) / 2;
        let prey_starts: Vec<_> = (0..config.n_prey)
            .map(|i| (((i + 1) * w / (config.n_prey + 1)).min(w - 1), center_row))
            .collect();
        Self::with_layout(
            w,
            h,
            predator_starts,
            prey_starts,
            config.capture_radius,
            config.max_steps,
        )
    }

    /// Explicit layout; all positions must be distinct and on-grid.
    pub fn with_layout(
        width: usize,
        height: usize,
        predator_starts: Vec<(usize, usize)>,
        prey_starts: Vec<(usize, usize)>,
        capture_radius: usize,
        max_steps: usize,
    ) -> Result<Self> {
        let mut all: Vec<_> = predator_starts.iter().chain(prey_starts.iter()).collect();
        all.sort();
        let distinct = all.windows(2).all(|w| w[0] != w[1]);
        if !distinct {
            return Err(Error::InvalidInput("entities share a start cell".into()));
        }
        for &&(c, r) in &all {
            if c >= width || r >= height {
                return Err(Error::InvalidInput(format!("start ({c}, {r}) is off-grid")));
            }
        }
        Ok(Self {
            width,
            height,
            capture_radius,
            max_steps,
            predators: predator_starts.clone(),
            prey: prey_starts.clone(),
            predator_starts,
            prey_starts,
            step_count: 0,
            done: false,
        })
    }

    pub fn predators(&self) -> &[(usize, usize)] {
        &self.predators
    }

    pub fn prey(&self) -> &[(usize, usize)] {
        &self.prey
    }

    fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
        a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
    }

    fn min_predator_distance(&self, cell: (usize, usize)) -> usize {
        self.predators
            .iter()
            .map(|&p| Self::manhattan(cell, p))
            .min()
            .unwrap()
    }

    /// Scripted prey rule: the first move in enumeration order that
    /// maximizes the minimum distance to any predator, skipping cells
    /// occupied by predators or other prey.
    fn prey_move(&self, prey_index: usize) -> (usize, usize) {
        let current = self.prey[prey_index];
        let mut best = current;
        let mut best_distance = 0;
        let mut found = false;
        for mv in Move::ALL {
            let target = mv.apply(current.0, current.1, self.width, self.height);
            let occupied = target != current
                && (self.predators.contains(&target) || self.prey.contains(&target));
            if occupied {
                continue;
            }
            let distance = self.min_predator_distance(target);
            if !found || distance > best_distance {
                best = target;
                best_distance = distance;
                found = true;
            }
        }
        best
    }
}

impl DecPomdp for TagGrid {
    fn n_agents(&self) -> usize {
        self.predators.len()
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
        self.predators.copy_from_slice(&self.predator_starts);
        self.prey.copy_from_slice(&self.prey_starts);
        self.step_count = 0;
        self.done = false;
    }

    fn step(&mut self, joint_action: &[Move]) -> Result<StepOutcome> {
        if joint_action.len() != self.n_agents() {
            return Err(Error::InvalidInput(format!(
                "joint action has {} entries for {} predators",
                joint_action.len(),
                self.n_agents()
            )));
        }
        if self.done {
            return Err(Error::InvalidInput(
                "episode already done; reset before stepping".into(),
            ));
        }

        // Predators move first; prey cells block them.
        let prey_cells = self.prey.clone();
        resolve_moves(
            &mut self.predators,
            joint_action,
            self.width,
            self.height,
            |c, r| prey_cells.contains(&(c, r)),
        );
        // Prey respond in index order.
        for i in 0..self.prey.len() {
            let target = self.prey_move(i);
            self.prey[i] = target;
        }

        self.step_count += 1;
        let reward = self
            .prey
            .iter()
            .filter(|&&p| self.min_predator_distance(p) <= self.capture_radius)
            .count() as f64;
        self.done = self.step_count >= self.max_steps;
        Ok(StepOutcome {
            reward,
            done: self.done,
        })
    }

    fn local_features(&self, agent: usize) -> (usize, usize) {
        self.predators[agent]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_shape() {
        let grid = TagGrid::new(&TagConfig::default()).unwrap();
        assert_eq!(grid.n_agents(), 3);
        assert_eq!(grid.predators(), &[(0, 0), (8, 0), (0, 8)]);
        assert_eq!(grid.prey(), &[(4, 4)]);
    }

    #[test]
    fn no_predator_in_radius_means_zero_reward() {
        let mut grid = TagGrid::new(&TagConfig::default()).unwrap();
        let outcome = grid.step(&[Move::Stay, Move::Stay, Move::Stay]).unwrap();
        assert_eq!(outcome.reward, 0.0);
    }

    #[test]
    fn cornered_prey_pays_each_step() {
        // Prey boxed into the corner by an adjacent predator.
        let mut grid =
            TagGrid::with_layout(3, 1, vec![(1, 0)], vec![(2, 0)], 1, 8).unwrap();
        let outcome = grid.step(&[Move::Stay]).unwrap();
        assert!(outcome.reward >= 1.0);
    }

    #[test]
    fn greedy_predator_line_hand_trace() {
        // 9x1 line, predator at 0 chasing a prey starting at 4 toward the
        // wall. Hand simulation of the scripted prey rule gives captures on
        // steps 7 through 10.
        let mut grid = TagGrid::with_layout(9, 1, vec![(0, 0)], vec![(4, 0)], 1, 64).unwrap();
        let expected_rewards = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let expected_prey_cols = [5, 6, 7, 8, 8, 8, 8, 8, 8, 8];
        for step in 0..10 {
            let outcome = grid.step(&[Move::Right]).unwrap();
            assert_eq!(
                outcome.reward, expected_rewards[step],
                "reward mismatch at step {}",
                step + 1
            );
            assert_eq!(
                grid.prey()[0].0,
                expected_prey_cols[step],
                "prey column mismatch at step {}",
                step + 1
            );
        }
        // The predator parks next to the prey; it can never enter its cell.
        assert_eq!(grid.predators()[0], (7, 0));
    }

    #[test]
    fn prey_rule_is_deterministic() {
        let run = || {
            let mut grid = TagGrid::new(&TagConfig::default()).unwrap();
            let mut log = Vec::new();
            for _ in 0..30 {
                let joint: Vec<Move> = (0..3)
                    .map(|i| {
                        let (pc, pr) = grid.local_features(i);
                        let (qc, qr) = grid.prey()[0];
                        if pc < qc {
                            Move::Right
                        } else if pc > qc {
                            Move::Left
                        } else if pr < qr {
                            Move::Down
                        } else {
                            Move::Up
                        }
                    })
                    .collect();
                let outcome = grid.step(&joint).unwrap();
                log.push((grid.predators().to_vec(), grid.prey().to_vec(), outcome.reward.to_bits()));
            }
            log
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn entities_never_share_cells() {
        let mut grid = TagGrid::new(&TagConfig::default()).unwrap();
        for _ in 0..64 {
            let joint: Vec<Move> = (0..3)
                .map(|i| {
                    let (pc, pr) = grid.local_features(i);
                    let (qc, qr) = grid.prey()[0];
                    if pc < qc {
                        Move::Right
                    } else if pc > qc {
                        Move::Left
                    } else if pr < qr {
                        Move::Down
                    } else if pr > qr {
                        Move::Up
                    } else {
                        Move::Stay
                    }
                })
                .collect();
            let outcome = grid.step(&joint).unwrap();
            let mut cells: Vec<_> = grid
                .predators()
                .iter()
                .chain(grid.prey().iter())
                .collect();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 4, "entities overlap");
            if outcome.done {
                break;
            }
        }
    }

    #[test]
    fn episode_runs_to_max_steps() {
        let mut grid = TagGrid::new(&TagConfig {
            max_steps: 4,
            ..TagConfig::default()
        })
        .unwrap();
        for step in 1..=4 {
            let outcome = grid.step(&[Move::Stay, Move::Stay, Move::Stay]).unwrap();
            assert_eq!(outcome.done, step == 4);
        }
    }

    #[test]
    fn malformed_joint_action_rejected() {
        let mut grid = TagGrid::new(&TagConfig::default()).unwrap();
        assert!(grid.step(&[Move::Stay]).is_err());
    }

    #[test]
    fn stepping_after_done_requires_reset() {
        let mut grid = TagGrid::new(&TagConfig {
            max_steps: 1,
            ..TagConfig::default()
        })
        .unwrap();
        let stay = [Move::Stay, Move::Stay, Move::Stay];
        assert!(grid.step(&stay).unwrap().done);
        assert!(grid.step(&stay).is_err());
        grid.reset();
        assert_eq!(grid.predators(), &[(0, 0), (8, 0), (0, 8)]);
        assert!(grid.step(&stay).is_ok());
    }
}
