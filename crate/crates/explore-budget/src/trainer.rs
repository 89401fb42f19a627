//! Multi-agent policy-gradient trainer wiring the three mechanisms together.
//!
//! Each iteration runs four phases in a fixed order:
//!
//! 1. fold the mean return of the episodes completed this batch into the EMA
//!    and recompute the global intensity (skipped when no episode completed);
//! 2. update per-agent signal statistics from the raw intrinsic batches and
//!    derive the per-agent modulation weights for the selected allocation
//!    mode;
//! 3. assemble augmented rewards retroactively on the just-collected batch,
//!    compute advantages, and take clipped policy-gradient steps on the
//!    tabular softmax policies with analytic gradients;
//! 4. fold the batch's local-state transitions into per-agent counts and
//!    periodically rebuild the successor measures from them.
//!
//! Action selection during rollout uses only the current policy; the
//! exploration parameters computed in phases 1-2 are applied retroactively to
//! the same batch. Everything is deterministic given the seed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::envs::{DecPomdp, Move};
use crate::error::{Error, Result};
use crate::rcb::{compute_beta, update_return_ema, RcbParams, RcbState};
use crate::rsq::{
    modulation_weight, quality_gap, update_stats, water_filling, AgentSignalStats,
    AllocationResult, RsqParams,
};
use crate::sd::{
    default_unreachable_cap, intrinsic_reward, successor_measure, SdHistory, SuccessorMeasure,
    TabularMdp,
};

/// Schema version stamped into every serialized iteration record.
pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Rate at which the tabular value baselines track their regression targets
/// each update epoch.
const VALUE_FIT_RATE: f64 = 0.5;

/// Floor applied to estimated SNRs before water filling, which requires
/// strictly positive ratios; a fresh agent with `mu = 0` sits at the floor
/// and is effectively excluded unless every agent is there too.
const SNR_FLOOR: f64 = 1e-12;

/// Mean of the synthetic uniform-noise intrinsic source.
pub const UNIFORM_SOURCE_MEAN: f64 = 1.0;

/// Half-width of the synthetic uniform-noise intrinsic source.
pub const UNIFORM_SOURCE_HALF_WIDTH: f64 = 0.35;

/// Per-agent budget allocation mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMode {
    /// Clipped affine modulation of the global intensity (production path).
    Affine,
    /// Exact water filling; agents below the water level get zero intensity.
    WaterFilling,
    /// No per-agent modulation, `h = 1` for everyone.
    None,
}

/// Global intensity schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Return-conditioned schedule.
    Rcb,
    /// Constant `fixed_beta`, for the fixed-intensity ablations.
    Fixed,
}

/// Source of the per-agent intrinsic reward stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntrinsicSource {
    /// Successor-distance novelty over the agent's own trajectory history.
    Sd,
    /// `c + eta` with identical distribution for every agent: a source with
    /// no per-agent quality variation, under which modulation weights must
    /// collapse to a common value.
    UniformNoise,
}

/// Policy-update and rollout-shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub n_envs: usize,
    pub n_steps: usize,
    /// RL discount for advantages.
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub learning_rate: f64,
    pub update_epochs: usize,
    /// Fixed multiplier on the intrinsic reward, applied before the global
    /// intensity and modulation weight.
    pub intrinsic_scale: f64,
    pub total_iterations: usize,
    pub allocation: AllocationMode,
    pub schedule: ScheduleMode,
    /// Intensity used when `schedule = "fixed"`.
    pub fixed_beta: f64,
    pub intrinsic_source: IntrinsicSource,
    /// Debug flag: dump per-step trajectories and final successor measures
    /// alongside the record stream.
    pub debug_trajectories: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            n_envs: 16,
            n_steps: 64,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            learning_rate: 1.0,
            update_epochs: 4,
            intrinsic_scale: 2.0,
            total_iterations: 600,
            allocation: AllocationMode::Affine,
            schedule: ScheduleMode::Rcb,
            fixed_beta: 0.5,
            intrinsic_source: IntrinsicSource::Sd,
            debug_trajectories: false,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_envs == 0 || self.n_steps == 0 {
            return Err(Error::Config(
                "trainer.n_envs and trainer.n_steps must be >= 1".into(),
            ));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "trainer.gamma must be in [0, 1), got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config(format!(
                "trainer.gae_lambda must be in [0, 1], got {}",
                self.gae_lambda
            )));
        }
        if !(self.clip_ratio.is_finite() && self.clip_ratio > 0.0) {
            return Err(Error::Config(format!(
                "trainer.clip_ratio must be > 0, got {}",
                self.clip_ratio
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "trainer.learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.update_epochs == 0 {
            return Err(Error::Config("trainer.update_epochs must be >= 1".into()));
        }
        if !(self.intrinsic_scale.is_finite() && self.intrinsic_scale >= 0.0) {
            return Err(Error::Config(format!(
                "trainer.intrinsic_scale must be >= 0, got {}",
                self.intrinsic_scale
            )));
        }
        if self.total_iterations == 0 {
            return Err(Error::Config("trainer.total_iterations must be >= 1".into()));
        }
        if !(self.fixed_beta.is_finite() && self.fixed_beta > 0.0) {
            return Err(Error::Config(format!(
                "trainer.fixed_beta must be > 0, got {}",
                self.fixed_beta
            )));
        }
        Ok(())
    }
}

/// Successor-distance computation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdConfig {
    /// Successor discount.
    pub gamma: f64,
    /// Rebuild measures from the empirical transition counts every this many
    /// iterations. Measures depend on the behavior policy; this bounds their
    /// staleness.
    pub refresh_every: usize,
    /// Laplace smoothing added to every transition count.
    pub laplace: f64,
}

impl Default for SdConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            refresh_every: 10,
            laplace: 1e-3,
        }
    }
}

impl SdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "sd.gamma must be in (0, 1), got {}",
                self.gamma
            )));
        }
        if self.refresh_every == 0 {
            return Err(Error::Config("sd.refresh_every must be >= 1".into()));
        }
        if !(self.laplace.is_finite() && self.laplace > 0.0) {
            return Err(Error::Config(format!(
                "sd.laplace must be > 0, got {}",
                self.laplace
            )));
        }
        Ok(())
    }
}

/// Per-agent softmax policy over local states.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    /// Row-major `state x action` logits.
    logits: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            logits: vec![0.0; n_states * n_actions],
        }
    }

    pub fn logits(&self, state: usize) -> &[f64] {
        &self.logits[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Action probabilities for one state; sums to 1 within 1e-12.
    pub fn probs(&self, state: usize) -> Vec<f64> {
        let row = self.logits(state);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut exp: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        for e in &mut exp {
            *e /= total;
        }
        exp
    }

    pub fn log_prob(&self, state: usize, action: usize) -> f64 {
        let row = self.logits(state);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|l| (l - max).exp()).sum::<f64>().ln() + max;
        row[action] - log_sum
    }

    /// Samples an action and returns `(action, log_prob)`.
    pub fn sample(&self, state: usize, rng: &mut ChaCha20Rng) -> (usize, f64) {
        let probs = self.probs(state);
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        let mut action = self.n_actions - 1;
        for (a, &p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                action = a;
                break;
            }
        }
        (action, self.log_prob(state, action))
    }

    pub fn is_finite(&self) -> bool {
        self.logits.iter().all(|l| l.is_finite())
    }
}

/// Generalized advantage estimation over one environment's step sequence.
///
/// `bootstrap` is the value of the state following the final step, ignored
/// when that step terminated an episode. With `lambda = 0` this reduces to
/// the one-step TD advantage.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * mask * next_value - values[t];
        carry = delta + gamma * lambda * mask * carry;
        advantages[t] = carry;
    }
    advantages
}

/// One agent's slice of a rollout batch, flattened env-major
/// (`index = env * n_steps + step`).
pub struct AgentRollout<'a> {
    pub states: &'a [usize],
    pub actions: &'a [usize],
    pub old_logp: &'a [f64],
    /// Augmented rewards.
    pub rewards: &'a [f64],
    /// Value estimates recorded at collection time.
    pub values: &'a [f64],
    pub dones: &'a [bool],
    /// Per-env bootstrap values for batch-final states.
    pub bootstrap: &'a [f64],
    pub n_envs: usize,
    pub n_steps: usize,
}

/// Clipped policy-gradient update of one agent's tabular policy and value
/// baseline. Advantages are normalized per batch; the analytic softmax
/// gradient ascends the clipped surrogate for `update_epochs` epochs while
/// the value table regresses toward the advantage-corrected returns.
pub fn update_agent_policy(
    policy: &mut TabularPolicy,
    value_table: &mut [f64],
    rollout: &AgentRollout,
    config: &TrainerConfig,
    iteration: u64,
    agent: usize,
) -> Result<()> {
    let batch_len = rollout.states.len();
    debug_assert_eq!(batch_len, rollout.n_envs * rollout.n_steps);

    // Advantages and value targets from the collection-time values.
    let mut advantages = Vec::with_capacity(batch_len);
    for env in 0..rollout.n_envs {
        let lo = env * rollout.n_steps;
        let hi = lo + rollout.n_steps;
        advantages.extend(gae_advantages(
            &rollout.rewards[lo..hi],
            &rollout.values[lo..hi],
            &rollout.dones[lo..hi],
            rollout.bootstrap[env],
            config.gamma,
            config.gae_lambda,
        ));
    }
    let returns: Vec<f64> = advantages
        .iter()
        .zip(rollout.values)
        .map(|(a, v)| a + v)
        .collect();

    // Batch normalization of advantages; degenerate batches (zero spread)
    // are left untouched so zero advantages stay exactly zero.
    let n = batch_len as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    if var.sqrt() > 1e-12 {
        let std = var.sqrt();
        for a in &mut advantages {
            *a = (*a - mean) / std;
        }
    }

    let n_actions = policy.n_actions;
    let mut grad = vec![0.0; policy.logits.len()];
    let mut state_return_sum = vec![0.0; value_table.len()];
    let mut state_count = vec![0u32; value_table.len()];
    for _ in 0..config.update_epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (i, &adv) in advantages.iter().enumerate() {
            let s = rollout.states[i];
            let a = rollout.actions[i];
            let ratio = (policy.log_prob(s, a) - rollout.old_logp[i]).exp();
            let clipped_out = (adv >= 0.0 && ratio > 1.0 + config.clip_ratio)
                || (adv < 0.0 && ratio < 1.0 - config.clip_ratio);
            if clipped_out {
                continue;
            }
            let coeff = adv * ratio;
            let probs = policy.probs(s);
            let row = &mut grad[s * n_actions..(s + 1) * n_actions];
            for (a_other, p) in probs.iter().enumerate() {
                let indicator = if a_other == a { 1.0 } else { 0.0 };
                row[a_other] += coeff * (indicator - p);
            }
        }
        let step = config.learning_rate / n;
        for (l, g) in policy.logits.iter_mut().zip(&grad) {
            *l += step * g;
        }
        if !policy.is_finite() {
            return Err(Error::NonFiniteGradient { iteration, agent });
        }

        // Value regression toward the per-state mean return.
        state_return_sum.iter_mut().for_each(|v| *v = 0.0);
        state_count.iter_mut().for_each(|c| *c = 0);
        for (s, r) in rollout.states.iter().zip(&returns) {
            state_return_sum[*s] += r;
            state_count[*s] += 1;
        }
        for (s, v) in value_table.iter_mut().enumerate() {
            if state_count[s] > 0 {
                let target = state_return_sum[s] / state_count[s] as f64;
                *v += VALUE_FIT_RATE * (target - *v);
            }
        }
    }
    Ok(())
}

/// Everything collected during one iteration's rollouts.
pub struct RolloutBatch {
    pub n_agents: usize,
    pub n_envs: usize,
    pub n_steps: usize,
    /// Shared extrinsic reward, flattened env-major.
    pub ext_rewards: Vec<f64>,
    /// Episode-termination flags, flattened env-major.
    pub dones: Vec<bool>,
    /// Per-agent arrays, each flattened env-major.
    pub states: Vec<Vec<usize>>,
    pub actions: Vec<Vec<usize>>,
    pub old_logp: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    /// Raw (unscaled) intrinsic rewards.
    pub intrinsic: Vec<Vec<f64>>,
    /// Per-agent, per-env bootstrap values for the batch-final state.
    pub bootstrap: Vec<Vec<f64>>,
    /// Mean team return over episodes completed in this batch; absent when
    /// none completed.
    pub mean_return: Option<f64>,
}

impl RolloutBatch {
    /// Augmented rewards `r_ext + beta * h_i * (scale * r_int)` per agent.
    /// The per-agent streams differ only in the intrinsic term.
    pub fn assemble_rewards(&self, beta: f64, weights: &[f64], intrinsic_scale: f64) -> Vec<Vec<f64>> {
        (0..self.n_agents)
            .map(|agent| {
                let gain = beta * weights[agent] * intrinsic_scale;
                self.ext_rewards
                    .iter()
                    .zip(&self.intrinsic[agent])
                    .map(|(ext, int)| ext + gain * int)
                    .collect()
            })
            .collect()
    }
}

/// Per-agent metrics of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub mu: f64,
    pub sigma_sq: f64,
    pub rsq: f64,
    pub h: f64,
    pub mean_intrinsic: f64,
}

/// One training iteration's metrics. Serialized as one JSON line per
/// iteration; the wall-clock field is kept out of the serialized stream so
/// record streams are byte-identical across equal-seed reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub schema: u32,
    pub iteration: u64,
    pub mean_team_return: Option<f64>,
    pub r_ema: f64,
    pub beta: f64,
    pub agents: Vec<AgentRecord>,
    pub quality_gap: f64,
    #[serde(skip_serializing, default)]
    pub wall_clock_ms: f64,
}

/// Full trainer state for one seed.
pub struct Trainer {
    config: RunConfig,
    rcb_params: RcbParams,
    rsq_params: RsqParams,
    envs: Vec<Box<dyn DecPomdp>>,
    policies: Vec<TabularPolicy>,
    value_tables: Vec<Vec<f64>>,
    rcb_state: RcbState,
    stats: Vec<AgentSignalStats>,
    measures: Vec<SuccessorMeasure>,
    transition_counts: Vec<Vec<f64>>,
    histories: Vec<Vec<SdHistory>>,
    episode_return_acc: Vec<f64>,
    unreachable_cap: f64,
    n_agents: usize,
    n_local_states: usize,
    iteration: u64,
    rng: ChaCha20Rng,
}

impl Trainer {
    pub fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let t = &config.trainer;
        let mut envs = Vec::with_capacity(t.n_envs);
        for _ in 0..t.n_envs {
            envs.push(config.env.build()?);
        }
        let n_agents = envs[0].n_agents();
        let n_local_states = envs[0].n_local_states();
        let n_actions = envs[0].n_actions();

        let measures = (0..n_agents)
            .map(|_| {
                let mdp = TabularMdp::from_counts(
                    &vec![0.0; n_local_states * n_local_states],
                    n_local_states,
                    config.sd.gamma,
                    config.sd.laplace,
                )?;
                Ok(successor_measure(&mdp))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            rcb_params: config.rcb,
            rsq_params: config.rsq,
            rcb_state: RcbState::new(&config.rcb),
            stats: vec![AgentSignalStats::new(config.rsq.alpha); n_agents],
            policies: vec![TabularPolicy::new(n_local_states, n_actions); n_agents],
            value_tables: vec![vec![0.0; n_local_states]; n_agents],
            transition_counts: vec![vec![0.0; n_local_states * n_local_states]; n_agents],
            histories: vec![vec![SdHistory::new(); t.n_envs]; n_agents],
            episode_return_acc: vec![0.0; t.n_envs],
            unreachable_cap: default_unreachable_cap(config.sd.gamma, n_local_states),
            measures,
            envs,
            n_agents,
            n_local_states,
            iteration: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
            config: config.clone(),
        })
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn rcb_state(&self) -> &RcbState {
        &self.rcb_state
    }

    pub fn agent_stats(&self) -> &[AgentSignalStats] {
        &self.stats
    }

    pub fn policies(&self) -> &[TabularPolicy] {
        &self.policies
    }

    /// Per-agent RSQ and modulation weight implied by the current statistics
    /// under the configured allocation mode, without advancing training.
    pub fn current_modulation(&self) -> (Vec<f64>, Vec<f64>) {
        let rsq: Vec<f64> = self
            .stats
            .iter()
            .map(|s| s.rsq(self.rsq_params.epsilon))
            .collect();
        let beta = self.current_beta();
        let weights = self.allocation_weights(&rsq, beta);
        (rsq, weights)
    }

    fn current_beta(&self) -> f64 {
        match self.config.trainer.schedule {
            ScheduleMode::Rcb => compute_beta(&self.rcb_state, &self.rcb_params),
            ScheduleMode::Fixed => self.config.trainer.fixed_beta,
        }
    }

    fn allocation_weights(&self, rsq: &[f64], beta: f64) -> Vec<f64> {
        match self.config.trainer.allocation {
            AllocationMode::None => vec![1.0; self.n_agents],
            AllocationMode::Affine => rsq
                .iter()
                .map(|&q| modulation_weight(q, &self.rsq_params))
                .collect(),
            AllocationMode::WaterFilling => {
                let snr: Vec<f64> = self
                    .stats
                    .iter()
                    .map(|s| s.snr(self.rsq_params.epsilon).max(SNR_FLOOR))
                    .collect();
                let budget = self.n_agents as f64 * beta * beta;
                match water_filling(&snr, budget).expect("floored SNRs are positive") {
                    AllocationResult::WaterFilling { powers, .. } => {
                        powers.iter().map(|p| p.sqrt() / beta).collect()
                    }
                    AllocationResult::Affine { .. } => unreachable!(),
                }
            }
        }
    }

    /// Rolls out all environments for the configured horizon using only the
    /// current policies. Intrinsic rewards are computed against each agent's
    /// within-episode history with the current successor measures.
    pub fn collect_rollouts(&mut self) -> Result<RolloutBatch> {
        let t = self.config.trainer;
        let flat = t.n_envs * t.n_steps;
        let mut batch = RolloutBatch {
            n_agents: self.n_agents,
            n_envs: t.n_envs,
            n_steps: t.n_steps,
            ext_rewards: vec![0.0; flat],
            dones: vec![false; flat],
            states: vec![vec![0; flat]; self.n_agents],
            actions: vec![vec![0; flat]; self.n_agents],
            old_logp: vec![vec![0.0; flat]; self.n_agents],
            values: vec![vec![0.0; flat]; self.n_agents],
            intrinsic: vec![vec![0.0; flat]; self.n_agents],
            bootstrap: vec![vec![0.0; t.n_envs]; self.n_agents],
            mean_return: None,
        };
        let mut completed_returns = Vec::new();
        let mut joint = vec![Move::Stay; self.n_agents];

        for env_idx in 0..t.n_envs {
            for step in 0..t.n_steps {
                let i = env_idx * t.n_steps + step;
                for (agent, slot) in joint.iter_mut().enumerate() {
                    let state = self.envs[env_idx].local_state(agent);
                    let r_int = match t.intrinsic_source {
                        IntrinsicSource::Sd => intrinsic_reward(
                            &mut self.histories[agent][env_idx],
                            &self.measures[agent],
                            state,
                            self.unreachable_cap,
                        ),
                        IntrinsicSource::UniformNoise => {
                            UNIFORM_SOURCE_MEAN
                                + UNIFORM_SOURCE_HALF_WIDTH
                                    * (2.0 * self.rng.random::<f64>() - 1.0)
                        }
                    };
                    let (action, logp) = self.policies[agent].sample(state, &mut self.rng);
                    batch.states[agent][i] = state;
                    batch.actions[agent][i] = action;
                    batch.old_logp[agent][i] = logp;
                    batch.values[agent][i] = self.value_tables[agent][state];
                    batch.intrinsic[agent][i] = r_int;
                    *slot = Move::from_index(action)?;
                }
                let outcome = self.envs[env_idx].step(&joint)?;
                batch.ext_rewards[i] = outcome.reward;
                batch.dones[i] = outcome.done;
                self.episode_return_acc[env_idx] += outcome.reward;

                for agent in 0..self.n_agents {
                    let next_state = self.envs[env_idx].local_state(agent);
                    self.transition_counts[agent]
                        [batch.states[agent][i] * self.n_local_states + next_state] += 1.0;
                }
                if outcome.done {
                    completed_returns.push(self.episode_return_acc[env_idx]);
                    self.episode_return_acc[env_idx] = 0.0;
                    self.envs[env_idx].reset();
                    for agent in 0..self.n_agents {
                        self.histories[agent][env_idx].clear();
                    }
                }
            }
            let final_done = batch.dones[env_idx * t.n_steps + t.n_steps - 1];
            for agent in 0..self.n_agents {
                batch.bootstrap[agent][env_idx] = if final_done {
                    0.0
                } else {
                    self.value_tables[agent][self.envs[env_idx].local_state(agent)]
                };
            }
        }
        if !completed_returns.is_empty() {
            batch.mean_return =
                Some(completed_returns.iter().sum::<f64>() / completed_returns.len() as f64);
        }
        Ok(batch)
    }

    /// Runs one full iteration (phases 1-4) and returns its record.
    pub fn step_iteration(&mut self) -> Result<IterationRecord> {
        Ok(self.step_iteration_with_batch()?.0)
    }

    /// Like [`Trainer::step_iteration`] but also hands back the rollout
    /// batch, for trajectory dumps and inspection.
    pub fn step_iteration_with_batch(&mut self) -> Result<(IterationRecord, RolloutBatch)> {
        let start = Instant::now();
        let batch = self.collect_rollouts()?;

        // Phase 1: return EMA, then the intensity from the updated EMA.
        if let Some(observed) = batch.mean_return {
            self.rcb_state = update_return_ema(&self.rcb_state, &self.rcb_params, observed)?;
        }
        let beta = self.current_beta();
        self.rcb_state.beta = beta;

        // Phase 2: signal statistics, RSQ, modulation weights.
        for agent in 0..self.n_agents {
            self.stats[agent] = update_stats(&self.stats[agent], &batch.intrinsic[agent])?;
        }
        let rsq: Vec<f64> = self
            .stats
            .iter()
            .map(|s| s.rsq(self.rsq_params.epsilon))
            .collect();
        let weights = self.allocation_weights(&rsq, beta);

        // Phase 3: retroactive reward assembly and the policy update.
        let augmented = batch.assemble_rewards(beta, &weights, self.config.trainer.intrinsic_scale);
        for (agent, rewards) in augmented.iter().enumerate() {
            let rollout = AgentRollout {
                states: &batch.states[agent],
                actions: &batch.actions[agent],
                old_logp: &batch.old_logp[agent],
                rewards,
                values: &batch.values[agent],
                dones: &batch.dones,
                bootstrap: &batch.bootstrap[agent],
                n_envs: batch.n_envs,
                n_steps: batch.n_steps,
            };
            update_agent_policy(
                &mut self.policies[agent],
                &mut self.value_tables[agent],
                &rollout,
                &self.config.trainer,
                self.iteration,
                agent,
            )?;
        }

        // Phase 4: measure refresh from accumulated transition counts.
        if (self.iteration + 1).is_multiple_of(self.config.sd.refresh_every as u64) {
            self.refresh_measures()?;
        }

        let record = IterationRecord {
            schema: RECORD_SCHEMA_VERSION,
            iteration: self.iteration,
            mean_team_return: batch.mean_return,
            r_ema: self.rcb_state.r_ema,
            beta,
            agents: (0..self.n_agents)
                .map(|agent| {
                    let flat = batch.intrinsic[agent].len() as f64;
                    AgentRecord {
                        mu: self.stats[agent].mu,
                        sigma_sq: self.stats[agent].sigma_sq,
                        rsq: rsq[agent],
                        h: weights[agent],
                        mean_intrinsic: batch.intrinsic[agent].iter().sum::<f64>() / flat,
                    }
                })
                .collect(),
            quality_gap: if self.n_agents >= 2 {
                quality_gap(&rsq)?
            } else {
                0.0
            },
            wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        self.iteration += 1;
        Ok((record, batch))
    }

    fn refresh_measures(&mut self) -> Result<()> {
        for agent in 0..self.n_agents {
            let mdp = TabularMdp::from_counts(
                &self.transition_counts[agent],
                self.n_local_states,
                self.config.sd.gamma,
                self.config.sd.laplace,
            )?;
            self.measures[agent] = successor_measure(&mdp);
        }
        Ok(())
    }

    /// Dumps each agent's smoothed empirical transition matrix (rebuilt from
    /// the current counts) and the successor measure currently in effect to
    /// plain-text matrix files under `dir`.
    pub fn write_measures(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for agent in 0..self.n_agents {
            let mdp = TabularMdp::from_counts(
                &self.transition_counts[agent],
                self.n_local_states,
                self.config.sd.gamma,
                self.config.sd.laplace,
            )?;
            let mut file = std::fs::File::create(dir.join(format!("transition_agent{agent}.txt")))?;
            mdp.write_matrix(&mut file)?;
            let mut file = std::fs::File::create(dir.join(format!("measure_agent{agent}.txt")))?;
            self.measures[agent].write_matrix(&mut file)?;
        }
        Ok(())
    }

    /// Runs every configured iteration, returning the record stream.
    pub fn run(&mut self) -> Result<Vec<IterationRecord>> {
        let mut records = Vec::with_capacity(self.config.trainer.total_iterations);
        for _ in 0..self.config.trainer.total_iterations {
            records.push(self.step_iteration()?);
        }
        Ok(records)
    }
}

/// Convenience wrapper: build a trainer for `seed` and run it to completion.
pub fn run_training(config: &RunConfig, seed: u64) -> Result<Vec<IterationRecord>> {
    Trainer::new(config, seed)?.run()
}
