//! Per-agent signal-quality statistics and exploration budget allocation.
//!
//! Each agent's intrinsic-reward stream is treated as a noisy channel. Batch
//! mean and variance are tracked with EMAs, combined into a signal-to-noise
//! ratio, and mapped to a reward-signal-quality (RSQ) score in `[0, 1)`. Two
//! allocation mechanisms consume the per-agent quality:
//!
//! * the production path, a clipped affine modulation `h_i` of the global
//!   intensity, which keeps every agent above a minimum exploration level;
//! * the exact water-filling allocator, which maximizes the summed mutual
//!   information under a total power budget and zeroes out agents whose
//!   inverse SNR lies above the water level.
//!
//! Ordering and quality-gap diagnostics verify that both mechanisms allocate
//! more budget to agents with better signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance for the water-filling budget constraint.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// EMA of one agent's intrinsic-reward batch mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSignalStats {
    /// Smoothed batch mean of the intrinsic reward.
    pub mu: f64,
    /// Smoothed batch (population) variance of the intrinsic reward.
    pub sigma_sq: f64,
    /// EMA smoothing constant in (0, 1).
    pub alpha: f64,
}

impl AgentSignalStats {
    /// Fresh statistics: `mu = 0`, `sigma_sq = 1`. The deliberately
    /// pessimistic variance start makes every agent look noisy until real
    /// batches accumulate, which is what drives the warmup behavior.
    pub fn new(alpha: f64) -> Self {
        Self {
            mu: 0.0,
            sigma_sq: 1.0,
            alpha,
        }
    }

    /// Signal-to-noise ratio `mu^2 / (sigma_sq + epsilon)`.
    ///
    /// The same epsilon-regularized ratio feeds both the affine modulation
    /// and the water-filling oracle, so the two allocation modes see
    /// identical channel qualities.
    pub fn snr(&self, epsilon: f64) -> f64 {
        self.mu * self.mu / (self.sigma_sq + epsilon)
    }

    /// Reward signal quality `mu^2 / (mu^2 + sigma_sq + epsilon)` in `[0, 1)`.
    pub fn rsq(&self, epsilon: f64) -> f64 {
        let mu_sq = self.mu * self.mu;
        mu_sq / (mu_sq + self.sigma_sq + epsilon)
    }
}

/// Parameters of the affine modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RsqParams {
    /// EMA smoothing constant for per-agent signal statistics, in (0, 1).
    pub alpha: f64,
    /// Modulation sensitivity, >= 0 (0 disables per-agent modulation).
    pub lambda: f64,
    /// Reference quality level; agents at this RSQ keep `h = 1`.
    pub rsq_ref: f64,
    /// Lower modulation clip, in (0, 1].
    pub h_min: f64,
    /// Upper modulation clip, >= 1.
    pub h_max: f64,
    /// Numerical-stability constant in the RSQ denominator.
    pub epsilon: f64,
}

impl Default for RsqParams {
    /// Reference corridor configuration: `alpha = 0.1`, `lambda = 3.0`,
    /// `rsq_ref = 0.5` (equal signal and noise power), `h in [0.1, 2.0]`.
    fn default() -> Self {
        Self {
            alpha: 0.1,
            lambda: 3.0,
            rsq_ref: 0.5,
            h_min: 0.1,
            h_max: 2.0,
            epsilon: 1e-8,
        }
    }
}

impl RsqParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "rsq.alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "rsq.lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.rsq_ref.is_finite() && (0.0..=1.0).contains(&self.rsq_ref)) {
            return Err(Error::Config(format!(
                "rsq.rsq_ref must be in [0, 1], got {}",
                self.rsq_ref
            )));
        }
        if !(self.h_min.is_finite() && self.h_min > 0.0 && self.h_min <= 1.0) {
            return Err(Error::Config(format!(
                "rsq.h_min must be in (0, 1], got {}",
                self.h_min
            )));
        }
        if !(self.h_max.is_finite() && self.h_max >= 1.0) {
            return Err(Error::Config(format!(
                "rsq.h_max must be >= 1, got {}",
                self.h_max
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "rsq.epsilon must be finite and > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Result of one allocation pass over the team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AllocationResult {
    /// Clipped affine modulation weights, one per agent, each in
    /// `[h_min, h_max]`.
    Affine { weights: Vec<f64> },
    /// Exact water-filling powers `p_i = (nu - 1/SNR_i)^+` with
    /// `sum(p) = budget` and water level `nu`.
    WaterFilling {
        powers: Vec<f64>,
        water_level: f64,
        budget: f64,
    },
}

impl AllocationResult {
    /// Per-agent values regardless of mode: weights or powers.
    pub fn per_agent(&self) -> &[f64] {
        match self {
            AllocationResult::Affine { weights } => weights,
            AllocationResult::WaterFilling { powers, .. } => powers,
        }
    }
}

/// Folds one batch of intrinsic-reward samples into the agent's EMAs.
///
/// The batch variance is the population variance (divide by N); batches are
/// large enough that the bias against the sample variance is negligible.
pub fn update_stats(stats: &AgentSignalStats, batch: &[f64]) -> Result<AgentSignalStats> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch(
            "intrinsic-reward batch must contain at least one sample".into(),
        ));
    }
    let n = batch.len() as f64;
    let mean = batch.iter().sum::<f64>() / n;
    let var = batch.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(AgentSignalStats {
        mu: stats.alpha * mean + (1.0 - stats.alpha) * stats.mu,
        sigma_sq: stats.alpha * var + (1.0 - stats.alpha) * stats.sigma_sq,
        alpha: stats.alpha,
    })
}

/// Reward signal quality from explicit statistics. See [`AgentSignalStats::rsq`].
pub fn compute_rsq(stats: &AgentSignalStats, epsilon: f64) -> f64 {
    stats.rsq(epsilon)
}

/// Maps a raw signal-to-noise ratio to quality via `snr / (1 + snr)`.
///
/// Algebraically identical to [`compute_rsq`] when `snr = mu^2 / (sigma_sq + epsilon)`.
pub fn rsq_from_snr(snr: f64) -> f64 {
    snr / (1.0 + snr)
}

/// Clipped affine modulation `h = clip(1 + lambda * (rsq - rsq_ref), h_min, h_max)`.
pub fn modulation_weight(rsq: f64, params: &RsqParams) -> f64 {
    (1.0 + params.lambda * (rsq - params.rsq_ref)).clamp(params.h_min, params.h_max)
}

/// Exact water-filling allocation of `budget` across channels with the given
/// signal-to-noise ratios.
///
/// Solved by active-set iteration: channels are sorted by inverse SNR
/// ascending and included while the implied power stays positive; the water
/// level for each candidate active set has the closed form
/// `nu = (budget + sum of included inverse SNRs) / |active|`. Ties in SNR are
/// broken by agent index, so the result is deterministic.
///
/// A zero budget is the degenerate case: all powers zero and the water level
/// pinned at the smallest inverse SNR.
pub fn water_filling(snr: &[f64], budget: f64) -> Result<AllocationResult> {
    if snr.is_empty() {
        return Err(Error::InvalidInput("water filling requires at least one agent".into()));
    }
    for (i, &s) in snr.iter().enumerate() {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "water filling requires SNR > 0; agent {i} has SNR {s}"
            )));
        }
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "water filling requires a finite budget >= 0, got {budget}"
        )));
    }

    let n = snr.len();
    let inv: Vec<f64> = snr.iter().map(|s| 1.0 / s).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inv[a].partial_cmp(&inv[b]).unwrap().then(a.cmp(&b)));

    if budget == 0.0 {
        let nu = inv[order[0]];
        return Ok(AllocationResult::WaterFilling {
            powers: vec![0.0; n],
            water_level: nu,
            budget,
        });
    }

    // Valid active-set sizes form a prefix 1..=k; the optimal set is the
    // largest k whose water level still clears the worst included channel.
    let mut prefix = 0.0;
    let mut active = 0;
    let mut water_level = 0.0;
    for k in 1..=n {
        prefix += inv[order[k - 1]];
        let nu = (budget + prefix) / k as f64;
        if nu > inv[order[k - 1]] {
            active = k;
            water_level = nu;
        } else {
            break;
        }
    }
    debug_assert!(active >= 1, "k = 1 is always valid for a positive budget");

    let mut powers = vec![0.0; n];
    for &idx in order.iter().take(active) {
        powers[idx] = water_level - inv[idx];
    }
    Ok(AllocationResult::WaterFilling {
        powers,
        water_level,
        budget,
    })
}

/// Mutual information (nats) of one agent's exploration channel at intensity
/// `beta_i`: `0.5 * ln(1 + beta_i^2 * snr)`.
pub fn mutual_information(beta_i: f64, snr: f64) -> f64 {
    0.5 * (1.0 + beta_i * beta_i * snr).ln()
}

/// Outcome of the allocation-ordering diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub passed: bool,
    /// First violating agent pair `(i, j)` by original index, with a note on
    /// which check failed; `None` when the ordering holds.
    pub first_violation: Option<(usize, usize, String)>,
}

/// Verifies that both allocations order agents consistently with their SNRs:
/// non-increasing powers and weights when sorted by SNR descending, and
/// strictly decreasing where neither side of a pair is saturated (clipped
/// weights for the affine mode, zeroed powers for water filling).
pub fn ordering_check(
    snr: &[f64],
    affine: &AllocationResult,
    wf: &AllocationResult,
    params: &RsqParams,
) -> OrderingReport {
    let weights = match affine {
        AllocationResult::Affine { weights } => weights,
        AllocationResult::WaterFilling { .. } => {
            return OrderingReport {
                passed: false,
                first_violation: Some((0, 0, "affine argument is a water-filling result".into())),
            }
        }
    };
    let powers = match wf {
        AllocationResult::WaterFilling { powers, .. } => powers,
        AllocationResult::Affine { .. } => {
            return OrderingReport {
                passed: false,
                first_violation: Some((0, 0, "water-filling argument is an affine result".into())),
            }
        }
    };

    let n = snr.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| snr[b].partial_cmp(&snr[a]).unwrap().then(a.cmp(&b)));

    for w in order.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        if powers[hi] < powers[lo] {
            return OrderingReport {
                passed: false,
                first_violation: Some((hi, lo, format!(
                    "power ordering violated: p[{hi}] = {} < p[{lo}] = {}",
                    powers[hi], powers[lo]
                ))),
            };
        }
        if weights[hi] < weights[lo] {
            return OrderingReport {
                passed: false,
                first_violation: Some((hi, lo, format!(
                    "weight ordering violated: h[{hi}] = {} < h[{lo}] = {}",
                    weights[hi], weights[lo]
                ))),
            };
        }
        if snr[hi] > snr[lo] {
            let unsaturated = weights[hi] > params.h_min
                && weights[hi] < params.h_max
                && weights[lo] > params.h_min
                && weights[lo] < params.h_max;
            if unsaturated && weights[hi] <= weights[lo] {
                return OrderingReport {
                    passed: false,
                    first_violation: Some((hi, lo, format!(
                        "strict weight ordering violated for unsaturated pair: h[{hi}] = {}, h[{lo}] = {}",
                        weights[hi], weights[lo]
                    ))),
                };
            }
            if powers[hi] > 0.0 && powers[lo] > 0.0 && powers[hi] <= powers[lo] {
                return OrderingReport {
                    passed: false,
                    first_violation: Some((hi, lo, format!(
                        "strict power ordering violated for active pair: p[{hi}] = {}, p[{lo}] = {}",
                        powers[hi], powers[lo]
                    ))),
                };
            }
        }
    }
    OrderingReport {
        passed: true,
        first_violation: None,
    }
}

/// Maximum pairwise quality gap `max_ij |rsq_i - rsq_j|` (the max-minus-min
/// of the list). Requires at least two agents.
pub fn quality_gap(rsq: &[f64]) -> Result<f64> {
    if rsq.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "quality gap needs >= 2 agents, got {}",
            rsq.len()
        )));
    }
    let max = rsq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = rsq.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}
