//! Quality-aware exploration budget allocation for cooperative multi-agent
//! reinforcement learning.
//!
//! Three mechanisms make up the framework:
//!
//! * **Return-conditioned scheduling** ([`rcb`]) — a bounded logistic map
//!   from the smoothed team return to a global exploration intensity, with a
//!   checkable contraction condition guaranteeing a unique stable schedule
//!   equilibrium.
//! * **Signal-quality allocation** ([`rsq`]) — per-agent SNR statistics of
//!   the intrinsic-reward stream, mapped to modulation weights that
//!   concentrate the exploration budget on agents with reliable signals.
//!   An exact water-filling allocator serves as the information-optimal
//!   reference point.
//! * **Successor-distance intrinsic rewards** ([`sd`]) — an exact tabular
//!   log-ratio quasimetric over discounted successor measures, driving a
//!   min-over-history novelty bonus.
//!
//! The [`trainer`] wires the mechanisms into a desk-scale multi-agent
//! policy-gradient loop over the gridworlds in [`envs`], and
//! [`convergence`] is a numerical laboratory for the schedule's contraction,
//! fixed-point, and noise-floor guarantees. [`harness`] provides the
//! run/sweep/ablate/verify/check operations behind the CLI; see the crate
//! examples for one runnable entry point per capability.

pub mod checks;
pub mod config;
pub mod convergence;
pub mod envs;
pub mod error;
pub mod harness;
pub mod rcb;
pub mod report;
pub mod rsq;
pub mod sd;
pub mod trainer;

pub use error::{Error, Result};
