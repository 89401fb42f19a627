//! Return-conditioned global exploration scheduling.
//!
//! The schedule tracks the team return with an exponential moving average and
//! maps it through a bounded logistic curve to a global exploration intensity
//! `beta`. A low smoothed return keeps `beta` near its ceiling (explore), a
//! high one pushes it toward the floor (exploit). The module also exposes the
//! contraction diagnostic that certifies the schedule's feedback loop has a
//! unique stable equilibrium, and the closed-form transition bandwidth of the
//! logistic curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sigmoid arguments are clamped to this magnitude before exponentiation so
/// extreme returns saturate cleanly instead of overflowing.
pub const SIGMOID_ARG_CLAMP: f64 = 500.0;

/// Logistic sigmoid with a clamped argument.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_ARG_CLAMP, SIGMOID_ARG_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

/// Parameters of the return-conditioned schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RcbParams {
    /// Intensity floor, > 0.
    pub beta_min: f64,
    /// Intensity ceiling, > `beta_min`.
    pub beta_max: f64,
    /// Sigmoid sharpness in 1/return-units, > 0.
    pub kappa: f64,
    /// Reference return level centering the explore-to-exploit transition.
    pub r_target: f64,
    /// Return-EMA smoothing constant in (0, 1).
    pub alpha_r: f64,
}

impl Default for RcbParams {
    /// Desk-scale corridor defaults. The intensity bounds and smoothing
    /// constant match the reference corridor configuration; `kappa` and
    /// `r_target` are rescaled to desk-scale gridworld returns (the
    /// transition bandwidth `2 ln(19) / kappa` should span the achievable
    /// return range).
    fn default() -> Self {
        Self {
            beta_min: 0.1,
            beta_max: 0.5,
            kappa: 1.0,
            r_target: 2.0,
            alpha_r: 0.03,
        }
    }
}

impl RcbParams {
    /// Checks the field invariants, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min.is_finite() && self.beta_min > 0.0) {
            return Err(Error::Config(format!(
                "rcb.beta_min must be finite and > 0, got {}",
                self.beta_min
            )));
        }
        if !(self.beta_max.is_finite() && self.beta_max > self.beta_min) {
            return Err(Error::Config(format!(
                "rcb.beta_max must be finite and > beta_min ({}), got {}",
                self.beta_min, self.beta_max
            )));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Config(format!(
                "rcb.kappa must be finite and > 0, got {}",
                self.kappa
            )));
        }
        if !self.r_target.is_finite() {
            return Err(Error::Config(format!(
                "rcb.r_target must be finite, got {}",
                self.r_target
            )));
        }
        if !(self.alpha_r.is_finite() && self.alpha_r > 0.0 && self.alpha_r < 1.0) {
            return Err(Error::Config(format!(
                "rcb.alpha_r must be in (0, 1), got {}",
                self.alpha_r
            )));
        }
        Ok(())
    }
}

/// Smoothed-return tracker and current global intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcbState {
    /// Exponential moving average of the team return. Starts at 0.
    pub r_ema: f64,
    /// Current global exploration intensity, always in `[beta_min, beta_max]`.
    pub beta: f64,
    /// Number of EMA updates applied so far.
    pub iteration: u64,
}

impl RcbState {
    /// Fresh state: `r_ema = 0`, `beta` evaluated at that starting point.
    pub fn new(params: &RcbParams) -> Self {
        let mut state = Self {
            r_ema: 0.0,
            beta: 0.0,
            iteration: 0,
        };
        state.beta = compute_beta(&state, params);
        state
    }
}

/// Contraction diagnostic for the schedule's return feedback loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// `kappa * (beta_max - beta_min) * slope_bound / 4`.
    pub lipschitz_product: f64,
    /// Lipschitz constant of the composed schedule map (equals the product).
    pub l_phi: f64,
    /// True when the product is strictly below 1.
    pub satisfied: bool,
    /// Implied geometric tracking rate `1 - alpha_r * (1 - l_phi)`.
    /// Lies in (0, 1) whenever the condition is satisfied.
    pub rho: f64,
}

/// Folds one observed team return into the EMA.
///
/// `beta` is left untouched; recompute it afterwards with [`compute_beta`].
/// Non-finite returns are rejected.
pub fn update_return_ema(
    state: &RcbState,
    params: &RcbParams,
    observed_return: f64,
) -> Result<RcbState> {
    if !observed_return.is_finite() {
        return Err(Error::InvalidInput(format!(
            "observed return must be finite, got {observed_return}"
        )));
    }
    Ok(RcbState {
        r_ema: params.alpha_r * observed_return + (1.0 - params.alpha_r) * state.r_ema,
        beta: state.beta,
        iteration: state.iteration + 1,
    })
}

/// Evaluates the bounded logistic schedule at the state's smoothed return.
///
/// `beta = beta_min + (beta_max - beta_min) * sigmoid(kappa * (r_target - r_ema))`.
pub fn compute_beta(state: &RcbState, params: &RcbParams) -> f64 {
    let arg = params.kappa * (params.r_target - state.r_ema);
    params.beta_min + (params.beta_max - params.beta_min) * sigmoid(arg)
}

/// Evaluates the contraction condition for a given bound on the slope of the
/// steady-state return response, `sup |dR/dbeta|`.
pub fn check_contraction(params: &RcbParams, return_slope_bound: f64) -> ContractionReport {
    let product = params.kappa * (params.beta_max - params.beta_min) * return_slope_bound / 4.0;
    ContractionReport {
        lipschitz_product: product,
        l_phi: product,
        satisfied: product < 1.0,
        rho: 1.0 - params.alpha_r * (1.0 - product),
    }
}

/// Width of the schedule's 5%-95% transition in return units: `2 ln(19) / kappa`.
pub fn transition_bandwidth(kappa: f64) -> f64 {
    2.0 * 19.0_f64.ln() / kappa
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn corridor_reference_params() -> RcbParams {
        // Intensity corridor with wide-range return units.
        RcbParams {
            beta_min: 0.1,
            beta_max: 0.5,
            kappa: 0.01,
            r_target: 400.0,
            alpha_r: 0.03,
        }
    }

    #[test]
    fn ema_single_step_from_zero() {
        let params = corridor_reference_params();
        let state = RcbState::new(&params);
        let next = update_return_ema(&state, &params, 100.0).unwrap();
        assert_relative_eq!(next.r_ema, 3.0, max_relative = 1e-15);
        assert_eq!(next.iteration, 1);
        assert_eq!(next.beta, state.beta, "beta must not move during the EMA update");
    }

    #[test]
    fn ema_fixed_point_is_invariant() {
        let params = corridor_reference_params();
        let state = RcbState {
            r_ema: 123.456,
            beta: 0.3,
            iteration: 7,
        };
        let next = update_return_ema(&state, &params, 123.456).unwrap();
        assert_relative_eq!(next.r_ema, 123.456, max_relative = 1e-15);
    }

    #[test]
    fn ema_converges_to_constant_input() {
        // Closed-form oracle: after k constant updates from 0,
        // r_ema = R * (1 - (1 - alpha)^k).
        let params = corridor_reference_params();
        let mut state = RcbState::new(&params);
        for _ in 0..500 {
            state = update_return_ema(&state, &params, 400.0).unwrap();
        }
        let expected = 400.0 * (1.0 - (1.0 - params.alpha_r).powi(500));
        assert_relative_eq!(state.r_ema, expected, max_relative = 1e-12);
        assert!((state.r_ema - 400.0).abs() < 1e-4);
    }

    #[test]
    fn ema_rejects_non_finite_returns() {
        let params = corridor_reference_params();
        let state = RcbState::new(&params);
        assert!(update_return_ema(&state, &params, f64::NAN).is_err());
        assert!(update_return_ema(&state, &params, f64::INFINITY).is_err());
    }

    #[test]
    fn beta_is_midpoint_at_target_return() {
        let params = corridor_reference_params();
        let state = RcbState {
            r_ema: 400.0,
            beta: 0.0,
            iteration: 0,
        };
        assert_relative_eq!(compute_beta(&state, &params), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn beta_saturates_to_ceiling_for_very_low_returns() {
        let params = corridor_reference_params();
        let state = RcbState {
            r_ema: -1e9,
            beta: 0.0,
            iteration: 0,
        };
        assert!((compute_beta(&state, &params) - params.beta_max).abs() < 1e-12);
    }

    #[test]
    fn beta_matches_independent_sigmoid_route() {
        // sigmoid(x) = (1 + tanh(x/2)) / 2 is an algebraically different route.
        let params = corridor_reference_params();
        let state = RcbState {
            r_ema: 600.0,
            beta: 0.0,
            iteration: 0,
        };
        let arg = params.kappa * (params.r_target - state.r_ema); // -2
        let oracle = params.beta_min
            + (params.beta_max - params.beta_min) * 0.5 * (1.0 + (arg / 2.0).tanh());
        assert_relative_eq!(compute_beta(&state, &params), oracle, epsilon = 1e-12);
        assert_relative_eq!(compute_beta(&state, &params), 0.14768116880884702, epsilon = 1e-12);
    }

    #[test]
    fn contraction_report_for_narrow_intensity_band() {
        // kappa = 0.01 with a 0.2-wide intensity band and slope bound 0.1.
        let params = RcbParams {
            beta_min: 0.3,
            beta_max: 0.5,
            kappa: 0.01,
            r_target: 3.0,
            alpha_r: 0.03,
        };
        let report = check_contraction(&params, 0.1);
        assert!((report.lipschitz_product - 5e-5).abs() < 1e-12);
        assert!(report.satisfied);
        assert!(report.rho > 0.0 && report.rho < 1.0);
    }

    #[test]
    fn contraction_flat_response() {
        let params = corridor_reference_params();
        let report = check_contraction(&params, 0.0);
        assert_eq!(report.lipschitz_product, 0.0);
        assert_relative_eq!(report.rho, 1.0 - params.alpha_r, epsilon = 1e-15);
    }

    #[test]
    fn contraction_negative_case() {
        let params = RcbParams {
            beta_min: 0.1,
            beta_max: 0.5,
            kappa: 0.01,
            r_target: 400.0,
            alpha_r: 0.03,
        };
        let report = check_contraction(&params, 2000.0);
        assert_relative_eq!(report.lipschitz_product, 2.0, epsilon = 1e-12);
        assert!(!report.satisfied);
    }

    #[test]
    fn bandwidth_closed_form() {
        assert!((transition_bandwidth(0.01) - 588.8877958332881).abs() < 1e-9);
        // sigma(x) = 0.95 at x = ln(19), so the 5%-95% width at kappa = 1 is 2 ln(19).
        assert_relative_eq!(transition_bandwidth(1.0), 2.0 * 19.0_f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn bandwidth_halves_when_kappa_doubles() {
        for kappa in [0.01, 0.5, 3.0] {
            assert_relative_eq!(
                transition_bandwidth(2.0 * kappa),
                transition_bandwidth(kappa) / 2.0,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn beta_bounded_for_all_finite_inputs() {
        let params = corridor_reference_params();
        for r_ema in [-1e308, -1e12, -5.0, 0.0, 399.9, 400.0, 1e6, 1e308] {
            let beta = compute_beta(
                &RcbState {
                    r_ema,
                    beta: 0.0,
                    iteration: 0,
                },
                &params,
            );
            assert!(beta >= params.beta_min && beta <= params.beta_max, "beta {beta} out of range");
        }
    }

    #[test]
    fn beta_strictly_decreasing_over_grid() {
        // 1000-point grid across the transition region; strict at every step.
        let params = corridor_reference_params();
        let lo = params.r_target - 2000.0;
        let hi = params.r_target + 2000.0;
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let r_ema = lo + (hi - lo) * i as f64 / 999.0;
            let beta = compute_beta(
                &RcbState {
                    r_ema,
                    beta: 0.0,
                    iteration: 0,
                },
                &params,
            );
            assert!(beta < prev, "not strictly decreasing at r_ema = {r_ema}");
            prev = beta;
        }
    }

    #[test]
    fn ema_error_contracts_by_one_minus_alpha() {
        let params = corridor_reference_params();
        let target = 250.0;
        let mut state = RcbState {
            r_ema: -40.0,
            beta: 0.0,
            iteration: 0,
        };
        for _ in 0..50 {
            let before = (state.r_ema - target).abs();
            state = update_return_ema(&state, &params, target).unwrap();
            let after = (state.r_ema - target).abs();
            assert_relative_eq!(after, (1.0 - params.alpha_r) * before, max_relative = 1e-12);
        }
    }

    #[test]
    fn operations_are_deterministic() {
        let params = corridor_reference_params();
        let state = RcbState {
            r_ema: 17.25,
            beta: 0.2,
            iteration: 3,
        };
        let a = update_return_ema(&state, &params, 91.5).unwrap();
        let b = update_return_ema(&state, &params, 91.5).unwrap();
        assert_eq!(a.r_ema.to_bits(), b.r_ema.to_bits());
        assert_eq!(
            compute_beta(&a, &params).to_bits(),
            compute_beta(&b, &params).to_bits()
        );
    }

    #[test]
    fn params_validation_names_offending_field() {
        let mut params = corridor_reference_params();
        params.alpha_r = 1.5;
        let err = params.validate().unwrap_err().to_string();
        assert!(err.contains("alpha_r"), "message was: {err}");

        let mut params = corridor_reference_params();
        params.beta_max = 0.05;
        let err = params.validate().unwrap_err().to_string();
        assert!(err.contains("beta_max"), "message was: {err}");
    }
}
