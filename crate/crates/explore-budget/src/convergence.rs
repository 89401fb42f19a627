//! Numerical laboratory for the schedule's convergence guarantees.
//!
//! The coupled training loop is replaced by a synthetic steady-state return
//! response `R(beta)` with a closed-form slope bound, so the contraction
//! condition is checkable without estimation error. The lab then verifies,
//! numerically:
//!
//! * geometric contraction of the noiseless tracking error at the implied
//!   rate `rho = 1 - alpha_r * (1 - L_phi)`;
//! * uniqueness of the schedule equilibrium by bisection plus an exhaustive
//!   grid sign-scan;
//! * the stochastic noise floor `alpha_r * sigma^2 / (1 - L_phi)` on the
//!   steady-state mean squared tracking error.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::rcb::{check_contraction, compute_beta, sigmoid, RcbParams, RcbState};

/// Synthetic steady-state return response with an analytic slope bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResponseFunction {
    /// `R(beta) = intercept + slope * beta`.
    Linear { intercept: f64, slope: f64 },
    /// `R(beta) = center + amplitude * tanh(steepness * (beta - midpoint))`.
    TanhSaturating {
        center: f64,
        amplitude: f64,
        steepness: f64,
        midpoint: f64,
    },
}

impl ResponseFunction {
    pub fn value(&self, beta: f64) -> f64 {
        match *self {
            ResponseFunction::Linear { intercept, slope } => intercept + slope * beta,
            ResponseFunction::TanhSaturating {
                center,
                amplitude,
                steepness,
                midpoint,
            } => center + amplitude * (steepness * (beta - midpoint)).tanh(),
        }
    }

    /// Closed-form `sup |dR/dbeta|`.
    pub fn slope_bound(&self) -> f64 {
        match *self {
            ResponseFunction::Linear { slope, .. } => slope.abs(),
            ResponseFunction::TanhSaturating {
                amplitude,
                steepness,
                ..
            } => (amplitude * steepness).abs(),
        }
    }

    /// Range of the response over the intensity interval.
    pub fn bounds(&self, params: &RcbParams) -> (f64, f64) {
        let a = self.value(params.beta_min);
        let b = self.value(params.beta_max);
        (a.min(b), a.max(b))
    }
}

/// Zero-mean observation noise on the returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Noise standard deviation in return units.
    pub sigma: f64,
    pub distribution: NoiseDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    Gaussian,
    /// Uniform on `[-sigma * sqrt(3), sigma * sqrt(3)]`, variance-matched to
    /// the Gaussian.
    Uniform,
}

enum NoiseSampler {
    Gaussian(Normal<f64>),
    Uniform(Uniform<f64>),
}

impl NoiseSampler {
    fn new(model: &NoiseModel) -> Self {
        match model.distribution {
            NoiseDistribution::Gaussian => NoiseSampler::Gaussian(
                Normal::new(0.0, model.sigma).expect("sigma must be finite and >= 0"),
            ),
            NoiseDistribution::Uniform => {
                let half_width = model.sigma * 3f64.sqrt();
                NoiseSampler::Uniform(
                    Uniform::new_inclusive(-half_width, half_width).expect("valid range"),
                )
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> f64 {
        match self {
            NoiseSampler::Gaussian(d) => d.sample(rng),
            NoiseSampler::Uniform(d) => d.sample(rng),
        }
    }
}

/// One simulated schedule run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTrajectory {
    /// Smoothed return after each iteration's update.
    pub r_ema: Vec<f64>,
    /// Intensity recomputed from the updated EMA at each iteration.
    pub beta: Vec<f64>,
    /// Whether the contraction condition held for this configuration. Runs
    /// outside the regime still execute but are labeled, not asserted on.
    pub in_regime: bool,
}

/// Iterates the schedule against the synthetic response: observe
/// `R(beta) + noise`, fold into the EMA, recompute the intensity.
pub fn simulate_schedule(
    response: &ResponseFunction,
    params: &RcbParams,
    noise: Option<&NoiseModel>,
    iterations: usize,
    seed: u64,
) -> ScheduleTrajectory {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sampler = noise.map(NoiseSampler::new);
    let in_regime = check_contraction(params, response.slope_bound()).satisfied;

    let mut state = RcbState::new(params);
    let mut r_ema = Vec::with_capacity(iterations);
    let mut beta = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut observed = response.value(state.beta);
        if let Some(sampler) = &sampler {
            observed += sampler.sample(&mut rng);
        }
        state = crate::rcb::update_return_ema(&state, params, observed)
            .expect("synthetic returns are finite");
        state.beta = compute_beta(&state, params);
        r_ema.push(state.r_ema);
        beta.push(state.beta);
    }
    ScheduleTrajectory {
        r_ema,
        beta,
        in_regime,
    }
}

/// Schedule equilibrium located by bisection, with a grid sign-scan for
/// uniqueness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub beta_star: f64,
    pub r_star: f64,
    /// All roots of `Phi(beta) - beta` found by the sign-scan (each bisected
    /// to tolerance). Contains exactly `beta_star` in-regime.
    pub roots: Vec<f64>,
    /// True when the sign-scan found exactly one sign change. Only asserted
    /// by callers when the contraction condition holds.
    pub unique: bool,
    pub in_regime: bool,
}

/// Tolerance to which fixed points are bisected.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

const SIGN_SCAN_POINTS: usize = 10_000;

/// Composed one-step schedule map `Phi(beta) = g(R(beta))`.
pub fn schedule_map(response: &ResponseFunction, params: &RcbParams, beta: f64) -> f64 {
    let arg = params.kappa * (params.r_target - response.value(beta));
    params.beta_min + (params.beta_max - params.beta_min) * sigmoid(arg)
}

fn bisect_root(response: &ResponseFunction, params: &RcbParams, mut lo: f64, mut hi: f64) -> f64 {
    let residual = |b: f64| schedule_map(response, params, b) - b;
    let mut f_lo = residual(lo);
    for _ in 0..200 {
        if hi - lo <= FIXED_POINT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = residual(mid);
        if (f_lo >= 0.0) == (f_mid >= 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Locates the equilibrium of the composed map on `[beta_min, beta_max]`.
///
/// `Phi` maps the interval into its own interior, so a root always exists;
/// in-regime it is unique and the sign-scan confirms a single sign change.
/// Out of regime every root found by the scan is reported and uniqueness is
/// not asserted.
pub fn find_fixed_point(response: &ResponseFunction, params: &RcbParams) -> FixedPointReport {
    let in_regime = check_contraction(params, response.slope_bound()).satisfied;
    let residual = |b: f64| schedule_map(response, params, b) - b;

    let mut roots = Vec::new();
    let mut prev_b = params.beta_min;
    let mut prev_f = residual(prev_b);
    for i in 1..=SIGN_SCAN_POINTS {
        let b = params.beta_min
            + (params.beta_max - params.beta_min) * i as f64 / SIGN_SCAN_POINTS as f64;
        let f = residual(b);
        if f == 0.0 {
            roots.push(b);
        } else if (prev_f > 0.0) != (f > 0.0) {
            roots.push(bisect_root(response, params, prev_b, b));
        }
        prev_b = b;
        prev_f = f;
    }
    if roots.is_empty() {
        // Phi maps into the open interior, so a sign change always exists;
        // reaching this means degenerate rounding. Bisect the full interval.
        roots.push(bisect_root(response, params, params.beta_min, params.beta_max));
    }

    let beta_star = roots[0];
    FixedPointReport {
        beta_star,
        r_star: response.value(beta_star),
        unique: roots.len() == 1,
        roots,
        in_regime,
    }
}

/// Geometric rate fitted to the noiseless error decay.
///
/// Fits the least-squares slope of `ln |r_ema_k - r_star|` over the segment
/// before the error reaches the numerical floor. Returns `None` when the
/// trajectory starts at the fixed point (no decaying segment to fit).
pub fn measure_contraction_rate(trajectory: &ScheduleTrajectory, r_star: f64) -> Option<f64> {
    let floor = 1e-13 * r_star.abs().max(1.0);
    let log_errors: Vec<f64> = trajectory
        .r_ema
        .iter()
        .map(|r| (r - r_star).abs())
        .take_while(|e| *e > floor)
        .map(|e| e.ln())
        .collect();
    if log_errors.len() < 2 {
        return None;
    }
    let n = log_errors.len() as f64;
    let mean_k = (n - 1.0) / 2.0;
    let mean_y = log_errors.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (k, y) in log_errors.iter().enumerate() {
        let dk = k as f64 - mean_k;
        cov += dk * (y - mean_y);
        var += dk * dk;
    }
    Some((cov / var).exp())
}

/// Steady-state tracking error of the noisy schedule against the theoretical
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloorReport {
    /// Mean of `(r_ema - r_star)^2` over the second half of each trajectory,
    /// averaged across seeds.
    pub measured_mse: f64,
    /// `alpha_r * sigma^2 / (1 - l_phi)`.
    pub bound: f64,
    pub l_phi: f64,
    pub seeds: usize,
    pub iterations: usize,
}

/// Averages the steady-state squared tracking error over seeds and compares
/// it against the stochastic bound. The steady-state window is the second
/// half of each trajectory; the mixing time under contraction is
/// `O(1 / (alpha_r * (1 - l_phi)))` iterations, so the iteration count
/// should sit comfortably above that.
pub fn measure_noise_floor(
    response: &ResponseFunction,
    params: &RcbParams,
    noise: &NoiseModel,
    iterations: usize,
    n_seeds: usize,
    base_seed: u64,
) -> NoiseFloorReport {
    let fixed_point = find_fixed_point(response, params);
    let contraction = check_contraction(params, response.slope_bound());
    let mut total = 0.0;
    let mut count = 0usize;
    for s in 0..n_seeds {
        let trajectory = simulate_schedule(
            response,
            params,
            Some(noise),
            iterations,
            base_seed.wrapping_add(s as u64),
        );
        for r in &trajectory.r_ema[iterations / 2..] {
            let e = r - fixed_point.r_star;
            total += e * e;
        }
        count += iterations - iterations / 2;
    }
    NoiseFloorReport {
        measured_mse: total / count as f64,
        bound: params.alpha_r * noise.sigma * noise.sigma / (1.0 - contraction.l_phi),
        l_phi: contraction.l_phi,
        seeds: n_seeds,
        iterations,
    }
}
