//! Named verification checks behind the `check` and `verify` subcommands.
//!
//! Each check pairs the implementation with an independent oracle route:
//! bisection against the active-set water level, a truncated power series
//! against the linear-solve successor measure, the AR(1) closed form against
//! the measured noise floor, and exhaustive scans for the analytic claims.
//! The acceptance test suite runs these same checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::convergence::{
    find_fixed_point, measure_noise_floor, simulate_schedule, NoiseDistribution, NoiseModel,
    ResponseFunction,
};
use crate::rcb::{check_contraction, transition_bandwidth, RcbParams};
use crate::rsq::{
    modulation_weight, mutual_information, ordering_check, rsq_from_snr, water_filling,
    AgentSignalStats, AllocationResult, RsqParams,
};
use crate::sd::{check_quasimetric, successor_measure, TabularMdp};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: false,
            detail,
        }
    }
}

/// The three parameter sets used by the convergence laboratory fixtures.
pub fn lab_params() -> [RcbParams; 3] {
    [
        RcbParams {
            beta_min: 0.1,
            beta_max: 0.5,
            kappa: 0.01,
            r_target: 400.0,
            alpha_r: 0.03,
        },
        RcbParams {
            beta_min: 0.05,
            beta_max: 0.45,
            kappa: 0.02,
            r_target: 150.0,
            alpha_r: 0.05,
        },
        RcbParams {
            beta_min: 0.1,
            beta_max: 0.3,
            kappa: 0.005,
            r_target: 250.0,
            alpha_r: 0.1,
        },
    ]
}

/// The three response fixtures; every (response, params) pair is in-regime.
pub fn lab_responses() -> [ResponseFunction; 3] {
    [
        ResponseFunction::Linear {
            intercept: 100.0,
            slope: 50.0,
        },
        ResponseFunction::Linear {
            intercept: 300.0,
            slope: -40.0,
        },
        ResponseFunction::TanhSaturating {
            center: 200.0,
            amplitude: 150.0,
            steepness: 2.0,
            midpoint: 0.3,
        },
    ]
}

/// Noiseless contraction and fixed-point uniqueness on the 9 lab fixtures:
/// per-step error within `rho^k |e0| + 1e-10`, a unique sign change on the
/// equilibrium scan, and terminal error below 1e-8 against the bisection
/// oracle.
pub fn contraction_convergence_check() -> CheckOutcome {
    const NAME: &str = "contraction-convergence";
    const ITERATIONS: usize = 4000;
    let mut worst_terminal: f64 = 0.0;
    for params in lab_params() {
        for response in lab_responses() {
            let report = check_contraction(&params, response.slope_bound());
            if !report.satisfied {
                return CheckOutcome::fail(
                    NAME,
                    format!("fixture unexpectedly out of regime: product {}", report.lipschitz_product),
                );
            }
            let fp = find_fixed_point(&response, &params);
            if !fp.unique {
                return CheckOutcome::fail(
                    NAME,
                    format!("sign scan found {} roots for an in-regime fixture", fp.roots.len()),
                );
            }
            let trajectory = simulate_schedule(&response, &params, None, ITERATIONS, 0);
            let e0 = fp.r_star.abs(); // r_ema starts at 0
            let mut envelope = e0;
            for (k, r) in trajectory.r_ema.iter().enumerate() {
                envelope *= report.rho;
                let error = (r - fp.r_star).abs();
                if error > envelope + 1e-10 {
                    return CheckOutcome::fail(
                        NAME,
                        format!("error {error} above rho^k bound {envelope} at iteration {k}"),
                    );
                }
            }
            let terminal = (trajectory.r_ema[ITERATIONS - 1] - fp.r_star).abs();
            worst_terminal = worst_terminal.max(terminal);
            if terminal >= 1e-8 {
                return CheckOutcome::fail(NAME, format!("terminal error {terminal} >= 1e-8"));
            }
        }
    }
    CheckOutcome::pass(
        NAME,
        format!("9 fixtures contract geometrically; worst terminal error {worst_terminal:.3e}"),
    )
}

/// Closed-form stationary variance of the pure-EMA AR(1) recursion,
/// `alpha^2 sigma^2 / (1 - (1 - alpha)^2)`.
pub fn ar1_stationary_variance(alpha: f64, sigma: f64) -> f64 {
    alpha * alpha * sigma * sigma / (1.0 - (1.0 - alpha) * (1.0 - alpha))
}

/// Noise floor on a 3x3x3 grid of (alpha_r, l_phi, sigma): the measured
/// steady-state MSE must respect `alpha sigma^2 / (1 - l_phi)` on every cell
/// and sit within 2x of the AR(1) closed form on the flat-response cells.
pub fn noise_floor_check() -> CheckOutcome {
    const NAME: &str = "noise-floor";
    let alphas = [0.015, 0.03, 0.06];
    let l_phis = [0.0, 0.3, 0.6];
    let sigmas = [1.0, 5.0, 10.0];
    let base = RcbParams {
        beta_min: 0.1,
        beta_max: 0.5,
        kappa: 0.01,
        r_target: 400.0,
        alpha_r: 0.03,
    };
    let mut worst_fraction: f64 = 0.0;
    for (ai, &alpha_r) in alphas.iter().enumerate() {
        for (li, &l_phi) in l_phis.iter().enumerate() {
            for (si, &sigma) in sigmas.iter().enumerate() {
                let params = RcbParams { alpha_r, ..base };
                // slope = 4 l_phi / (kappa * delta_beta)
                let slope = 4.0 * l_phi / (params.kappa * (params.beta_max - params.beta_min));
                let response = ResponseFunction::Linear {
                    intercept: 100.0,
                    slope,
                };
                let seed = (ai * 100 + li * 10 + si) as u64;
                let noise = NoiseModel {
                    sigma,
                    distribution: NoiseDistribution::Gaussian,
                };
                let report = measure_noise_floor(&response, &params, &noise, 20_000, 20, seed);
                if report.measured_mse > report.bound {
                    return CheckOutcome::fail(
                        NAME,
                        format!(
                            "cell (alpha {alpha_r}, l_phi {l_phi}, sigma {sigma}): mse {} above bound {}",
                            report.measured_mse, report.bound
                        ),
                    );
                }
                worst_fraction = worst_fraction.max(report.measured_mse / report.bound);
                if l_phi == 0.0 {
                    let oracle = ar1_stationary_variance(alpha_r, sigma);
                    let ratio = report.measured_mse / oracle;
                    if !(0.5..2.0).contains(&ratio) {
                        return CheckOutcome::fail(
                            NAME,
                            format!("flat cell ratio to AR(1) oracle out of [0.5, 2): {ratio}"),
                        );
                    }
                }
            }
        }
    }
    CheckOutcome::pass(
        NAME,
        format!("27 cells under the bound; worst mse/bound fraction {worst_fraction:.3}"),
    )
}

/// Ordering preservation over 1000 random SNR vectors (2 to 16 agents,
/// log-uniform SNR in [1e-3, 1e3]) for both allocation mechanisms.
pub fn ordering_preservation_check() -> CheckOutcome {
    const NAME: &str = "ordering-preservation";
    let params = RsqParams::default();
    let mut rng = ChaCha20Rng::seed_from_u64(20_250_101);
    for trial in 0..1000 {
        let n = rng.random_range(2..=16usize);
        let snr: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-3.0..3.0)))
            .collect();
        let weights: Vec<f64> = snr
            .iter()
            .map(|&s| modulation_weight(rsq_from_snr(s), &params))
            .collect();
        let budget = rng.random_range(0.1..4.0) * n as f64;
        let wf = match water_filling(&snr, budget) {
            Ok(result) => result,
            Err(e) => return CheckOutcome::fail(NAME, format!("trial {trial}: {e}")),
        };
        let report = ordering_check(&snr, &AllocationResult::Affine { weights }, &wf, &params);
        if !report.passed {
            return CheckOutcome::fail(
                NAME,
                format!("trial {trial}: {:?}", report.first_violation),
            );
        }
    }
    CheckOutcome::pass(NAME, "1000 random instances, zero ordering violations".into())
}

/// Water-filling feasibility (budget met to 1e-9, bisected water level in
/// agreement) and optimality against 1e4 budget-normalized random feasible
/// allocations per instance on 100 small instances.
pub fn water_filling_check() -> CheckOutcome {
    const NAME: &str = "water-filling";
    let mut rng = ChaCha20Rng::seed_from_u64(4242);
    let mut worst_budget_gap: f64 = 0.0;
    for instance in 0..100 {
        let n = rng.random_range(2..=4usize);
        let snr: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
            .collect();
        let budget = rng.random_range(0.2..6.0);
        let result = match water_filling(&snr, budget) {
            Ok(r) => r,
            Err(e) => return CheckOutcome::fail(NAME, format!("instance {instance}: {e}")),
        };
        let (powers, water_level) = match &result {
            AllocationResult::WaterFilling {
                powers,
                water_level,
                ..
            } => (powers, *water_level),
            AllocationResult::Affine { .. } => unreachable!(),
        };
        let total: f64 = powers.iter().sum();
        worst_budget_gap = worst_budget_gap.max((total - budget).abs());
        if (total - budget).abs() > 1e-9 {
            return CheckOutcome::fail(
                NAME,
                format!("instance {instance}: budget gap {}", (total - budget).abs()),
            );
        }
        let oracle_level = water_level_by_bisection(&snr, budget);
        if (water_level - oracle_level).abs() > 1e-7 {
            return CheckOutcome::fail(
                NAME,
                format!("instance {instance}: water level {water_level} vs bisection {oracle_level}"),
            );
        }
        let objective = |p: &[f64]| -> f64 {
            p.iter()
                .zip(&snr)
                .map(|(&p, &s)| mutual_information(p.sqrt(), s))
                .sum()
        };
        let best = objective(powers);
        for _ in 0..10_000 {
            let draws: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
            let total: f64 = draws.iter().sum();
            let candidate: Vec<f64> = draws.iter().map(|d| budget * d / total).collect();
            if objective(&candidate) > best + 1e-12 {
                return CheckOutcome::fail(
                    NAME,
                    format!("instance {instance}: random allocation beat the water filling"),
                );
            }
        }
    }
    CheckOutcome::pass(
        NAME,
        format!("100 instances optimal vs 1e4 random allocations each; worst budget gap {worst_budget_gap:.2e}"),
    )
}

/// Bisection oracle for the water level: solve `sum((nu - 1/snr)^+) = budget`
/// on a monotone residual. Independent of the active-set route.
pub fn water_level_by_bisection(snr: &[f64], budget: f64) -> f64 {
    let inv: Vec<f64> = snr.iter().map(|s| 1.0 / s).collect();
    let mut lo = inv.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = inv.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + budget;
    let allocated = |nu: f64| inv.iter().map(|&v| (nu - v).max(0.0)).sum::<f64>();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if allocated(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scale invariance of the quality metric: `|rsq(c mu, c^2 sigma^2) -
/// rsq(mu, sigma^2)| < 1e-6` for c in {1e-3, 1, 1e3} over 1e4 random
/// statistics whose base and scaled values both sit above the 1e-2 floor,
/// plus the balanced boundary case.
pub fn scale_invariance_check() -> CheckOutcome {
    const NAME: &str = "rsq-scale-invariance";
    let epsilon = 1e-8;
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for c in [1e-3, 1.0, 1e3] {
        let mu_floor = 0.1 / f64::min(1.0, c);
        let var_floor = 1e-2 / f64::min(1.0, c * c);
        for _ in 0..10_000 {
            let mu = mu_floor * 10f64.powf(rng.random_range(0.0..2.0));
            let sigma_sq = var_floor * 10f64.powf(rng.random_range(0.0..4.0));
            let base = AgentSignalStats {
                mu,
                sigma_sq,
                alpha: 0.1,
            };
            let scaled = AgentSignalStats {
                mu: c * mu,
                sigma_sq: c * c * sigma_sq,
                alpha: 0.1,
            };
            let difference = (scaled.rsq(epsilon) - base.rsq(epsilon)).abs();
            worst = worst.max(difference);
            if difference >= 1e-6 {
                return CheckOutcome::fail(
                    NAME,
                    format!("difference {difference} at mu {mu}, sigma_sq {sigma_sq}, c {c}"),
                );
            }
        }
    }
    // Balanced boundary: mu = sigma maps to 1/2.
    for mu in [0.1, 1.0, 30.0] {
        let stats = AgentSignalStats {
            mu,
            sigma_sq: mu * mu,
            alpha: 0.1,
        };
        if (stats.rsq(epsilon) - 0.5).abs() >= 1e-6 {
            return CheckOutcome::fail(NAME, format!("balanced case off 1/2 at mu {mu}"));
        }
    }
    CheckOutcome::pass(NAME, format!("3e4 scaled pairs agree; worst difference {worst:.2e}"))
}

/// Truncated power-series successor measure,
/// `(1 - gamma) sum_t gamma^t P^t`, the oracle route against the LU solve.
pub fn measure_by_power_series(mdp: &TabularMdp, terms: usize) -> Vec<f64> {
    let n = mdp.n_states();
    let mut result = vec![0.0; n * n];
    for x in 0..n {
        let mut dist = vec![0.0; n];
        dist[x] = 1.0;
        let mut discount = 1.0;
        for _ in 0..=terms {
            for y in 0..n {
                result[x * n + y] += discount * dist[y];
            }
            let mut next = vec![0.0; n];
            for (s, &p_s) in dist.iter().enumerate() {
                if p_s > 0.0 {
                    for (y, mass) in next.iter_mut().enumerate() {
                        *mass += p_s * mdp.prob(s, y);
                    }
                }
            }
            dist = next;
            discount *= mdp.gamma();
        }
    }
    for v in &mut result {
        *v *= 1.0 - mdp.gamma();
    }
    result
}

/// Random row-stochastic chain; roughly half the candidate entries are
/// zeroed so sparse reachability structures appear too.
pub fn random_mdp(rng: &mut ChaCha20Rng, n: usize, gamma: f64, sparse: bool) -> TabularMdp {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut raw: Vec<f64> = (0..n)
                .map(|_| {
                    if sparse && rng.random::<f64>() < 0.5 {
                        0.0
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect();
            if raw.iter().all(|&v| v == 0.0) {
                raw[x] = 1.0; // keep the row stochastic
            }
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        })
        .collect();
    TabularMdp::new(rows, gamma).unwrap()
}

/// Quasimetric axioms on 50 random chains (up to 12 states): identity,
/// non-negativity, triangle inequality within 1e-9, and agreement of the
/// linear solve with the 1e4-term power series within 1e-8.
pub fn quasimetric_check() -> CheckOutcome {
    const NAME: &str = "sd-quasimetric";
    let mut rng = ChaCha20Rng::seed_from_u64(314_159);
    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_series_gap: f64 = 0.0;
    for instance in 0..50 {
        let n = rng.random_range(2..=12usize);
        let gamma = [0.9, 0.95, 0.99][instance % 3];
        let sparse = instance % 2 == 1;
        let mdp = random_mdp(&mut rng, n, gamma, sparse);
        let measure = successor_measure(&mdp);
        let report = check_quasimetric(&measure);
        worst_slack = worst_slack.max(report.worst_triangle_slack);
        if !report.passed {
            return CheckOutcome::fail(NAME, format!("instance {instance}: {report:?}"));
        }
        let series = measure_by_power_series(&mdp, 10_000);
        for x in 0..n {
            for y in 0..n {
                let gap = (measure.value(x, y) - series[x * n + y]).abs();
                worst_series_gap = worst_series_gap.max(gap);
                if gap > 1e-8 {
                    return CheckOutcome::fail(
                        NAME,
                        format!("instance {instance}: series disagreement {gap} at ({x}, {y})"),
                    );
                }
            }
        }
    }
    CheckOutcome::pass(
        NAME,
        format!(
            "50 chains pass all axioms; worst triangle slack {worst_slack:.2e}, worst series gap {worst_series_gap:.2e}"
        ),
    )
}

/// Warmup semantics: fresh statistics give RSQ below 1e-6 and the modulation
/// floor, and the reference corridor parameters make the effective warmup
/// intensity exactly 0.05.
pub fn warmup_check() -> CheckOutcome {
    const NAME: &str = "warmup-semantics";
    let params = RsqParams::default();
    let fresh = AgentSignalStats::new(params.alpha);
    let rsq = fresh.rsq(params.epsilon);
    if rsq >= 1e-6 {
        return CheckOutcome::fail(NAME, format!("fresh rsq {rsq} not below 1e-6"));
    }
    let h = modulation_weight(rsq, &params);
    if h != params.h_min {
        return CheckOutcome::fail(NAME, format!("fresh weight {h} != h_min {}", params.h_min));
    }
    let beta_max = 0.5; // reference corridor ceiling
    let effective = beta_max * params.h_min;
    if effective != 0.05 {
        return CheckOutcome::fail(NAME, format!("warmup intensity {effective} != 0.05"));
    }
    CheckOutcome::pass(NAME, "fresh agents start at rsq 0, h = h_min, intensity 0.05".into())
}

/// Transition bandwidth closed form at the reference sharpness.
pub fn bandwidth_check() -> CheckOutcome {
    const NAME: &str = "transition-bandwidth";
    let value = transition_bandwidth(0.01);
    if (588.8..=589.0).contains(&value) {
        CheckOutcome::pass(NAME, format!("bandwidth(0.01) = {value:.4}"))
    } else {
        CheckOutcome::fail(NAME, format!("bandwidth(0.01) = {value} outside [588.8, 589.0]"))
    }
}

/// Contraction product for the narrow-band reference configuration.
pub fn contraction_product_check() -> CheckOutcome {
    const NAME: &str = "contraction-product";
    let params = RcbParams {
        beta_min: 0.3,
        beta_max: 0.5,
        kappa: 0.01,
        r_target: 3.0,
        alpha_r: 0.03,
    };
    let report = check_contraction(&params, 0.1);
    let gap = (report.lipschitz_product - 5e-5).abs();
    if gap <= 1e-12 && report.satisfied {
        CheckOutcome::pass(NAME, format!("product {} within 1e-12 of 5e-5", report.lipschitz_product))
    } else {
        CheckOutcome::fail(NAME, format!("product {} off by {gap}", report.lipschitz_product))
    }
}

/// The sub-minute property checks behind the `check` subcommand.
pub fn fast_checks() -> Vec<CheckOutcome> {
    vec![
        ordering_preservation_check(),
        water_filling_check(),
        scale_invariance_check(),
        quasimetric_check(),
        warmup_check(),
        bandwidth_check(),
        contraction_product_check(),
    ]
}

/// The schedule convergence suite behind the `verify` subcommand.
pub fn verify_checks() -> Vec<CheckOutcome> {
    vec![contraction_convergence_check(), noise_floor_check()]
}
