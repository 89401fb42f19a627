//! The schedule convergence laboratory: fixed points, empirical contraction
//! rates, and the stochastic noise floor against a synthetic return
//! response.
//!
//! ```bash
//! cargo run --example convergence_lab
//! ```

use explore_budget::convergence::{
    find_fixed_point, measure_contraction_rate, measure_noise_floor, simulate_schedule,
    NoiseDistribution, NoiseModel, ResponseFunction,
};
use explore_budget::rcb::{check_contraction, RcbParams};

fn main() {
    let params = RcbParams {
        beta_min: 0.1,
        beta_max: 0.5,
        kappa: 0.01,
        r_target: 400.0,
        alpha_r: 0.03,
    };
    let response = ResponseFunction::Linear {
        intercept: 100.0,
        slope: 500.0,
    };

    let contraction = check_contraction(&params, response.slope_bound());
    println!(
        "contraction: product {:.3}  satisfied {}  implied rate rho {:.4}",
        contraction.lipschitz_product, contraction.satisfied, contraction.rho
    );

    let fp = find_fixed_point(&response, &params);
    println!(
        "fixed point: beta* {:.6}  R* {:.4}  unique {}  (roots found: {})",
        fp.beta_star,
        fp.r_star,
        fp.unique,
        fp.roots.len()
    );

    let noiseless = simulate_schedule(&response, &params, None, 3000, 0);
    println!("\nnoiseless tracking error |r_ema - R*|:");
    for k in [0usize, 50, 100, 200, 400, 800] {
        println!("  iteration {k:>4}: {:.3e}", (noiseless.r_ema[k] - fp.r_star).abs());
    }
    if let Some(rate) = measure_contraction_rate(&noiseless, fp.r_star) {
        println!("fitted empirical rate {rate:.5} (theory allows up to {:.5})", contraction.rho);
    }

    println!("\nnoise floor (20 seeds x 20k iterations):");
    for sigma in [1.0, 5.0, 10.0] {
        let noise = NoiseModel {
            sigma,
            distribution: NoiseDistribution::Gaussian,
        };
        let report = measure_noise_floor(&response, &params, &noise, 20_000, 20, 1);
        println!(
            "  sigma {sigma:>5.1}: measured MSE {:>9.4}  bound alpha*sigma^2/(1-L) = {:>8.4}",
            report.measured_mse, report.bound
        );
    }
}
