//! Return-conditioned scheduling: the intensity curve, its transition
//! bandwidth, and the contraction diagnostic.
//!
//! ```bash
//! cargo run --example rcb_schedule
//! ```

use explore_budget::rcb::{
    check_contraction, compute_beta, transition_bandwidth, update_return_ema, RcbParams, RcbState,
};

fn main() {
    let params = RcbParams::default();
    println!("schedule parameters: {params:#?}\n");

    // The intensity curve over a grid of smoothed returns.
    println!("{:>10} {:>8}", "r_ema", "beta");
    for i in 0..=10 {
        let r_ema = params.r_target - 6.0 + 12.0 * i as f64 / 10.0;
        let beta = compute_beta(
            &RcbState {
                r_ema,
                beta: 0.0,
                iteration: 0,
            },
            &params,
        );
        println!("{r_ema:>10.2} {beta:>8.4}");
    }

    let bandwidth = transition_bandwidth(params.kappa);
    println!("\n5%-95% transition bandwidth: {bandwidth:.3} return units (kappa = {})", params.kappa);

    // Track a noisy improving return sequence.
    let mut state = RcbState::new(&params);
    println!("\ntracking a rising return sequence:");
    for k in 0..8 {
        let observed = -4.0 + k as f64; // improving task performance
        state = update_return_ema(&state, &params, observed).unwrap();
        state.beta = compute_beta(&state, &params);
        println!(
            "iteration {k}: observed {observed:>6.2}  r_ema {:>7.4}  beta {:.4}",
            state.r_ema, state.beta
        );
    }

    // Contraction diagnostic for a few response-slope bounds.
    println!("\ncontraction condition (per return-response slope bound):");
    for slope in [0.1, 10.0, 100.0, 1000.0] {
        let report = check_contraction(&params, slope);
        println!(
            "slope {slope:>7.1}: product {:>10.3e}  satisfied {}  rho {:.4}",
            report.lipschitz_product, report.satisfied, report.rho
        );
    }
}
