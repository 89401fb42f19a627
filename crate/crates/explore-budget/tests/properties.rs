//! Property tests for the module invariants.

use proptest::prelude::*;

use explore_budget::rcb::{compute_beta, update_return_ema, RcbParams, RcbState};
use explore_budget::rsq::{
    modulation_weight, quality_gap, rsq_from_snr, water_filling, AllocationResult, RsqParams,
};
use explore_budget::sd::{check_quasimetric, sd_distance, successor_measure, TabularMdp};

fn arb_rcb_params() -> impl Strategy<Value = RcbParams> {
    (
        0.01f64..1.0,
        0.01f64..2.0,
        1e-3f64..10.0,
        -500.0f64..500.0,
        1e-3f64..0.999,
    )
        .prop_map(|(beta_min, width, kappa, r_target, alpha_r)| RcbParams {
            beta_min,
            beta_max: beta_min + width,
            kappa,
            r_target,
            alpha_r,
        })
}

fn arb_stochastic_rows(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(1e-6f64..1.0, n), n).prop_map(|rows| {
        rows.into_iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.into_iter().map(|v| v / total).collect()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn beta_stays_inside_bounds(params in arb_rcb_params(), r_ema in -1e12f64..1e12) {
        let state = RcbState { r_ema, beta: 0.0, iteration: 0 };
        let beta = compute_beta(&state, &params);
        prop_assert!(beta >= params.beta_min && beta <= params.beta_max);
    }

    #[test]
    fn beta_monotone_decreasing_in_return(
        params in arb_rcb_params(),
        a in -1e5f64..1e5,
        delta in 1e-3f64..1e5,
    ) {
        let low = compute_beta(&RcbState { r_ema: a, beta: 0.0, iteration: 0 }, &params);
        let high = compute_beta(&RcbState { r_ema: a + delta, beta: 0.0, iteration: 0 }, &params);
        prop_assert!(high <= low, "schedule increased with the return: {low} -> {high}");
    }

    #[test]
    fn ema_distance_to_fixed_point_contracts(
        params in arb_rcb_params(),
        start in -1e6f64..1e6,
        target in -1e6f64..1e6,
    ) {
        let state = RcbState { r_ema: start, beta: 0.0, iteration: 0 };
        let next = update_return_ema(&state, &params, target).unwrap();
        let before = (start - target).abs();
        let after = (next.r_ema - target).abs();
        prop_assert!(after <= (1.0 - params.alpha_r) * before + 1e-9 * before.max(1.0));
    }

    #[test]
    fn modulation_is_total_on_unit_interval(
        rsq in 0.0f64..=1.0,
        lambda in 0.0f64..50.0,
        rsq_ref in 0.0f64..=1.0,
    ) {
        let params = RsqParams { lambda, rsq_ref, ..RsqParams::default() };
        let h = modulation_weight(rsq, &params);
        prop_assert!(h >= params.h_min && h <= params.h_max);
    }

    #[test]
    fn water_filling_feasible_and_exclusion_consistent(
        snr in proptest::collection::vec(1e-3f64..1e3, 1..12),
        budget in 0.0f64..100.0,
    ) {
        let result = water_filling(&snr, budget).unwrap();
        let AllocationResult::WaterFilling { powers, water_level, .. } = result else {
            panic!("wrong variant");
        };
        let total: f64 = powers.iter().sum();
        prop_assert!((total - budget).abs() <= 1e-9, "budget violated: {total} vs {budget}");
        for (i, &p) in powers.iter().enumerate() {
            prop_assert!(p >= 0.0);
            if budget > 0.0 {
                prop_assert_eq!(p == 0.0, 1.0 / snr[i] >= water_level);
            }
        }
    }

    #[test]
    fn affine_weights_follow_snr_order(
        snr in proptest::collection::vec(1e-3f64..1e3, 2..10),
    ) {
        let params = RsqParams::default();
        let weights: Vec<f64> = snr.iter().map(|&s| modulation_weight(rsq_from_snr(s), &params)).collect();
        for i in 0..snr.len() {
            for j in 0..snr.len() {
                if snr[i] > snr[j] {
                    prop_assert!(weights[i] >= weights[j]);
                }
            }
        }
    }

    #[test]
    fn quality_gap_is_max_minus_min(
        rsq in proptest::collection::vec(0.0f64..=1.0, 2..12),
    ) {
        let gap = quality_gap(&rsq).unwrap();
        let mut expected: f64 = 0.0;
        for i in 0..rsq.len() {
            for j in 0..rsq.len() {
                expected = expected.max((rsq[i] - rsq[j]).abs());
            }
        }
        prop_assert!((gap - expected).abs() < 1e-15);
    }

    #[test]
    fn successor_measures_are_probability_measures(
        rows in (2usize..8).prop_flat_map(arb_stochastic_rows),
        gamma in 0.5f64..0.995,
    ) {
        let n = rows.len();
        let mdp = TabularMdp::new(rows, gamma).unwrap();
        let measure = successor_measure(&mdp);
        for x in 0..n {
            let sum: f64 = measure.row(x).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "row {x} sums to {sum}");
            prop_assert!(measure.value(x, x) >= 1.0 - gamma - 1e-12);
            for y in 0..n {
                let d = sd_distance(&measure, x, y).finite().unwrap();
                prop_assert!(d >= -1e-12, "negative distance {d} at ({x}, {y})");
            }
        }
    }

    #[test]
    fn quasimetric_holds_on_dense_random_chains(
        rows in (2usize..7).prop_flat_map(arb_stochastic_rows),
        gamma in 0.5f64..0.99,
    ) {
        let mdp = TabularMdp::new(rows, gamma).unwrap();
        let report = check_quasimetric(&successor_measure(&mdp));
        prop_assert!(report.passed, "{report:?}");
    }
}
