//! Exact tabular successor distances on a small chain: the discounted
//! measure, the asymmetric distance matrix, the quasimetric report, and the
//! min-over-history intrinsic reward stream.
//!
//! ```bash
//! cargo run --example successor_distance
//! ```

use explore_budget::sd::{
    check_quasimetric, default_unreachable_cap, intrinsic_reward, sd_distance, successor_measure,
    SdHistory, TabularMdp,
};

fn main() {
    // A 5-state chain with a drift to the right and a weak return current.
    let rows = vec![
        vec![0.5, 0.5, 0.0, 0.0, 0.0],
        vec![0.2, 0.3, 0.5, 0.0, 0.0],
        vec![0.0, 0.2, 0.3, 0.5, 0.0],
        vec![0.0, 0.0, 0.2, 0.3, 0.5],
        vec![0.0, 0.0, 0.0, 0.2, 0.8],
    ];
    let mdp = TabularMdp::new(rows, 0.95).unwrap();
    let measure = successor_measure(&mdp);

    println!("transition matrix:");
    let mut buffer = Vec::new();
    mdp.write_matrix(&mut buffer).unwrap();
    print!("{}", String::from_utf8(buffer).unwrap());

    println!("\ndiscounted successor measure (rows sum to 1):");
    let mut buffer = Vec::new();
    measure.write_matrix(&mut buffer).unwrap();
    print!("{}", String::from_utf8(buffer).unwrap());

    println!("\ndistance matrix d(x, y) = ln(m[y][y] / m[x][y]):");
    for x in 0..5 {
        let row: Vec<String> = (0..5)
            .map(|y| format!("{:7.4}", sd_distance(&measure, x, y).value_or_infinity()))
            .collect();
        println!("  {}", row.join(" "));
    }
    println!("(note the asymmetry: drifting right is cheap, returning left is far)");

    let report = check_quasimetric(&measure);
    println!(
        "\nquasimetric check: passed {}  triples {}  worst triangle slack {:.2e}  asymmetric {}",
        report.passed, report.triples_checked, report.worst_triangle_slack, report.asymmetry_observed
    );

    // Intrinsic rewards along a walk: novel states pay, revisits do not.
    let cap = default_unreachable_cap(mdp.gamma(), mdp.n_states());
    let mut history = SdHistory::new();
    println!("\nintrinsic rewards along the walk 0 -> 1 -> 2 -> 1 -> 4:");
    for state in [0usize, 1, 2, 1, 4] {
        let reward = intrinsic_reward(&mut history, &measure, state, cap);
        println!("  visit state {state}: intrinsic reward {reward:.4}");
    }
}
