//! The probability guarantee behind the inter-class constraint, checked
//! numerically: wherever the pairwise constraint holds, boundary scaling
//! never lowers a class's probability at its own prototype — and a
//! constructed violating configuration shows the constraint has teeth.
//!
//! ```bash
//! cargo run --example verify_constraint
//! ```

use adbs::boundary::{compare_probabilities, verify_constraint};
use adbs::verify::{constraint_sweep, violating_instance, SweepConfig};

fn main() -> adbs::Result<()> {
    let outcome = constraint_sweep(
        &SweepConfig {
            instances: 1000,
            margin: 1e-12,
            seed: 42,
        },
        &[],
    )?;
    println!(
        "sweep: {} instances checked, {} failures, smallest p_adaptive - p_fixed = {:.3e}",
        outcome.checked, outcome.failures, outcome.min_margin
    );

    let (bad, target) = violating_instance();
    let report = verify_constraint(&bad.boundaries, &bad.weights, &bad.weights, 0.0)?;
    let (i, j) = report.worst_pair().unwrap();
    println!(
        "violating instance: term[{i}][{j}] = {:.3} > 0, constraint unsatisfied",
        report.terms()[i][j]
    );
    let pair = compare_probabilities(
        &bad.boundaries,
        &bad.weights,
        &bad.weights[target].clone(),
        target,
        bad.temperature,
    )?;
    println!(
        "  and indeed the inequality flips: p_adaptive {:.6} < p_fixed {:.6}",
        pair.adaptive, pair.fixed
    );
    Ok(())
}
