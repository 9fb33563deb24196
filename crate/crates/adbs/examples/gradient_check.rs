//! Central finite-difference validation of the analytic gradients of both
//! losses (classification and inter-class constraint).
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use adbs::verify::{check_constraint_gradients, check_cross_entropy_gradients, GradCheckConfig};

fn main() -> adbs::Result<()> {
    let cfg = GradCheckConfig {
        cases: 50,
        seed: 1,
        ..GradCheckConfig::default()
    };

    let ce = check_cross_entropy_gradients(&cfg)?;
    println!(
        "classification loss: {} cases, {} parameters, max rel err {:.2e}, max abs err {:.2e} -> {}",
        ce.cases,
        ce.parameters_checked,
        ce.max_rel_error,
        ce.max_abs_error,
        if ce.passed() { "ok" } else { "FAILED" }
    );

    let ic = check_constraint_gradients(&cfg)?;
    println!(
        "constraint loss:     {} cases, {} parameters, max rel err {:.2e}, max abs err {:.2e} -> {}",
        ic.cases,
        ic.parameters_checked,
        ic.max_rel_error,
        ic.max_abs_error,
        if ic.passed() { "ok" } else { "FAILED" }
    );
    Ok(())
}
