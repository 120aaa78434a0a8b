//! On a finite feasible set with tied optima, arbitrary tie-breaking makes
//! the interpolated policy land between the two optima, while a fixed rule
//! keeps it optimal.
//!
//! Run with: `cargo run --release --example sampler_stability`

use piecewise_policy::experiments::{example2_counter, stable_sampler};

fn main() -> piecewise_policy::Result<()> {
    let counter = example2_counter(0, &[9, 33, 129])?;
    for r in &counter.rows {
        println!(
            "m = {:<4} samples at {:.4} and {:.4} disagree; midpoint gap {}; {} max gap {:e}",
            r.m,
            r.theta_left,
            r.theta_right,
            r.midpoint_gap,
            counter.fixed_rule,
            r.fixed_rule_max_gap
        );
    }

    let stable = stable_sampler(&[2, 4, 6], 0)?;
    for r in &stable.rows {
        println!(
            "{} {:<27} level {}: max gap {:.3e}, away from θ = 0 {:.3e}, {} bad simplices",
            r.problem, r.sampler, r.level, r.max_subopt, r.max_subopt_away, r.bad_simplices
        );
    }
    Ok(())
}
