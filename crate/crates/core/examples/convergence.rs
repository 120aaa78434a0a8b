//! Refine the sampling grid of a seeded random QP and watch the worst-case
//! infeasibility and suboptimality of the interpolated policy shrink.
//! Writes `converge.csv`, `converge.json` and `converge.svg` to `out/`.
//!
//! Run with: `cargo run --release --example convergence`

use piecewise_policy::experiments::{converge, ConvergeConfig};
use piecewise_policy::problems::generate_random_qp;

fn main() -> piecewise_policy::Result<()> {
    let p = generate_random_qp(2, 2, 0)?;
    let report = converge(&p, "qp:2:2:0", &ConvergeConfig::default())?;
    println!("level  m     mesh norm  max infeas  max subopt");
    for r in &report.rows {
        println!(
            "{:<6} {:<5} {:<10.4} {:<11.3e} {:.3e}",
            r.level, r.m, r.mesh_norm, r.max_infeas, r.max_subopt
        );
    }
    println!("nonincreasing: {}", report.nonincreasing(1e-8));
    report.save("out", "converge")?;
    Ok(())
}
