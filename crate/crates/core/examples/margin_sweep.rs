//! Tighten the constraints of a random LP by a margin `t`, train a network
//! on the tightened solutions, and count how often its predictions are
//! feasible for the original problem.
//!
//! Run with: `cargo run --release --example margin_sweep`

use piecewise_policy::experiments::{margin_sweep, parse_t_grid, SweepConfig};
use piecewise_policy::neural::TrainConfig;
use piecewise_policy::problems::generate_random_lp;

fn main() -> piecewise_policy::Result<()> {
    let p = generate_random_lp(5, 5, 0)?;
    let cfg = SweepConfig {
        t_values: parse_t_grid("0:0.8:9")?,
        m: 400,
        test_m: 300,
        train: TrainConfig {
            epochs: 150,
            ..TrainConfig::default()
        },
        seed: 0,
    };
    let report = margin_sweep(&p, "lp:5:5:0", &cfg)?;
    for r in &report.rows {
        println!(
            "t = {:.2}: {:5.1}% feasible (train mse {:.2e})",
            r.t, r.ratio, r.train_mse
        );
    }
    report.save("out", "margin_sweep")?;
    Ok(())
}
