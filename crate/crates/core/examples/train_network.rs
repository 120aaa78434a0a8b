//! Train a ReLU network on values of the interpolated Example 1 policy,
//! check backpropagation against finite differences, and compute the
//! norm-based generalization bound.
//!
//! Run with: `cargo run --release --example train_network`

use piecewise_policy::experiments::{nn_fit, policy_grid_samples, NnFitConfig};
use piecewise_policy::metrics::ge_bound;
use piecewise_policy::neural::{gradient_check, MlpModel, TrainConfig};
use piecewise_policy::policy::PiecewisePolicy;

fn main() -> piecewise_policy::Result<()> {
    let samples: Vec<(Vec<f64>, Vec<f64>)> = [
        (0.0, [0.0, 1.0]),
        (0.9, [0.0, 1.0]),
        (1.1, [1.0, 0.0]),
        (2.0, [1.0, 0.0]),
    ]
    .iter()
    .map(|(t, x)| (vec![*t], x.to_vec()))
    .collect();
    let policy = PiecewisePolicy::fit(&samples, 1, 0)?;
    let data = policy_grid_samples(&policy, 201);

    let small = MlpModel::he_init(&[1, 6, 2], 9)?;
    println!(
        "gradient check: {}",
        gradient_check(&small, &data[..10], 1e-5)
    );

    let cfg = NnFitConfig {
        train: TrainConfig {
            epochs: 2000,
            ..TrainConfig::default()
        },
        ..NnFitConfig::default()
    };
    let (model, report) = nn_fit(&data, Some(&policy), &cfg)?;
    println!(
        "train mse {:.3e}, holdout mse {:.3e}, max deviation from x̂ {:.3e}",
        report.train_mse,
        report.holdout_mse.unwrap(),
        report.max_grid_deviation.unwrap()
    );
    println!(
        "layer ∞-norms {:?}, first-layer spectral norm {:.4}",
        report.norms.inf_norms, report.norms.layer1_spectral
    );
    for m in [report.m_train, 4 * report.m_train] {
        println!(
            "bound with m = {m}: {:.4}",
            ge_bound(&report.norms.inf_norms, m)?
        );
    }
    println!(
        "x̂(1.0) = {:?}, network = {:?}",
        policy.evaluate(&[1.0])?,
        model.forward(&[1.0])?
    );
    Ok(())
}
