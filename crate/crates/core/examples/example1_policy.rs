//! Fit the piecewise linear policy of the two-variable LP
//! `min −θx₁ − x₂  s.t. x₁ + x₂ ≤ 1, x ≥ 0` and compare it with its closed form.
//!
//! Run with: `cargo run --example example1_policy`

use piecewise_policy::data::collect_samples;
use piecewise_policy::policy::{closed_form_example1, PiecewisePolicy};
use piecewise_policy::problems::example1;
use piecewise_policy::solvers::SamplerPolicy;

fn main() -> piecewise_policy::Result<()> {
    let p = example1();
    let thetas: Vec<Vec<f64>> = [0.0, 0.9, 1.1, 2.0].iter().map(|&t| vec![t]).collect();
    let samples = collect_samples(&p, &thetas, &SamplerPolicy::default(), 0.0, 0);
    let policy = PiecewisePolicy::fit(&samples.pairs(), 1, 0)?.with_problem_ref("example1");

    println!(
        "{} segments, mesh norm {}",
        policy.triangulation.len(),
        policy.triangulation.mesh_norm()
    );
    for theta in [0.5, 0.95, 1.0, 1.05, 1.5] {
        let x = policy.evaluate(&[theta])?;
        let c = closed_form_example1(theta, 0.9, 1.1)?;
        println!(
            "θ = {theta:<4}  x̂ = ({:.3}, {:.3})  closed form = ({:.3}, {:.3})",
            x[0], x[1], c[0], c[1]
        );
    }
    println!("{}", policy.to_json()?);
    Ok(())
}
