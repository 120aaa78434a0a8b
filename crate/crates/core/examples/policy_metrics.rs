//! Measure a fitted policy: per-parameter distance to the feasible set and
//! optimality gap, aggregate statistics, and the CSV report.
//!
//! Run with: `cargo run --example policy_metrics`

use piecewise_policy::data::{collect_samples, draw_thetas, ThetaDistribution};
use piecewise_policy::metrics::{evaluate_policy, feasibility_ratio, infeasibility, suboptimality};
use piecewise_policy::policy::{Extrapolation, PiecewisePolicy};
use piecewise_policy::problems::example1;
use piecewise_policy::solvers::SamplerPolicy;

fn main() -> piecewise_policy::Result<()> {
    let p = example1();
    println!(
        "infeasibility of (1, 1): {}",
        infeasibility(&p, &[0.5], &[1.0, 1.0])?
    );
    println!(
        "suboptimality of (0, 1) at θ = 1.5: {}",
        suboptimality(&p, &[1.5], &[0.0, 1.0])?
    );

    let thetas = draw_thetas(&p.theta_domain, ThetaDistribution::Uniform, 30, 1);
    let samples = collect_samples(&p, &thetas, &SamplerPolicy::default(), 0.0, 1);
    let policy = PiecewisePolicy::fit(&samples.pairs(), 1, 1)?;

    // uniform test draws can fall outside the sampled hull; clip them onto it
    let test = draw_thetas(&p.theta_domain, ThetaDistribution::Uniform, 500, 2);
    let report = evaluate_policy(&p, &policy.extrapolating(Extrapolation::Clip), &test);
    println!(
        "mesh norm {:.4}: max subopt {:.4e}, mean {:.4e}, q90 {:.4e}; max infeas {:e}",
        report.mesh_norm.unwrap(),
        report.subopt.max,
        report.subopt.mean,
        report.subopt.q90,
        report.infeas.max
    );
    println!(
        "feasible: {}%",
        feasibility_ratio(&p, &policy.extrapolating(Extrapolation::Clip), &test)
    );

    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    print!(
        "{}",
        String::from_utf8_lossy(&csv)
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!();
    Ok(())
}
