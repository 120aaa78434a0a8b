//! Exact solves for each problem family, tie-breaking samplers,
//! γ-relaxed extraction and Euclidean projection onto the feasible set.
//!
//! Run with: `cargo run --example solve_problems`

use piecewise_policy::problems::{example1, example2, generate_random_lp, generate_random_qp};
use piecewise_policy::solvers::{project_to_feasible, solve, solve_gamma_relaxed, SamplerPolicy};

fn main() -> piecewise_policy::Result<()> {
    let ex1 = example1();
    // at θ = 1 the whole edge x₁ + x₂ = 1 is optimal; the sampler picks a vertex
    for sampler in [
        "arbitrary",
        "rule:always-lowest-point",
        "rule:always-highest-point",
    ] {
        let s = SamplerPolicy::parse(sampler, 7)?;
        let r = solve(&ex1, &[1.0], &s)?.into_optimal()?;
        println!("{sampler:<28} x* = {:?}, f* = {}", r.x, r.objective);
    }

    let ex2 = example2();
    let r = solve(&ex2, &[0.0], &SamplerPolicy::arbitrary(3))?;
    println!("finite set {{1, 3}}: x* = {:?}", r.x);

    let lp = generate_random_lp(4, 6, 11)?;
    let qp = generate_random_qp(3, 3, 11)?;
    let theta = vec![0.2; 6];
    let r = solve(&lp, &theta, &SamplerPolicy::default())?.into_optimal()?;
    println!(
        "random LP: f* = {:.6}, residual {:e}",
        r.objective,
        lp.feasibility_residual(&r.x, &theta)?
    );
    let r = solve(&qp, &[0.1, -0.3, 0.5], &SamplerPolicy::default())?.into_optimal()?;
    println!("random QP: x* = {:?}", r.x);

    for gamma in [0.0, 0.05, 0.1] {
        let r = solve_gamma_relaxed(&ex1, &[0.5], gamma, 1)?;
        println!("γ = {gamma}: x = {:?}, gap {:.4}", r.x, r.gamma_gap);
    }

    let (y, dist) = project_to_feasible(&ex1, &[0.5], &[1.0, 1.0])?;
    println!("projection of (1, 1): {y:?} at distance {dist:.6}");
    Ok(())
}
