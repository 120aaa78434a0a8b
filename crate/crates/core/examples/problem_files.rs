//! Describe a parametric QP by hand, save it as JSON, and reload it.
//! The same file can be passed to the command-line tool via `--problem`.
//!
//! Run with: `cargo run --example problem_files`

use piecewise_policy::problems::{
    AffineRhs, ParametricProblem, ProblemData, QuadraticInequalityData, ThetaBox,
};
use piecewise_policy::solvers::{solve, SamplerPolicy};

fn main() -> piecewise_policy::Result<()> {
    // min ½‖x‖² − x₁ − x₂  s.t.  x₁ + x₂ ≤ θ,  x ≥ 0
    let data = QuadraticInequalityData {
        p: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        q: vec![-1.0, -1.0],
        g: vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
        rhs: AffineRhs {
            offset: vec![0.0, 0.0, 0.0],
            matrix: vec![vec![1.0], vec![0.0], vec![0.0]],
        },
        t: 0.0,
        bound: None,
        interior_point: None,
    };
    let p = ParametricProblem::new(
        ProblemData::QuadraticInequality(data),
        2,
        1,
        ThetaBox::new(vec![0.5], vec![3.0])?,
    )?;
    let path = std::env::temp_dir().join("budget_qp.json");
    p.save(&path)?;
    let back = ParametricProblem::load(&path)?;
    for theta in [0.5, 1.0, 2.0, 3.0] {
        let r = solve(&back, &[theta], &SamplerPolicy::default())?.into_optimal()?;
        println!("θ = {theta}: x* = ({:.4}, {:.4})", r.x[0], r.x[1]);
    }
    let tightened = back.with_margin(0.25)?;
    println!(
        "margin {} problem written to {}",
        tightened.margin(),
        path.display()
    );
    Ok(())
}
