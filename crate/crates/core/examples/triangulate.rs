//! Delaunay triangulations in one, two and three parameter dimensions:
//! structural checks, point location and barycentric weights.
//!
//! Run with: `cargo run --example triangulate`

use piecewise_policy::data::grid;
use piecewise_policy::problems::ThetaBox;
use piecewise_policy::simplicial::{Locator, Triangulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> piecewise_policy::Result<()> {
    let line = Triangulation::build(&[vec![0.0], vec![0.7], vec![0.3]], 0)?;
    println!("k = 1: {:?}", line.simplices());

    // a regular grid is full of cocircular squares; the seeded jitter breaks the ties
    let square = Triangulation::build(&grid(&ThetaBox::cube(2, 0.0, 1.0), 5), 42)?;
    println!(
        "k = 2 grid: {} triangles, mesh norm {:.4}, {:?}",
        square.len(),
        square.mesh_norm(),
        square.verify()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cloud: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let cube = Triangulation::build(&cloud, 5)?;
    println!(
        "k = 3 cloud: {} tetrahedra, coverage failures {}",
        cube.len(),
        cube.coverage_failures(10_000, 1)
    );

    let mut locator = Locator::default();
    for theta in [[0.1, 0.1], [0.5, 0.5], [0.9, 0.35]] {
        let b = locator.locate(&square, &theta)?;
        println!(
            "θ = {theta:?} lies in simplex {} with λ = {:?}",
            b.simplex_index, b.lambdas
        );
    }
    match square.locate(&[1.5, 0.5]) {
        Err(e) => println!("θ = [1.5, 0.5]: {e}"),
        Ok(b) => println!("unexpected hit {b:?}"),
    }
    Ok(())
}
