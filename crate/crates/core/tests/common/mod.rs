//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver or triangulation internals it is used to check.

#![allow(dead_code)]

use piecewise_policy::problems::{ParametricProblem, ProblemData};
use piecewise_policy::simplicial::Triangulation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks `x` and `y` against the KKT system of `min cᵀx s.t. A x ≤ b`:
/// primal feasibility, `y ≥ 0`, `c + Aᵀy = 0`, complementary slackness and a
/// zero duality gap.
pub fn lp_kkt(c: &[f64], a: &[Vec<f64>], b: &[f64], x: &[f64], y: &[f64]) -> Result<(), String> {
    let scale = 1.0 + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let slack = bi - dot(row, x);
        if slack < -1e-8 {
            return Err(format!("row {i} violated by {}", -slack));
        }
        if y[i] < -1e-9 {
            return Err(format!("dual {i} negative: {}", y[i]));
        }
        if y[i] * slack.abs() > 1e-7 * scale * (1.0 + bi.abs()) {
            return Err(format!(
                "complementary slackness fails at row {i}: y = {}, slack = {slack}",
                y[i]
            ));
        }
    }
    for j in 0..c.len() {
        let s: f64 = c[j] + a.iter().zip(y).map(|(row, yi)| row[j] * yi).sum::<f64>();
        if s.abs() > 1e-7 * scale {
            return Err(format!("stationarity fails in coordinate {j}: {s}"));
        }
    }
    let primal = dot(c, x);
    let dual = -dot(b, y);
    if (primal - dual).abs() > 1e-6 * (1.0 + primal.abs()) {
        return Err(format!("duality gap {primal} vs {dual}"));
    }
    Ok(())
}

/// Minimum of a two-variable QP found by nested grid search: a grid of
/// spacing `step` over `[-half, half]²`, then repeated refinement around the
/// best point until the spacing is below `1e-4`.
pub fn qp_grid_oracle(
    p: &ParametricProblem,
    theta: &[f64],
    half: f64,
    step: f64,
) -> Option<(f64, [f64; 2])> {
    let ProblemData::QuadraticInequality(d) = &p.data else {
        return None;
    };
    let poly = p.polyhedron(theta)?;
    let f = |x: [f64; 2]| {
        0.5 * (d.p[0][0] * x[0] * x[0] + 2.0 * d.p[0][1] * x[0] * x[1] + d.p[1][1] * x[1] * x[1])
            + d.q[0] * x[0]
            + d.q[1] * x[1]
    };
    let feasible = |x: [f64; 2]| {
        poly.rows
            .iter()
            .zip(&poly.rhs)
            .all(|(r, b)| r[0] * x[0] + r[1] * x[1] <= *b)
    };
    let search = |center: [f64; 2], half: f64, step: f64| {
        let steps = (2.0 * half / step).round() as i64;
        let mut best: Option<(f64, [f64; 2])> = None;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = [
                    center[0] - half + i as f64 * step,
                    center[1] - half + j as f64 * step,
                ];
                if feasible(x) {
                    let v = f(x);
                    if best.is_none_or(|(b, _)| v < b) {
                        best = Some((v, x));
                    }
                }
            }
        }
        best
    };
    let mut step = step;
    let mut best = search([0.0, 0.0], half, step)?;
    while step > 1e-4 {
        let next = step / 5.0;
        if let Some(b) = search(best.1, 10.0 * step, next) {
            if b.0 < best.0 {
                best = b;
            }
        }
        step = next;
    }
    Some(best)
}

/// Area of the convex hull of planar points (monotone chain).
pub fn hull_area(points: &[Vec<f64>]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        .abs()
}

/// Determinant of the edge vectors `v_i − v_0` (k ≤ 3).
pub fn edge_det(v: &[&Vec<f64>]) -> f64 {
    let k = v.len() - 1;
    let e: Vec<Vec<f64>> = (1..=k)
        .map(|i| (0..k).map(|d| v[i][d] - v[0][d]).collect())
        .collect();
    match k {
        1 => e[0][0],
        2 => e[0][0] * e[1][1] - e[0][1] * e[1][0],
        3 => {
            e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
                - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
        }
        _ => unreachable!(),
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

pub fn total_volume(tri: &Triangulation) -> f64 {
    let v = tri.vertices();
    tri.simplices()
        .iter()
        .map(|s| edge_det(&s.iter().map(|&i| &v[i]).collect::<Vec<_>>()).abs() / factorial(tri.k()))
        .sum()
}

/// Cardinality and facet-to-facet checks computed from the simplex list
/// alone: each simplex has `k + 1` distinct vertices and positive volume,
/// every facet is shared by at most two simplices, and every unshared facet
/// supports the whole point set.
pub fn structure_check(tri: &Triangulation) -> Result<(), String> {
    let k = tri.k();
    let v = tri.vertices();
    let scale = v
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let mut facets: HashMap<Vec<usize>, usize> = HashMap::new();
    for (j, s) in tri.simplices().iter().enumerate() {
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k + 1 {
            return Err(format!(
                "simplex {j} has {} distinct vertices",
                sorted.len()
            ));
        }
        if edge_det(&s.iter().map(|&i| &v[i]).collect::<Vec<_>>()).abs()
            <= 1e-14 * scale.powi(k as i32)
        {
            return Err(format!("simplex {j} is flat"));
        }
        for drop in 0..=k {
            let f: Vec<usize> = sorted
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, &x)| x)
                .collect();
            *facets.entry(f).or_default() += 1;
        }
    }
    for (f, count) in &facets {
        if *count > 2 {
            return Err(format!("facet {f:?} shared by {count} simplices"));
        }
        if *count == 1 {
            // supporting hyperplane test: all points on one side of the facet
            let sides: Vec<f64> = v
                .iter()
                .map(|p| {
                    let mut pts: Vec<&Vec<f64>> = f.iter().map(|&i| &v[i]).collect();
                    pts.push(p);
                    edge_det(&pts)
                })
                .collect();
            let tol = 1e-9 * scale.powi(k as i32);
            let pos = sides.iter().any(|&s| s > tol);
            let neg = sides.iter().any(|&s| s < -tol);
            if pos && neg {
                return Err(format!("unshared facet {f:?} is interior to the hull"));
            }
        }
    }
    Ok(())
}

/// Locates `samples` random convex combinations of `k + 1` input points and
/// checks that the barycentric coordinates reproduce each point. Returns
/// the number of failures.
pub fn coverage_oracle(tri: &Triangulation, samples: usize, seed: u64) -> usize {
    let v = tri.vertices();
    let k = tri.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..samples {
        let picks: Vec<usize> = (0..=k).map(|_| rng.random_range(0..v.len())).collect();
        let mut w: Vec<f64> = (0..=k)
            .map(|_| -rng.random::<f64>().max(1e-300).ln())
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let theta: Vec<f64> = (0..k)
            .map(|d| picks.iter().zip(&w).map(|(&i, wi)| wi * v[i][d]).sum())
            .collect();
        match tri.locate(&theta) {
            Ok(b) => {
                let s = &tri.simplices()[b.simplex_index];
                let back: Vec<f64> = (0..k)
                    .map(|d| s.iter().zip(&b.lambdas).map(|(&i, l)| l * v[i][d]).sum())
                    .collect();
                let lambdas_ok = b.lambdas.iter().all(|&l| l >= -1e-9)
                    && (b.lambdas.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
                if !lambdas_ok || back.iter().zip(&theta).any(|(a, b)| (a - b).abs() > 1e-9) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    failures
}

/// Seeded point cloud: uniform in `[-1, 1]^k`, with some grid-aligned and
/// repeated-coordinate points mixed in to exercise degeneracies.
pub fn point_cloud(k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = match k {
        1 => rng.random_range(5..40),
        2 => rng.random_range(10..80),
        _ => rng.random_range(10..50),
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let p: Vec<f64> = (0..k)
            .map(|_| {
                if i % 4 == 0 {
                    rng.random_range(-2..=2) as f64 * 0.5
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}
