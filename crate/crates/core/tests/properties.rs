mod common;

use std::collections::HashMap;

use piecewise_policy::data::{collect_samples, draw_thetas, ThetaDistribution};
use piecewise_policy::experiments::{converge, policy_grid_samples, ConvergeConfig};
use piecewise_policy::metrics::{ge_bound, infeasibility, suboptimality};
use piecewise_policy::neural::{train, MlpModel, Optimizer, TrainConfig};
use piecewise_policy::policy::PiecewisePolicy;
use piecewise_policy::problems::{
    example1, example2, example3, generate_random_lp, generate_random_qp,
};
use piecewise_policy::simplicial::Triangulation;
use piecewise_policy::solvers::{
    optimal_value, project_to_feasible, solve, solve_gamma_relaxed, SamplerPolicy, FEASIBILITY_TOL,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn theta_in_cube(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_lps_solve_to_feasible_points(seed in 0u64..500, theta in theta_in_cube(4)) {
        let p = generate_random_lp(3, 4, seed).unwrap();
        let r = solve(&p, &theta, &SamplerPolicy::arbitrary(seed)).unwrap().into_optimal().unwrap();
        prop_assert!(p.feasibility_residual(&r.x, &theta).unwrap() <= 1e-8);
    }

    #[test]
    fn generated_qps_solve_to_feasible_points(seed in 0u64..500, theta in theta_in_cube(3)) {
        let p = generate_random_qp(3, 3, seed).unwrap();
        let r = solve(&p, &theta, &SamplerPolicy::default()).unwrap().into_optimal().unwrap();
        prop_assert!(p.feasibility_residual(&r.x, &theta).unwrap() <= 1e-8);
    }

    #[test]
    fn example3_at_zero_matches_example2(x in -5.0..5.0f64, theta in -1.0..1.0f64) {
        let a = example3().evaluate_objective(&[x], &[0.0]).unwrap();
        let b = example2().evaluate_objective(&[x], &[theta]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tighter_margin_points_stay_feasible(
        seed in 0u64..200,
        theta in theta_in_cube(3),
        t1 in 0.0..0.3f64,
        extra in 0.0..0.3f64,
    ) {
        let p = generate_random_lp(2, 3, seed).unwrap();
        let tight = p.with_margin(t1 + extra).unwrap();
        let r = solve(&tight, &theta, &SamplerPolicy::default()).unwrap().into_optimal().unwrap();
        let loose = p.with_margin(t1).unwrap();
        prop_assert!(loose.feasibility_residual(&r.x, &theta).unwrap() <= 1e-8);
    }

    #[test]
    fn gamma_relaxed_gap_stays_within_gamma(theta in 0.0..2.0f64, gamma in 0.0..0.5f64, seed in 0u64..100) {
        let p = example1();
        let r = solve_gamma_relaxed(&p, &[theta], gamma, seed).unwrap();
        let f_star = optimal_value(&p, &[theta]).unwrap();
        prop_assert!(r.gamma_gap <= gamma + 1e-9);
        prop_assert!((p.evaluate_objective(&r.x, &[theta]).unwrap() - f_star - r.gamma_gap).abs() <= 1e-9);
        prop_assert!(p.feasibility_residual(&r.x, &[theta]).unwrap() <= 1e-8);
    }

    #[test]
    fn projection_is_idempotent(seed in 0u64..200, theta in theta_in_cube(3), x in prop::collection::vec(-4.0..4.0f64, 2)) {
        let p = generate_random_qp(2, 3, seed).unwrap();
        let (y, d) = project_to_feasible(&p, &theta, &x).unwrap();
        let (z, d2) = project_to_feasible(&p, &theta, &y).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(d2 <= 1e-8);
        prop_assert!(common::dot(&y, &y).sqrt().is_finite());
        prop_assert!(y.iter().zip(&z).all(|(a, b)| (a - b).abs() <= 1e-8));
    }

    #[test]
    fn infeasibility_agrees_with_residual(seed in 0u64..200, theta in theta_in_cube(3), x in prop::collection::vec(-3.0..3.0f64, 2)) {
        let p = generate_random_lp(2, 3, seed).unwrap();
        let residual = p.feasibility_residual(&x, &theta).unwrap();
        let dist = infeasibility(&p, &theta, &x).unwrap();
        prop_assert_eq!(dist == 0.0, residual <= FEASIBILITY_TOL);
        prop_assert!(dist >= 0.0);
    }

    #[test]
    fn suboptimality_of_feasible_points(theta in 0.0..2.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let p = example1();
        // any point of the simplex {x ≥ 0, x₁ + x₂ ≤ 1}
        let s = (a + b).max(1.0);
        let x = [a / s, b / s];
        prop_assert!(suboptimality(&p, &[theta], &x).unwrap() >= 0.0);
        let opt = solve(&p, &[theta], &SamplerPolicy::default()).unwrap().into_optimal().unwrap();
        prop_assert!(suboptimality(&p, &[theta], &opt.x).unwrap() <= 1e-8);
    }

    #[test]
    fn barycentric_reconstruction(cloud_seed in 0u64..1000, k in 1usize..=3, pick_seed in 0u64..1000) {
        let points = common::point_cloud(k, cloud_seed);
        let tri = Triangulation::build(&points, cloud_seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(pick_seed);
        let j = rng.random_range(0..tri.len());
        let mut w: Vec<f64> = (0..=k).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let s = &tri.simplices()[j];
        let v = tri.vertices();
        let theta: Vec<f64> = (0..k).map(|d| s.iter().zip(&w).map(|(&i, l)| l * v[i][d]).sum()).collect();
        let b = tri.locate(&theta).unwrap();
        let s2 = &tri.simplices()[b.simplex_index];
        for d in 0..k {
            let back: f64 = s2.iter().zip(&b.lambdas).map(|(&i, l)| l * v[i][d]).sum();
            prop_assert!((back - theta[d]).abs() <= 1e-9);
        }
    }

    #[test]
    fn ge_bound_is_positive_and_nonincreasing(
        norms in prop::collection::vec(0.01..20.0f64, 1..5),
        m in 1usize..10_000,
        extra in 0usize..10_000,
    ) {
        let a = ge_bound(&norms, m).unwrap();
        let b = ge_bound(&norms, m + extra).unwrap();
        prop_assert!(a > 0.0 && b > 0.0 && b <= a);
    }
}

#[test]
fn triangulation_is_bit_stable() {
    for k in 1..=3 {
        let points = common::point_cloud(k, 77);
        let a = Triangulation::build(&points, 5).unwrap().to_json().unwrap();
        let b = Triangulation::build(&points, 5).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn delaunay_empty_circumcircle_on_jittered_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for cloud in 0..5u64 {
        let points = common::point_cloud(2, 500 + cloud);
        let tri = Triangulation::build(&points, cloud).unwrap();
        let v = tri.combinatorial_vertices();
        for _ in 0..20 {
            let s = &tri.simplices()[rng.random_range(0..tri.len())];
            let (a, b, c) = (&v[s[0]], &v[s[1]], &v[s[2]]);
            let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
            let sq = |p: &Vec<f64>| p[0] * p[0] + p[1] * p[1];
            let ux = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
            let uy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
            let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
            for (i, p) in v.iter().enumerate() {
                if s.contains(&i) {
                    continue;
                }
                let d2 = (p[0] - ux).powi(2) + (p[1] - uy).powi(2);
                assert!(
                    d2 >= r2 * (1.0 - 1e-7),
                    "point {i} inside circumcircle of {s:?}"
                );
            }
        }
    }
}

type Pairs = Vec<(Vec<f64>, Vec<f64>)>;

fn example1_policy() -> (PiecewisePolicy, Pairs) {
    let p = example1();
    let thetas = draw_thetas(&p.theta_domain, ThetaDistribution::Uniform, 40, 3);
    let set = collect_samples(&p, &thetas, &SamplerPolicy::arbitrary(3), 0.0, 3);
    (
        PiecewisePolicy::fit(&set.pairs(), 1, 3).unwrap(),
        set.pairs(),
    )
}

fn random_qp_policy() -> PiecewisePolicy {
    let p = generate_random_qp(3, 2, 4).unwrap();
    let thetas = draw_thetas(&p.theta_domain, ThetaDistribution::Uniform, 80, 4);
    let set = collect_samples(&p, &thetas, &SamplerPolicy::default(), 0.0, 4);
    PiecewisePolicy::fit(&set.pairs(), 2, 4).unwrap()
}

#[test]
fn policy_interpolates_its_samples() {
    let (policy, pairs) = example1_policy();
    for (t, x) in &pairs {
        let y = policy.evaluate(t).unwrap();
        assert!(y.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
    let policy = random_qp_policy();
    for (i, t) in policy.triangulation.vertices().iter().enumerate() {
        let y = policy.evaluate(t).unwrap();
        assert!(y
            .iter()
            .zip(&policy.solutions[i])
            .all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}

#[test]
fn policy_is_continuous_across_facets() {
    let policy = random_qp_policy();
    let tri = &policy.triangulation;
    let mut shared: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (j, s) in tri.simplices().iter().enumerate() {
        for drop in 0..s.len() {
            let mut f: Vec<usize> = s
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, &x)| x)
                .collect();
            f.sort_unstable();
            shared.entry(f).or_default().push(j);
        }
    }
    let mut facets: Vec<(Vec<usize>, Vec<usize>)> =
        shared.into_iter().filter(|(_, s)| s.len() == 2).collect();
    facets.sort();
    assert!(facets.len() >= 100);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (f, owners) in facets.iter().take(100) {
        let w: f64 = rng.random();
        let (a, b) = (&tri.vertices()[f[0]], &tri.vertices()[f[1]]);
        let theta = [w * a[0] + (1.0 - w) * b[0], w * a[1] + (1.0 - w) * b[1]];
        let x = policy.evaluate_in(owners[0], &theta).unwrap();
        let y = policy.evaluate_in(owners[1], &theta).unwrap();
        assert!(
            x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= 1e-9),
            "{x:?} vs {y:?}"
        );
    }
}

#[test]
fn policy_output_lies_in_vertex_range() {
    let policy = random_qp_policy();
    let tri = &policy.triangulation;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let theta = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let Ok(b) = tri.locate(&theta) else { continue };
        let x = policy.evaluate(&theta).unwrap();
        for (d, xd) in x.iter().enumerate() {
            let vals = tri.simplices()[b.simplex_index]
                .iter()
                .map(|&i| policy.solutions[i][d]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            assert!(*xd >= lo - 1e-12 && *xd <= hi + 1e-12);
        }
    }
}

#[test]
fn finer_meshes_do_not_hurt_example1_or_random_problems() {
    // the tie at θ = 1 makes the quarter-mesh bound tight, so 1e-3 needs spacing 2/512
    let cfg = ConvergeConfig {
        levels: (1..=9).collect(),
        test_cells: Some(2000),
        ..ConvergeConfig::default()
    };
    let r = converge(&example1(), "example1", &cfg).unwrap();
    assert!(r.nonincreasing(1e-8));
    for row in &r.rows {
        assert!(row.max_subopt <= row.mesh_norm / 4.0 + 1e-8);
    }
    assert!(r.rows.last().unwrap().max_subopt <= 1e-3);

    let cfg = ConvergeConfig {
        levels: (1..=5).collect(),
        ..ConvergeConfig::default()
    };
    for p in [
        generate_random_lp(2, 2, 1).unwrap(),
        generate_random_qp(2, 2, 0).unwrap(),
    ] {
        let r = converge(&p, "random", &cfg).unwrap();
        assert!(r.nonincreasing(1e-8), "{:?}", r.rows);
        assert!(r.rows.last().unwrap().max_subopt <= 1e-3);
    }
}

#[test]
fn network_is_linear_inside_an_activation_pattern() {
    let model = MlpModel::he_init(&[2, 12, 12, 3], 21).unwrap();
    let signs = |t: &[f64]| -> Vec<bool> {
        model
            .hidden_preactivations(t)
            .unwrap()
            .iter()
            .map(|z| *z > 0.0)
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut tested = 0;
    while tested < 100 {
        let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let dir = [
            rng.random_range(-1.0..1.0) * 0.05,
            rng.random_range(-1.0..1.0) * 0.05,
        ];
        let b = [a[0] + dir[0], a[1] + dir[1]];
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        if signs(&a) != signs(&b) || signs(&a) != signs(&mid) {
            continue;
        }
        let (ya, yb, ym) = (
            model.forward(&a).unwrap(),
            model.forward(&b).unwrap(),
            model.forward(&mid).unwrap(),
        );
        for i in 0..3 {
            assert!((ym[i] - (ya[i] + yb[i]) / 2.0).abs() <= 1e-9);
        }
        tested += 1;
    }
}

#[test]
fn network_gaps_follow_policy_gaps_plus_deviation() {
    let p = example1();
    let (policy, _) = example1_policy();
    let data = policy_grid_samples(&policy, 101);
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 32,
        learning_rate: 1e-2,
        seed: 2,
        hidden: vec![16, 16],
        optimizer: Optimizer::adam(),
    };
    let model = train(&data, &cfg).unwrap();
    let grid = policy_grid_samples(&policy, 301);
    let delta = grid
        .iter()
        .map(|(t, x)| {
            let y = model.forward(t).unwrap();
            x.iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    // ∇ₓ(−θx₁ − x₂) = (−θ, −1), so f is √(1 + θ²)-Lipschitz in x; take the box maximum
    let lipschitz = (1.0f64 + 4.0).sqrt();
    let worst = |f: &dyn Fn(&[f64], &[f64]) -> f64, net: bool| {
        grid.iter()
            .map(|(t, x)| {
                if net {
                    f(t, &model.forward(t).unwrap())
                } else {
                    f(t, x)
                }
            })
            .fold(0.0, f64::max)
    };
    let infeas = |t: &[f64], x: &[f64]| infeasibility(&p, t, x).unwrap();
    let subopt = |t: &[f64], x: &[f64]| suboptimality(&p, t, x).unwrap();
    assert!(worst(&infeas, true) <= worst(&infeas, false) + delta);
    assert!(worst(&subopt, true) <= worst(&subopt, false) + lipschitz * delta + 1e-8);
}
