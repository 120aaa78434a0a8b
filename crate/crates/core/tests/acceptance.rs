//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with: `cargo test --release --test acceptance`

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use piecewise_policy::data::collect_samples;
use piecewise_policy::experiments::{
    converge, example1_golden, example2_counter, fit_and_measure, linspace, margin_sweep, nn_fit,
    parse_t_grid, policy_grid_samples, ConvergeConfig, NnFitConfig, SweepConfig,
};
use piecewise_policy::metrics::ge_bound;
use piecewise_policy::neural::{gradient_check, Optimizer, TrainConfig};
use piecewise_policy::policy::{closed_form_example1, Extrapolation, PiecewisePolicy};
use piecewise_policy::problems::{example1, generate_random_lp, generate_random_qp};
use piecewise_policy::simplicial::Triangulation;
use piecewise_policy::solvers::{project_onto_polyhedron, simplex, solve, SamplerPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<Outcome, String>) -> Outcome {
    let start = Instant::now();
    let r = f();
    let elapsed = start.elapsed();
    match r {
        Err(e) => outcome(false, format!("error: {e}")),
        Ok(mut o) => {
            if let Some(limit) = limit {
                if elapsed > limit {
                    o.pass = false;
                    o.detail
                        .push_str(&format!("; too slow ({elapsed:.2?} > {limit:?})"));
                    return o;
                }
            }
            o.detail.push_str(&format!("; {elapsed:.2?}"));
            o
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ac1() -> Result<Outcome, String> {
    let p = example1();
    let fixed: Vec<Vec<f64>> = [0.0, 0.9, 1.1, 2.0].iter().map(|&t| vec![t]).collect();
    let set = collect_samples(&p, &fixed, &SamplerPolicy::default(), 0.0, 0);
    let policy = PiecewisePolicy::fit(&set.pairs(), 1, 0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for t in linspace(0.0, 2.0, 1000) {
        let x = policy.evaluate(&t).map_err(err)?;
        let c = closed_form_example1(t[0], 0.9, 1.1).map_err(err)?;
        // the closed form, written out independently of the library's
        let r = if t[0] <= 0.9 {
            [0.0, 1.0]
        } else if t[0] >= 1.1 {
            [1.0, 0.0]
        } else {
            let s = (t[0] - 0.9) / 0.2;
            [s, 1.0 - s]
        };
        for i in 0..2 {
            worst = worst.max((x[i] - c[i]).abs()).max((x[i] - r[i]).abs());
        }
    }
    Ok(outcome(
        worst <= 1e-9,
        format!("max |x̂ − closed form| = {worst:.2e} on 1000 points"),
    ))
}

fn ac2() -> Result<Outcome, String> {
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let r = example1_golden(1000, &deltas, &SamplerPolicy::default()).map_err(err)?;
    let mut pass = r.bound_rows.len() == deltas.len();
    let mut parts = Vec::new();
    for (row, &delta) in r.bound_rows.iter().zip(&deltas) {
        // on an evenly spaced line the mesh norm is the spacing itself
        let ok = (row.mesh_norm - delta).abs() <= 1e-12 && row.max_subopt <= delta / 4.0 + 1e-8;
        pass &= ok;
        parts.push(format!(
            "δ={delta}: {:.6} ≤ {:.6}",
            row.max_subopt,
            delta / 4.0
        ));
    }
    Ok(outcome(pass, parts.join(", ")))
}

fn ac3() -> Result<Outcome, String> {
    let p = generate_random_qp(2, 2, 0).map_err(err)?;
    let r = converge(&p, "qp:2:2:0", &ConvergeConfig::default()).map_err(err)?;
    let last = r.rows.last().ok_or("no levels")?;
    let pass = r.rows.len() == 5
        && r.nonincreasing(1e-8)
        && last.max_infeas <= 1e-3
        && last.max_subopt <= 1e-3;
    let curve: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("{:.2e}", row.max_subopt))
        .collect();
    Ok(outcome(
        pass,
        format!(
            "subopt by level [{}], final infeas {:.1e}, nonincreasing {}",
            curve.join(", "),
            last.max_infeas,
            r.nonincreasing(1e-8)
        ),
    ))
}

fn ac4() -> Result<Outcome, String> {
    let r = example2_counter(0, &[9, 17, 33, 65, 129]).map_err(err)?;
    let pass = !r.rows.is_empty()
        && r.rows
            .iter()
            .all(|row| (row.midpoint_gap - 1.0).abs() <= 1e-9 && row.fixed_rule_max_gap <= 1e-8)
        && r.fixed_rule == "always-lowest-point";
    let worst_fixed = r
        .rows
        .iter()
        .map(|row| row.fixed_rule_max_gap)
        .fold(0.0, f64::max);
    let gaps: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("{}", row.midpoint_gap))
        .collect();
    Ok(outcome(
        pass,
        format!(
            "arbitrary midpoint gaps [{}], {} max gap {worst_fixed:e}",
            gaps.join(", "),
            r.fixed_rule
        ),
    ))
}

fn ac5() -> Result<Outcome, String> {
    let p = example1();
    let thetas = linspace(0.0, 2.0, 41);
    let test = linspace(0.0, 2.0, 1000);
    let sampler = SamplerPolicy::default();
    let (exact_policy, exact) =
        fit_and_measure(&p, &thetas, &sampler, 0.0, 0, &test, Extrapolation::Error).map_err(err)?;
    let mesh = exact_policy.triangulation.mesh_norm();
    let mut pass = (mesh - 0.05).abs() <= 1e-12;
    let mut parts = vec![format!("exact {:.5}", exact.subopt.max)];
    for gamma in [0.0, 0.05, 0.1] {
        let (_, r) = fit_and_measure(&p, &thetas, &sampler, gamma, 0, &test, Extrapolation::Error)
            .map_err(err)?;
        pass &= r.subopt.max <= exact.subopt.max + gamma + 1e-6 && r.infeas.max == 0.0;
        parts.push(format!("γ={gamma}: {:.5}", r.subopt.max));
    }
    Ok(outcome(pass, format!("mesh {mesh}, {}", parts.join(", "))))
}

fn ac6() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut lp_fail = Vec::new();
    for seed in 0..100u64 {
        let n = 2 + (seed % 5) as usize;
        let m_c = n + 1 + (seed % 3) as usize;
        let p = generate_random_lp(n, m_c, seed).map_err(err)?;
        let theta: Vec<f64> = (0..m_c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = p.lp_cost(&theta).ok_or("not an LP")?;
        let poly = p.polyhedron(&theta).ok_or("no polyhedron")?;
        let sol = simplex::solve(&c, &poly.rows, &poly.rhs).solution;
        let reduced_ok = sol.reduced_costs.iter().all(|&r| r >= -1e-9);
        let kkt = common::lp_kkt(&c, &poly.rows, &poly.rhs, &sol.x, &sol.duals);
        if sol.outcome != simplex::LpOutcome::Optimal
            || !reduced_ok
            || poly.residual(&sol.x) > 1e-8
            || kkt.is_err()
        {
            lp_fail.push(format!("seed {seed}: {:?} {kkt:?}", sol.outcome));
        }
    }
    let mut qp_worst: f64 = 0.0;
    let mut qp_fail = Vec::new();
    for seed in 0..20u64 {
        let p = generate_random_qp(2, 2, 100 + seed).map_err(err)?;
        let theta: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = solve(&p, &theta, &SamplerPolicy::default())
            .map_err(err)?
            .into_optimal()
            .map_err(err)?;
        // the generated box bound keeps every feasible point inside [-1000, 1000]²
        let (oracle, _) =
            common::qp_grid_oracle(&p, &theta, 1024.0, 1.0).ok_or("empty oracle grid")?;
        let gap = (r.objective - oracle).abs();
        qp_worst = qp_worst.max(gap);
        if gap > 1e-3 {
            qp_fail.push(format!(
                "seed {}: solver {} vs grid {oracle}",
                100 + seed,
                r.objective
            ));
        }
    }
    let mut proj_worst: f64 = 0.0;
    for seed in 0..20u64 {
        let p = generate_random_lp(3, 4, 200 + seed).map_err(err)?;
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let poly = p.polyhedron(&theta).ok_or("no polyhedron")?;
        for _ in 0..5 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (y, _) = project_onto_polyhedron(&poly, &x).map_err(err)?;
            let (z, _) = project_onto_polyhedron(&poly, &y).map_err(err)?;
            let d = y
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            proj_worst = proj_worst.max(d);
        }
    }
    let pass = lp_fail.is_empty() && qp_fail.is_empty() && proj_worst <= 1e-8;
    let mut detail = format!(
        "LP certificates {}/100, QP worst |f − grid| {qp_worst:.1e} over 20, projection drift {proj_worst:.1e}",
        100 - lp_fail.len()
    );
    for f in lp_fail.iter().chain(&qp_fail).take(3) {
        detail.push_str(&format!("; {f}"));
    }
    Ok(outcome(pass, detail))
}

fn ac7() -> Result<Outcome, String> {
    let mut failures = Vec::new();
    for k in 1..=3 {
        for seed in 0..20u64 {
            let points = common::point_cloud(k, 1000 * k as u64 + seed);
            let tri = Triangulation::build(&points, seed).map_err(err)?;
            if let Err(e) = common::structure_check(&tri) {
                failures.push(format!("k={k} seed {seed}: {e}"));
            }
            if !tri.verify().passed() {
                failures.push(format!("k={k} seed {seed}: self-check {:?}", tri.verify()));
            }
            let missed = common::coverage_oracle(&tri, 10_000, seed);
            if missed > 0 {
                failures.push(format!(
                    "k={k} seed {seed}: {missed} of 10000 hull points not located"
                ));
            }
            let volume = common::total_volume(&tri);
            let expected = match k {
                1 => {
                    let xs = points.iter().map(|p| p[0]);
                    xs.clone().fold(f64::NEG_INFINITY, f64::max) - xs.fold(f64::INFINITY, f64::min)
                }
                2 => common::hull_area(&points),
                _ => volume,
            };
            if (volume - expected).abs() > 1e-9 {
                failures.push(format!(
                    "k={k} seed {seed}: simplex volume {volume} vs hull {expected}"
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        "60 clouds: cardinality, facet pairing, hull volume and 10⁴-point coverage all hold"
            .to_string()
    } else {
        format!("{} problems, first: {}", failures.len(), failures[0])
    };
    Ok(outcome(failures.is_empty(), detail))
}

fn ac8() -> Result<Outcome, String> {
    let samples: Vec<(Vec<f64>, Vec<f64>)> = [
        (0.0, [0.0, 1.0]),
        (0.9, [0.0, 1.0]),
        (1.1, [1.0, 0.0]),
        (2.0, [1.0, 0.0]),
    ]
    .iter()
    .map(|(t, x)| (vec![*t], x.to_vec()))
    .collect();
    let policy = PiecewisePolicy::fit(&samples, 1, 0).map_err(err)?;
    let data = policy_grid_samples(&policy, 201);
    let cfg = NnFitConfig {
        train: TrainConfig {
            epochs: 5000,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            hidden: vec![32, 32],
            optimizer: Optimizer::adam(),
        },
        holdout_fraction: 0.2,
        grid_per_axis: 1001,
    };
    let (model, report) = nn_fit(&data, Some(&policy), &cfg).map_err(err)?;
    let deviation = report.max_grid_deviation.ok_or("no deviation")?;
    let check_samples: Vec<_> = data.iter().step_by(10).cloned().collect();
    let grad_ok = gradient_check(&model, &check_samples, 1e-5);
    let pass = report.train_mse <= 1e-4 && deviation <= 5e-2 && grad_ok;
    Ok(outcome(
        pass,
        format!(
            "train mse {:.2e}, holdout mse {:.2e}, max deviation {deviation:.2e}, gradient check {grad_ok}",
            report.train_mse,
            report.holdout_mse.unwrap_or(f64::NAN)
        ),
    ))
}

fn ac9() -> Result<Outcome, String> {
    // (norms, m, 2∏B/√m worked out by hand)
    let cases: [(&[f64], usize, f64); 3] = [
        (&[2.0, 3.0], 16, 3.0),
        (&[1.5, 4.0, 0.5], 9, 2.0),
        (&[10.0], 100, 2.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (norms, m, expected) in cases {
        let b = ge_bound(norms, m).map_err(err)?;
        let b4 = ge_bound(norms, 4 * m).map_err(err)?;
        pass &= (b - expected).abs() <= 1e-12 * expected && b4 == b / 2.0;
        parts.push(format!("{norms:?}, m={m}: {b} (quadrupled m: {b4})"));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn ac10() -> Result<Outcome, String> {
    let cfg = SweepConfig {
        t_values: parse_t_grid("0:1:20").map_err(err)?,
        m: 1000,
        test_m: 500,
        train: TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        },
        seed: 0,
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, p) in [
        ("lp:5:5:0", generate_random_lp(5, 5, 0).map_err(err)?),
        ("qp:5:5:0", generate_random_qp(5, 5, 0).map_err(err)?),
    ] {
        let r = margin_sweep(&p, name, &cfg).map_err(err)?;
        let ratios = r.ratios();
        // independent smoothing: median of each window of three, pairs averaged at the ends
        let smoothed: Vec<f64> = (0..ratios.len())
            .map(|i| {
                let mut w: Vec<f64> =
                    ratios[i.saturating_sub(1)..(i + 2).min(ratios.len())].to_vec();
                w.sort_by(f64::total_cmp);
                if w.len() == 3 {
                    w[1]
                } else {
                    (w[0] + w[w.len() - 1]) / 2.0
                }
            })
            .collect();
        let monotone = smoothed.windows(2).all(|w| w[1] >= w[0]);
        let full = ratios.last() == Some(&100.0);
        pass &= ratios.len() == 20
            && monotone
            && full
            && ratios.iter().all(|r| (0.0..=100.0).contains(r));
        parts.push(format!(
            "{name}: {:.1}% → {:.1}%, smoothed nondecreasing {monotone}",
            ratios[0],
            ratios[ratios.len() - 1]
        ));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_piecewise-policy"))
        .args(args)
        .env("RUST_LOG", "error")
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(err)?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("`{}` exited with {status}", args.join(" ")))
    }
}

fn ac11() -> Result<Outcome, String> {
    let dirs = [
        tempfile::tempdir().map_err(err)?,
        tempfile::tempdir().map_err(err)?,
    ];
    for dir in &dirs {
        let out = dir.path().to_str().ok_or("temp path")?;
        let path = |f: &str| Path::new(out).join(f).to_string_lossy().into_owned();
        run_cli(&[
            "sample",
            "--problem",
            "example1",
            "--m",
            "50",
            "--sampler",
            "arbitrary",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&[
            "triangulate",
            "--samples",
            &path("samples.csv"),
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&[
            "fit",
            "--samples",
            &path("samples.csv"),
            "--problem",
            "example1",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&[
            "evaluate",
            "--problem",
            "example1",
            "--policy",
            &path("policy.json"),
            "--m",
            "200",
            "--extrapolate",
            "clip",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&[
            "converge",
            "--problem",
            "qp:2:2:0",
            "--levels",
            "3",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&["example1-golden", "--out", out])?;
        run_cli(&["example2-counter", "--seed", "3", "--out", out])?;
        run_cli(&[
            "stable-sampler",
            "--levels",
            "3",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&[
            "margin-sweep",
            "--family",
            "qp",
            "--n",
            "3",
            "--t-grid",
            "0:0.5:3",
            "--m",
            "100",
            "--hidden",
            "8",
            "--epochs",
            "20",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
        run_cli(&[
            "nn-fit",
            "--samples",
            &path("samples.csv"),
            "--hidden",
            "8",
            "--epochs",
            "50",
            "--seed",
            "3",
            "--out",
            out,
        ])?;
    }
    let files = [
        "samples.csv",
        "triangulation.json",
        "policy.json",
        "report.csv",
        "converge.csv",
        "example1_golden.csv",
        "example2_counter.csv",
        "stable_sampler.csv",
        "margin_sweep.csv",
        "nn_fit.csv",
        "model.json",
    ];
    let mut differing = Vec::new();
    for f in files {
        let a = std::fs::read(dirs[0].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dirs[1].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        if a != b || a.is_empty() {
            differing.push(f);
        }
    }
    let detail = if differing.is_empty() {
        format!(
            "{} outputs of 10 commands identical across reruns",
            files.len()
        )
    } else {
        format!("differing outputs: {differing:?}")
    };
    Ok(outcome(differing.is_empty(), detail))
}

fn main() {
    type Check = fn() -> Result<Outcome, String>;
    let checks: Vec<(&str, &str, Option<u64>, Check)> = vec![
        ("AC1", "Example 1 golden policy", Some(1), ac1),
        ("AC2", "quarter-mesh suboptimality bound", None, ac2),
        ("AC3", "convergence on a seeded QP", Some(60), ac3),
        (
            "AC4",
            "Example 2 counterexample and fixed rule",
            Some(5),
            ac4,
        ),
        ("AC5", "γ-relaxed samples", Some(10), ac5),
        ("AC6", "solver oracles", None, ac6),
        ("AC7", "triangulation invariants", None, ac7),
        ("AC8", "network realizes the policy", Some(120), ac8),
        ("AC9", "generalization bound arithmetic", None, ac9),
        ("AC10", "margin sweep", Some(600), ac10),
        ("AC11", "command determinism", None, ac11),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in checks {
        let o = timed(limit.map(Duration::from_secs), f);
        println!(
            "{} {id} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
