//! End-to-end studies: convergence under refinement, the Example 1 golden
//! comparison, the Example 2 counterexample, sampler stability, margin
//! sweeps and network fitting. Each returns a report that can write a CSV
//! body, a JSON sidecar and, where it makes sense, an SVG chart.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{
    cell_centers, collect_samples, draw_thetas, grid, pairs, Sample, ThetaDistribution,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_policy, feasibility_ratio, ge_bound, suboptimality, PolicyReport};
use crate::neural::{train, LayerNorms, MlpModel, TrainConfig};
use crate::plot::{Chart, Series};
use crate::policy::{closed_form_example1, Extrapolation, PiecewisePolicy};
use crate::problems::{example1, example2, example3, ParametricProblem, ThetaBox};
use crate::solvers::{solve, SamplerPolicy};

/// Writes `rows` as CSV with the given header.
fn write_table(out: impl Write, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn save_outputs(
    dir: &Path,
    stem: &str,
    csv_body: &[u8],
    sidecar: &str,
    svg: Option<String>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{stem}.csv")), csv_body)?;
    std::fs::write(dir.join(format!("{stem}.json")), sidecar)?;
    if let Some(svg) = svg {
        std::fs::write(dir.join(format!("{stem}.svg")), svg)?;
    }
    Ok(())
}

/// Parses `a:b:steps` into `steps` evenly spaced values from `a` to `b`.
pub fn parse_t_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidArgument(format!("t-grid must look like a:b:steps, got `{text}`"));
    let [a, b, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.parse().map_err(|_| bad())?;
    let b: f64 = b.parse().map_err(|_| bad())?;
    let steps: usize = steps.parse().map_err(|_| bad())?;
    if steps == 0 || !(a >= 0.0) || !(b >= a) {
        return Err(Error::InvalidArgument(
            "t-grid needs 0 <= a <= b and at least one step".into(),
        ));
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                b
            } else {
                a + (b - a) * i as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

/// Samples at `thetas`, fits a policy and measures it on `test_thetas`.
pub fn fit_and_measure(
    p: &ParametricProblem,
    thetas: &[Vec<f64>],
    sampler: &SamplerPolicy,
    gamma: f64,
    seed: u64,
    test_thetas: &[Vec<f64>],
    extrapolation: Extrapolation,
) -> Result<(PiecewisePolicy, PolicyReport)> {
    let set = collect_samples(p, thetas, sampler, gamma, seed);
    set.check_budget()?;
    let policy = PiecewisePolicy::fit(&set.pairs(), p.k, seed)?;
    let report = evaluate_policy(p, &policy.extrapolating(extrapolation), test_thetas);
    Ok((policy, report))
}

fn default_test_cells(k: usize) -> usize {
    match k {
        1 => 1000,
        2 => 40,
        _ => 12,
    }
}

#[derive(Clone, Debug)]
pub struct ConvergeConfig {
    /// Level `ℓ` samples a grid with `2^ℓ` intervals per axis.
    pub levels: Vec<u32>,
    /// Held-out cell centers per axis; `None` picks a size by dimension.
    pub test_cells: Option<usize>,
    pub sampler: SamplerPolicy,
    pub gamma: f64,
    pub seed: u64,
    pub extrapolation: Extrapolation,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            levels: (1..=5).collect(),
            test_cells: None,
            sampler: SamplerPolicy::default(),
            gamma: 0.0,
            seed: 0,
            extrapolation: Extrapolation::Error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub m: usize,
    pub mesh_norm: f64,
    pub max_infeas: f64,
    pub max_subopt: f64,
    pub mean_infeas: f64,
    pub mean_subopt: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergeReport {
    pub problem_ref: String,
    pub sampler: SamplerPolicy,
    pub gamma: f64,
    pub seed: u64,
    pub rows: Vec<LevelRow>,
}

impl ConvergeReport {
    /// Both max curves never rise by more than `tol` from one level to the next.
    pub fn nonincreasing(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].max_infeas <= w[0].max_infeas + tol && w[1].max_subopt <= w[0].max_subopt + tol
        })
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.level.to_string(),
                    r.m.to_string(),
                    r.mesh_norm.to_string(),
                    r.max_infeas.to_string(),
                    r.max_subopt.to_string(),
                    r.mean_infeas.to_string(),
                    r.mean_subopt.to_string(),
                    r.failures.to_string(),
                ]
            })
            .collect();
        write_table(
            out,
            &[
                "level",
                "m",
                "mesh_norm",
                "max_infeas",
                "max_subopt",
                "mean_infeas",
                "mean_subopt",
                "failures",
            ],
            &rows,
        )
    }

    pub fn chart(&self) -> Chart {
        let pts = |f: fn(&LevelRow) -> f64| self.rows.iter().map(|r| (r.mesh_norm, f(r))).collect();
        Chart::new(
            &format!("convergence: {}", self.problem_ref),
            "mesh norm",
            "max gap",
        )
        .log_log()
        .with(Series::new("max suboptimality", pts(|r| r.max_subopt)))
        .with(Series::new("max infeasibility", pts(|r| r.max_infeas)))
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let mut body = Vec::new();
        self.write_csv(&mut body)?;
        save_outputs(
            dir.as_ref(),
            stem,
            &body,
            &serde_json::to_string_pretty(self)?,
            Some(self.chart().to_svg()),
        )
    }
}

/// Samples on successively refined grids, fits, and measures each policy on
/// a fixed grid of held-out cell centers.
pub fn converge(
    p: &ParametricProblem,
    problem_ref: &str,
    cfg: &ConvergeConfig,
) -> Result<ConvergeReport> {
    let test = cell_centers(
        &p.theta_domain,
        cfg.test_cells.unwrap_or(default_test_cells(p.k)),
    );
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        let per_axis = (1usize << level) + 1;
        let thetas = grid(&p.theta_domain, per_axis);
        let (policy, report) = fit_and_measure(
            p,
            &thetas,
            &cfg.sampler,
            cfg.gamma,
            cfg.seed,
            &test,
            cfg.extrapolation,
        )?;
        log::info!(
            "level {level}: m = {}, max subopt = {:e}",
            policy.solutions.len(),
            report.max_subopt()
        );
        rows.push(LevelRow {
            level,
            m: policy.solutions.len(),
            mesh_norm: policy.triangulation.mesh_norm(),
            max_infeas: report.infeas.max,
            max_subopt: report.subopt.max,
            mean_infeas: report.infeas.mean,
            mean_subopt: report.subopt.mean,
            failures: report.failures.len(),
        });
    }
    Ok(ConvergeReport {
        problem_ref: problem_ref.to_string(),
        sampler: cfg.sampler.clone(),
        gamma: cfg.gamma,
        seed: cfg.seed,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub delta: f64,
    pub mesh_norm: f64,
    pub max_subopt: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoldenReport {
    /// Largest difference between the fitted policy and the closed form.
    pub max_abs_diff: f64,
    pub test_points: usize,
    pub bound_rows: Vec<BoundRow>,
}

impl GoldenReport {
    pub fn bounds_hold(&self, slack: f64) -> bool {
        self.bound_rows
            .iter()
            .all(|r| r.max_subopt <= r.bound + slack)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .bound_rows
            .iter()
            .map(|r| {
                vec![
                    r.delta.to_string(),
                    r.mesh_norm.to_string(),
                    r.max_subopt.to_string(),
                    r.bound.to_string(),
                ]
            })
            .collect();
        write_table(out, &["delta", "mesh_norm", "max_subopt", "bound"], &rows)
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let mut body = Vec::new();
        self.write_csv(&mut body)?;
        let chart = Chart::new("example1: suboptimality vs mesh", "mesh norm", "max gap")
            .log_log()
            .with(Series::new(
                "max suboptimality",
                self.bound_rows
                    .iter()
                    .map(|r| (r.mesh_norm, r.max_subopt))
                    .collect(),
            ))
            .with(Series::new(
                "mesh norm / 4",
                self.bound_rows
                    .iter()
                    .map(|r| (r.mesh_norm, r.bound))
                    .collect(),
            ));
        save_outputs(
            dir.as_ref(),
            stem,
            &body,
            &serde_json::to_string_pretty(self)?,
            Some(chart.to_svg()),
        )
    }
}

/// Evenly spaced points over `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    grid(&ThetaBox::cube(1, lo, hi), count)
}

/// Compares the fitted Example 1 policy with the closed form, then checks
/// the `δ/4` suboptimality bound on uniform grids of spacing `δ`.
pub fn example1_golden(
    test_points: usize,
    deltas: &[f64],
    sampler: &SamplerPolicy,
) -> Result<GoldenReport> {
    let p = example1();
    let test = linspace(0.0, 2.0, test_points);
    let fixed: Vec<Vec<f64>> = [0.0, 0.9, 1.1, 2.0].iter().map(|&t| vec![t]).collect();
    let set = collect_samples(&p, &fixed, sampler, 0.0, 0);
    set.check_budget()?;
    let policy = PiecewisePolicy::fit(&set.pairs(), 1, 0)?;
    let mut max_abs_diff: f64 = 0.0;
    for t in &test {
        let x = policy.evaluate(t)?;
        let c = closed_form_example1(t[0], 0.9, 1.1)?;
        max_abs_diff = max_abs_diff
            .max((x[0] - c[0]).abs())
            .max((x[1] - c[1]).abs());
    }
    let mut bound_rows = Vec::new();
    for &delta in deltas {
        let count = (2.0 / delta).round() as usize + 1;
        let thetas = linspace(0.0, 2.0, count);
        let (policy, report) =
            fit_and_measure(&p, &thetas, sampler, 0.0, 0, &test, Extrapolation::Error)?;
        let mesh_norm = policy.triangulation.mesh_norm();
        bound_rows.push(BoundRow {
            delta,
            mesh_norm,
            max_subopt: report.subopt.max,
            bound: mesh_norm / 4.0,
        });
    }
    Ok(GoldenReport {
        max_abs_diff,
        test_points,
        bound_rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterRow {
    pub m: usize,
    pub mesh_norm: f64,
    pub theta_left: f64,
    pub theta_right: f64,
    pub midpoint_gap: f64,
    pub arbitrary_max_gap: f64,
    pub fixed_rule_max_gap: f64,
    pub seed_used: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterReport {
    pub seed: u64,
    pub fixed_rule: String,
    pub rows: Vec<CounterRow>,
}

impl CounterReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    r.mesh_norm.to_string(),
                    r.theta_left.to_string(),
                    r.theta_right.to_string(),
                    r.midpoint_gap.to_string(),
                    r.arbitrary_max_gap.to_string(),
                    r.fixed_rule_max_gap.to_string(),
                    r.seed_used.to_string(),
                ]
            })
            .collect();
        write_table(
            out,
            &[
                "m",
                "mesh_norm",
                "theta_left",
                "theta_right",
                "midpoint_gap",
                "arbitrary_max_gap",
                "fixed_rule_max_gap",
                "seed_used",
            ],
            &rows,
        )
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let mut body = Vec::new();
        self.write_csv(&mut body)?;
        let chart = Chart::new("example2: gap vs mesh norm", "mesh norm", "gap")
            .with(Series::new(
                "arbitrary vertex, midpoint",
                self.rows
                    .iter()
                    .map(|r| (r.mesh_norm, r.midpoint_gap))
                    .collect(),
            ))
            .with(Series::new(
                "fixed rule, max",
                self.rows
                    .iter()
                    .map(|r| (r.mesh_norm, r.fixed_rule_max_gap))
                    .collect(),
            ));
        save_outputs(
            dir.as_ref(),
            stem,
            &body,
            &serde_json::to_string_pretty(self)?,
            Some(chart.to_svg()),
        )
    }
}

const COUNTER_TRIES: u64 = 10;

/// Example 2 with arbitrary tie-breaking: finds adjacent samples whose
/// solutions differ, measures the gap at their midpoint, then repeats the
/// fit with a fixed rule.
pub fn example2_counter(seed: u64, sizes: &[usize]) -> Result<CounterReport> {
    let p = example2();
    let rule = SamplerPolicy::rule("always-lowest-point")?;
    let test = cell_centers(&p.theta_domain, 1000);
    let mut rows = Vec::new();
    for &m in sizes {
        if m < 2 {
            return Err(Error::InvalidArgument(
                "each size needs at least 2 samples".into(),
            ));
        }
        let thetas = linspace(-1.0, 1.0, m);
        let mut found = None;
        for attempt in 0..COUNTER_TRIES {
            let s = seed.wrapping_add(attempt);
            let set = collect_samples(&p, &thetas, &SamplerPolicy::arbitrary(s), 0.0, s);
            set.check_budget()?;
            let pair = set
                .samples
                .windows(2)
                .find(|w| (w[0].x[0] - w[1].x[0]).abs() > 1.0)
                .map(|w| (w[0].theta[0], w[1].theta[0]));
            if let Some(pair) = pair {
                found = Some((s, set, pair));
                break;
            }
        }
        let Some((seed_used, set, (theta_left, theta_right))) = found else {
            return Err(Error::InvalidArgument(format!(
                "no adjacent samples with different solutions after {COUNTER_TRIES} seeds"
            )));
        };
        let policy = PiecewisePolicy::fit(&set.pairs(), 1, seed_used)?;
        let mid = [(theta_left + theta_right) / 2.0];
        let midpoint_gap = suboptimality(&p, &mid, &policy.evaluate(&mid)?)?;
        let arbitrary_max_gap = evaluate_policy(&p, &policy, &test).subopt.max;
        let (_, fixed) =
            fit_and_measure(&p, &thetas, &rule, 0.0, seed, &test, Extrapolation::Error)?;
        rows.push(CounterRow {
            m,
            mesh_norm: policy.triangulation.mesh_norm(),
            theta_left,
            theta_right,
            midpoint_gap,
            arbitrary_max_gap,
            fixed_rule_max_gap: fixed.subopt.max,
            seed_used,
        });
    }
    Ok(CounterReport {
        seed,
        fixed_rule: rule.rule_id,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableRow {
    pub problem: String,
    pub sampler: String,
    pub level: u32,
    pub mesh_norm: f64,
    pub max_subopt: f64,
    /// Max gap over test points with `|θ| ≥ 0.25`.
    pub max_subopt_away: f64,
    /// Simplices containing a test point with gap above `1e-8`.
    pub bad_simplices: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StableReport {
    pub seed: u64,
    pub rows: Vec<StableRow>,
}

impl StableReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.problem.clone(),
                    r.sampler.clone(),
                    r.level.to_string(),
                    r.mesh_norm.to_string(),
                    r.max_subopt.to_string(),
                    r.max_subopt_away.to_string(),
                    r.bad_simplices.to_string(),
                ]
            })
            .collect();
        write_table(
            out,
            &[
                "problem",
                "sampler",
                "level",
                "mesh_norm",
                "max_subopt",
                "max_subopt_away",
                "bad_simplices",
            ],
            &rows,
        )
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let mut body = Vec::new();
        self.write_csv(&mut body)?;
        let mut chart = Chart::new("sampler stability", "mesh norm", "max gap");
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.problem.clone(), r.sampler.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for (problem, sampler) in keys {
            let pts = self
                .rows
                .iter()
                .filter(|r| r.problem == problem && r.sampler == sampler)
                .map(|r| (r.mesh_norm, r.max_subopt))
                .collect();
            chart = chart.with(Series::new(format!("{problem} {sampler}"), pts));
        }
        save_outputs(
            dir.as_ref(),
            stem,
            &body,
            &serde_json::to_string_pretty(self)?,
            Some(chart.to_svg()),
        )
    }
}

fn sampler_label(s: &SamplerPolicy) -> String {
    if s.rule_id.is_empty() {
        "arbitrary".into()
    } else {
        format!("rule:{}", s.rule_id)
    }
}

/// Example 2 and Example 3 under arbitrary and fixed-rule tie-breaking.
pub fn stable_sampler(levels: &[u32], seed: u64) -> Result<StableReport> {
    let samplers = [
        SamplerPolicy::arbitrary(seed),
        SamplerPolicy::rule("always-lowest-point")?,
        SamplerPolicy::rule("always-highest-point")?,
    ];
    let mut rows = Vec::new();
    for (name, p) in [("example2", example2()), ("example3", example3())] {
        let test = cell_centers(&p.theta_domain, 1000);
        for sampler in &samplers {
            for &level in levels {
                let thetas = grid(&p.theta_domain, (1usize << level) + 1);
                let (policy, report) =
                    fit_and_measure(&p, &thetas, sampler, 0.0, seed, &test, Extrapolation::Error)?;
                let max_subopt_away = report
                    .records
                    .iter()
                    .filter(|r| r.theta[0].abs() >= 0.25)
                    .map(|r| r.subopt_gap)
                    .fold(0.0, f64::max);
                let mut bad: Vec<usize> = Vec::new();
                for r in report.records.iter().filter(|r| r.subopt_gap > 1e-8) {
                    let j = policy.triangulation.locate(&r.theta)?.simplex_index;
                    if !bad.contains(&j) {
                        bad.push(j);
                    }
                }
                rows.push(StableRow {
                    problem: name.into(),
                    sampler: sampler_label(sampler),
                    level,
                    mesh_norm: policy.triangulation.mesh_norm(),
                    max_subopt: report.subopt.max,
                    max_subopt_away,
                    bad_simplices: bad.len(),
                });
            }
        }
    }
    Ok(StableReport { seed, rows })
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub t_values: Vec<f64>,
    /// Training parameters drawn per margin value.
    pub m: usize,
    /// Held-out parameters for the feasibility ratio.
    pub test_m: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub ratio: f64,
    pub train_mse: f64,
    /// Extra parameter draws needed because the tightened problem was infeasible.
    pub redraws: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub problem_ref: String,
    pub m: usize,
    pub test_m: usize,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

/// Median of each value and its neighbours (endpoints use the two available).
pub fn median3(values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(values.len());
            let mut w = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            if w.len() == 2 {
                0.5 * (w[0] + w[1])
            } else {
                w[w.len() / 2]
            }
        })
        .collect()
}

impl SweepReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    pub fn smoothed_nondecreasing(&self) -> bool {
        median3(&self.ratios()).windows(2).all(|w| w[1] >= w[0])
    }

    pub fn reaches_full(&self) -> bool {
        self.rows.last().is_some_and(|r| r.ratio == 100.0)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.t.to_string(),
                    r.ratio.to_string(),
                    r.train_mse.to_string(),
                    r.redraws.to_string(),
                ]
            })
            .collect();
        write_table(
            out,
            &["t", "feasibility_ratio", "train_mse", "redraws"],
            &rows,
        )
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let mut body = Vec::new();
        self.write_csv(&mut body)?;
        let chart = Chart::new(
            &format!("margin sweep: {}", self.problem_ref),
            "margin t",
            "feasible (%)",
        )
        .with(Series::new(
            "feasibility ratio",
            self.rows.iter().map(|r| (r.t, r.ratio)).collect(),
        ));
        save_outputs(
            dir.as_ref(),
            stem,
            &body,
            &serde_json::to_string_pretty(self)?,
            Some(chart.to_svg()),
        )
    }
}

/// For each margin `t`: draws standard normal parameters, solves the
/// tightened problem, trains a network on the solutions and reports the
/// share of held-out parameters where its output is feasible for the
/// original problem.
pub fn margin_sweep(
    p: &ParametricProblem,
    problem_ref: &str,
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    if cfg.t_values.windows(2).any(|w| w[1] < w[0]) || cfg.t_values.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "t values must be nonnegative and ascending".into(),
        ));
    }
    let domain = ThetaBox::cube(p.k, 0.0, 0.0);
    let test: Vec<Vec<f64>> = draw_thetas(
        &domain,
        ThetaDistribution::Normal,
        cfg.test_m * 2,
        cfg.seed ^ 0x7e57,
    )
    .into_iter()
    .filter(|t| solve(p, t, &SamplerPolicy::default()).is_ok_and(|r| r.into_optimal().is_ok()))
    .take(cfg.test_m)
    .collect();
    let mut rows = Vec::new();
    for &t in &cfg.t_values {
        let pt = p.with_margin(t)?;
        let mut samples: Vec<Sample> = Vec::with_capacity(cfg.m);
        let mut drawn = 0;
        let mut round = 0u64;
        while samples.len() < cfg.m && drawn < 10 * cfg.m {
            let want = (cfg.m - samples.len()).min(10 * cfg.m - drawn);
            let thetas = draw_thetas(
                &domain,
                ThetaDistribution::Normal,
                want,
                cfg.seed.wrapping_add(round),
            );
            drawn += want;
            round += 1;
            let set = collect_samples(&pt, &thetas, &SamplerPolicy::default(), 0.0, cfg.seed);
            samples.extend(set.samples);
        }
        if samples.is_empty() {
            return Err(Error::Infeasible);
        }
        let model = train(&pairs(&samples), &cfg.train)?;
        let train_mse = model
            .train_meta
            .as_ref()
            .map_or(f64::NAN, |m| m.final_train_loss);
        let ratio = feasibility_ratio(p, &model, &test);
        log::info!("t = {t}: ratio = {ratio}%, train mse = {train_mse:e}");
        rows.push(SweepRow {
            t,
            ratio,
            train_mse,
            redraws: drawn - cfg.m.min(drawn),
        });
    }
    Ok(SweepReport {
        problem_ref: problem_ref.to_string(),
        m: cfg.m,
        test_m: test.len(),
        seed: cfg.seed,
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct NnFitConfig {
    pub train: TrainConfig,
    /// Share of samples held out from training.
    pub holdout_fraction: f64,
    /// Grid resolution per axis for the deviation from the interpolated policy.
    pub grid_per_axis: usize,
}

impl Default for NnFitConfig {
    fn default() -> Self {
        NnFitConfig {
            train: TrainConfig::default(),
            holdout_fraction: 0.2,
            grid_per_axis: 201,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NnFitReport {
    pub m_train: usize,
    pub m_holdout: usize,
    pub train_mse: f64,
    pub holdout_mse: Option<f64>,
    /// Max Euclidean distance between network and policy over a grid.
    pub max_grid_deviation: Option<f64>,
    pub norms: LayerNorms,
    pub ge_bound: f64,
}

impl NnFitReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let mut rows = vec![
            vec!["m_train".to_string(), self.m_train.to_string()],
            vec!["m_holdout".into(), self.m_holdout.to_string()],
            vec!["train_mse".into(), self.train_mse.to_string()],
            vec!["holdout_mse".into(), opt(self.holdout_mse)],
            vec!["max_grid_deviation".into(), opt(self.max_grid_deviation)],
            vec!["ge_bound".into(), self.ge_bound.to_string()],
            vec![
                "layer1_spectral_norm".into(),
                self.norms.layer1_spectral.to_string(),
            ],
        ];
        for (l, b) in self.norms.inf_norms.iter().enumerate() {
            rows.push(vec![format!("inf_norm_{}", l + 1), b.to_string()]);
        }
        write_table(out, &["quantity", "value"], &rows)
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let mut body = Vec::new();
        self.write_csv(&mut body)?;
        save_outputs(
            dir.as_ref(),
            stem,
            &body,
            &serde_json::to_string_pretty(self)?,
            None,
        )
    }
}

/// Samples `x̂` on a grid over the bounding box of the policy's vertices,
/// keeping points inside the hull.
pub fn policy_grid_samples(policy: &PiecewisePolicy, per_axis: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let v = policy.triangulation.vertices();
    let k = policy.k();
    let lower: Vec<f64> = (0..k)
        .map(|d| v.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min))
        .collect();
    let upper: Vec<f64> = (0..k)
        .map(|d| v.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    grid(&ThetaBox { lower, upper }, per_axis)
        .into_iter()
        .filter_map(|t| policy.evaluate(&t).ok().map(|x| (t, x)))
        .collect()
}

/// Trains a network on `samples` with a seeded holdout split and reports
/// errors, layer norms and the generalization bound.
pub fn nn_fit(
    samples: &[(Vec<f64>, Vec<f64>)],
    policy: Option<&PiecewisePolicy>,
    cfg: &NnFitConfig,
) -> Result<(MlpModel, NnFitReport)> {
    if !(0.0..1.0).contains(&cfg.holdout_fraction) {
        return Err(Error::InvalidArgument(
            "holdout fraction must be in [0, 1)".into(),
        ));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.train.seed ^ 0x401d));
    let n_hold = (cfg.holdout_fraction * samples.len() as f64).floor() as usize;
    let (hold_idx, train_idx) = order.split_at(n_hold);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let train_set: Vec<_> = train_idx.iter().map(|&i| samples[i].clone()).collect();
    let hold_set: Vec<_> = hold_idx.iter().map(|&i| samples[i].clone()).collect();
    let model = train(&train_set, &cfg.train)?;
    let train_mse = model.loss(&train_set)?;
    let holdout_mse = if hold_set.is_empty() {
        None
    } else {
        Some(model.loss(&hold_set)?)
    };
    let max_grid_deviation = match policy {
        Some(pp) => {
            let mut worst: f64 = 0.0;
            for (t, x) in policy_grid_samples(pp, cfg.grid_per_axis) {
                let y = model.forward(&t)?;
                worst = worst.max(crate::linalg::dist2(&x, &y));
            }
            Some(worst)
        }
        None => None,
    };
    let norms = model.norms();
    let bound = ge_bound(&norms.inf_norms, train_set.len())?;
    Ok((
        model,
        NnFitReport {
            m_train: train_set.len(),
            m_holdout: hold_set.len(),
            train_mse,
            holdout_mse,
            max_grid_deviation,
            norms,
            ge_bound: bound,
        },
    ))
}
