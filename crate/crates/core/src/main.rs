use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use piecewise_policy::data::{
    collect_samples, draw_thetas, pairs, read_samples_csv, write_samples_csv, ThetaDistribution,
};
use piecewise_policy::experiments::{
    converge, example1_golden, example2_counter, margin_sweep, nn_fit, parse_t_grid,
    policy_grid_samples, stable_sampler, ConvergeConfig, NnFitConfig, SweepConfig,
};
use piecewise_policy::metrics::evaluate_policy;
use piecewise_policy::neural::TrainConfig;
use piecewise_policy::policy::{Extrapolation, PiecewisePolicy};
use piecewise_policy::problems::{
    builtin, generate_random_lp, generate_random_qp, ParametricProblem,
};
use piecewise_policy::simplicial::Triangulation;
use piecewise_policy::solvers::SamplerPolicy;
use piecewise_policy::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(
    name = "piecewise-policy",
    version,
    about = "Piecewise linear policies for parametric optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit with status 4 if the command's acceptance threshold is missed.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Extrapolate {
    Error,
    Clip,
}

impl From<Extrapolate> for Extrapolation {
    fn from(e: Extrapolate) -> Self {
        match e {
            Extrapolate::Error => Extrapolation::Error,
            Extrapolate::Clip => Extrapolation::Clip,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lp,
    Qp,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at sampled parameters and write a sample CSV.
    Sample {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value = "uniform")]
        distribution: String,
        #[arg(long, default_value = "rule:first-found")]
        sampler: String,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Triangulate the parameters of a sample CSV.
    Triangulate {
        #[arg(long)]
        samples: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a piecewise linear policy to a sample CSV.
    Fit {
        #[arg(long)]
        samples: PathBuf,
        /// Recorded in the policy file.
        #[arg(long, default_value = "")]
        problem: String,
        #[command(flatten)]
        common: Common,
    },
    /// Measure a policy file against a problem.
    Evaluate {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        policy: PathBuf,
        /// Number of uniformly drawn test parameters.
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, value_enum, default_value = "error")]
        extrapolate: Extrapolate,
        #[command(flatten)]
        common: Common,
    },
    /// Refine a sampling grid level by level and measure the worst gaps.
    Converge {
        #[arg(long)]
        problem: String,
        /// `N` for 1..=N, `a:b`, or a comma list.
        #[arg(long, default_value = "5")]
        levels: String,
        #[arg(long, default_value = "rule:first-found")]
        sampler: String,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "error")]
        extrapolate: Extrapolate,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the fitted Example 1 policy with its closed form.
    Example1Golden {
        #[command(flatten)]
        common: Common,
    },
    /// Example 2 under arbitrary and fixed tie-breaking.
    Example2Counter {
        #[command(flatten)]
        common: Common,
    },
    /// Examples 2 and 3 under several samplers.
    StableSampler {
        #[arg(long, default_value = "5")]
        levels: String,
        #[command(flatten)]
        common: Common,
    },
    /// Feasibility ratio of trained networks as the margin grows.
    MarginSweep {
        #[arg(long, value_enum, default_value = "lp")]
        family: Family,
        /// Problem file or builtin; overrides `--family`.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value = "0:1:20")]
        t_grid: String,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value = "32,32")]
        hidden: String,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Train a network on a sample CSV or on a policy sampled over a grid.
    NnFit {
        #[arg(long, conflicts_with = "policy", required_unless_present = "policy")]
        samples: Option<PathBuf>,
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Grid points per axis when sampling a policy.
        #[arg(long, default_value_t = 201)]
        m: usize,
        #[arg(long, default_value = "32,32")]
        hidden: String,
        #[arg(long, default_value_t = 5000)]
        epochs: usize,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Error(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn check(enabled: bool, ok: bool, what: &str) -> Outcome {
    if enabled && !ok {
        return Err(Failure::Check(what.to_string()));
    }
    Ok(())
}

fn load_problem(source: &str) -> piecewise_policy::Result<ParametricProblem> {
    if Path::new(source).is_file() {
        ParametricProblem::load(source)
    } else {
        builtin(source)
    }
}

fn parse_levels(text: &str) -> piecewise_policy::Result<Vec<u32>> {
    let bad = || Error::InvalidArgument(format!("cannot read levels from `{text}`"));
    let levels: Vec<u32> = if let Some((a, b)) = text.split_once(':') {
        let (a, b): (u32, u32) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else if text.contains(',') {
        text.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<piecewise_policy::Result<_>>()?
    } else {
        (1..=text.parse::<u32>().map_err(|_| bad())?).collect()
    };
    if levels.is_empty() || levels.iter().any(|&l| l > 12) {
        return Err(Error::InvalidArgument(
            "levels must be between 0 and 12".into(),
        ));
    }
    Ok(levels)
}

fn parse_hidden(text: &str) -> piecewise_policy::Result<Vec<usize>> {
    text.split(',')
        .map(|v| {
            v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("hidden widths must be integers, got `{text}`"))
            })
        })
        .collect()
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Sample {
            problem,
            m,
            distribution,
            sampler,
            gamma,
            common,
        } => {
            if m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()).into());
            }
            let p = load_problem(&problem)?;
            let sampler = SamplerPolicy::parse(&sampler, common.seed)?;
            let thetas = draw_thetas(
                &p.theta_domain,
                ThetaDistribution::parse(&distribution)?,
                m,
                common.seed,
            );
            let set = collect_samples(&p, &thetas, &sampler, gamma, common.seed);
            std::fs::create_dir_all(&common.out).map_err(Error::from)?;
            write_samples_csv(
                &set.samples,
                File::create(common.out.join("samples.csv")).map_err(Error::from)?,
            )?;
            let sidecar = serde_json::json!({
                "problem": problem,
                "m": m,
                "distribution": distribution,
                "sampler": sampler,
                "gamma": gamma,
                "seed": common.seed,
                "rows": set.samples.len(),
                "failures": set.failures,
            });
            std::fs::write(
                common.out.join("samples.json"),
                serde_json::to_string_pretty(&sidecar).map_err(Error::from)?,
            )
            .map_err(Error::from)?;
            set.check_budget()?;
        }
        Command::Triangulate { samples, common } => {
            let s = read_samples_csv(File::open(samples).map_err(Error::from)?)?;
            let thetas: Vec<Vec<f64>> = s.into_iter().map(|s| s.theta).collect();
            let t = Triangulation::build(&thetas, common.seed)?;
            std::fs::create_dir_all(&common.out).map_err(Error::from)?;
            std::fs::write(common.out.join("triangulation.json"), t.to_json()?)
                .map_err(Error::from)?;
            let c = t.verify();
            check(
                common.check,
                c.passed() && t.coverage_failures(10_000, common.seed) == 0,
                "triangulation invariants",
            )?;
        }
        Command::Fit {
            samples,
            problem,
            common,
        } => {
            let s = read_samples_csv(File::open(samples).map_err(Error::from)?)?;
            let k = s.first().map_or(0, |s| s.theta.len());
            let policy =
                PiecewisePolicy::fit(&pairs(&s), k, common.seed)?.with_problem_ref(problem);
            std::fs::create_dir_all(&common.out).map_err(Error::from)?;
            policy.save(common.out.join("policy.json"))?;
        }
        Command::Evaluate {
            problem,
            policy,
            m,
            extrapolate,
            common,
        } => {
            let p = load_problem(&problem)?;
            let policy = PiecewisePolicy::load(policy)?;
            let thetas = draw_thetas(&p.theta_domain, ThetaDistribution::Uniform, m, common.seed);
            let report = evaluate_policy(&p, &policy.extrapolating(extrapolate.into()), &thetas);
            std::fs::create_dir_all(&common.out).map_err(Error::from)?;
            report.save(&common.out, "report")?;
            println!(
                "max infeasibility {:e}, max suboptimality {:e}, {} failures",
                report.infeas.max,
                report.subopt.max,
                report.failures.len()
            );
            check(
                common.check,
                report.failures.is_empty(),
                "all test parameters evaluated",
            )?;
        }
        Command::Converge {
            problem,
            levels,
            sampler,
            gamma,
            extrapolate,
            common,
        } => {
            let p = load_problem(&problem)?;
            let cfg = ConvergeConfig {
                levels: parse_levels(&levels)?,
                sampler: SamplerPolicy::parse(&sampler, common.seed)?,
                gamma,
                seed: common.seed,
                extrapolation: extrapolate.into(),
                ..ConvergeConfig::default()
            };
            let r = converge(&p, &problem, &cfg)?;
            r.save(&common.out, "converge")?;
            for row in &r.rows {
                println!(
                    "level {}: mesh {:.4e}, max infeas {:.3e}, max subopt {:.3e}",
                    row.level, row.mesh_norm, row.max_infeas, row.max_subopt
                );
            }
            let last = r.rows.last().unwrap();
            check(
                common.check,
                r.nonincreasing(1e-8) && last.max_subopt <= 1e-3 && last.max_infeas <= 1e-3,
                "nonincreasing curves ending at or below 1e-3",
            )?;
        }
        Command::Example1Golden { common } => {
            let r = example1_golden(
                1000,
                &[0.2, 0.1, 0.05, 0.025],
                &SamplerPolicy::arbitrary(common.seed),
            )?;
            r.save(&common.out, "example1_golden")?;
            println!("max deviation from closed form: {:e}", r.max_abs_diff);
            for row in &r.bound_rows {
                println!(
                    "delta {}: max subopt {:e} (bound {:e})",
                    row.delta, row.max_subopt, row.bound
                );
            }
            check(
                common.check,
                r.max_abs_diff <= 1e-9 && r.bounds_hold(1e-8),
                "closed form and mesh/4 bound",
            )?;
        }
        Command::Example2Counter { common } => {
            let r = example2_counter(common.seed, &[9, 17, 33, 65, 129])?;
            r.save(&common.out, "example2_counter")?;
            for row in &r.rows {
                println!(
                    "m {}: midpoint gap {} (arbitrary), max gap {:e} ({})",
                    row.m, row.midpoint_gap, row.fixed_rule_max_gap, r.fixed_rule
                );
            }
            let ok = r.rows.iter().all(|row| {
                (row.midpoint_gap - 1.0).abs() <= 1e-9 && row.fixed_rule_max_gap <= 1e-8
            });
            check(common.check, ok, "midpoint gap 1 and fixed-rule gap 0")?;
        }
        Command::StableSampler { levels, common } => {
            let r = stable_sampler(&parse_levels(&levels)?, common.seed)?;
            r.save(&common.out, "stable_sampler")?;
            for row in &r.rows {
                println!(
                    "{} {} level {}: max {:.3e}, away from 0 {:.3e}, {} bad simplices",
                    row.problem,
                    row.sampler,
                    row.level,
                    row.max_subopt,
                    row.max_subopt_away,
                    row.bad_simplices
                );
            }
            let ok = r
                .rows
                .iter()
                .filter(|row| row.problem == "example2" && row.sampler.starts_with("rule:"))
                .all(|row| row.max_subopt <= 1e-8);
            check(common.check, ok, "fixed rules optimal on example2")?;
        }
        Command::MarginSweep {
            family,
            problem,
            n,
            t_grid,
            m,
            hidden,
            epochs,
            common,
        } => {
            let (p, name) = match problem {
                Some(src) => (load_problem(&src)?, src),
                None => match family {
                    Family::Lp => (
                        generate_random_lp(n, n, common.seed)?,
                        format!("lp:{n}:{n}:{}", common.seed),
                    ),
                    Family::Qp => (
                        generate_random_qp(n, n, common.seed)?,
                        format!("qp:{n}:{n}:{}", common.seed),
                    ),
                },
            };
            let cfg = SweepConfig {
                t_values: parse_t_grid(&t_grid)?,
                m,
                test_m: 500,
                train: TrainConfig {
                    epochs,
                    hidden: parse_hidden(&hidden)?,
                    seed: common.seed,
                    ..TrainConfig::default()
                },
                seed: common.seed,
            };
            let r = margin_sweep(&p, &name, &cfg)?;
            r.save(&common.out, "margin_sweep")?;
            for row in &r.rows {
                println!("t {:.4}: {}% feasible", row.t, row.ratio);
            }
            check(
                common.check,
                r.smoothed_nondecreasing() && r.reaches_full(),
                "smoothed ratio nondecreasing and reaching 100%",
            )?;
        }
        Command::NnFit {
            samples,
            policy,
            m,
            hidden,
            epochs,
            common,
        } => {
            let pp = policy.map(PiecewisePolicy::load).transpose()?;
            let data = match (&samples, &pp) {
                (Some(path), _) => {
                    pairs(&read_samples_csv(File::open(path).map_err(Error::from)?)?)
                }
                (None, Some(pp)) => policy_grid_samples(pp, m),
                (None, None) => unreachable!("clap requires one of --samples and --policy"),
            };
            let cfg = NnFitConfig {
                train: TrainConfig {
                    epochs,
                    hidden: parse_hidden(&hidden)?,
                    seed: common.seed,
                    ..TrainConfig::default()
                },
                ..NnFitConfig::default()
            };
            let (model, r) = nn_fit(&data, pp.as_ref(), &cfg)?;
            std::fs::create_dir_all(&common.out).map_err(Error::from)?;
            model.save(common.out.join("model.json"))?;
            r.save(&common.out, "nn_fit")?;
            println!(
                "train mse {:e}, holdout mse {:?}, ge bound {}",
                r.train_mse, r.holdout_mse, r.ge_bound
            );
            check(
                common.check,
                r.holdout_mse.is_none_or(|v| v <= 1e-3),
                "holdout mse at or below 1e-3",
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(what)) => {
            eprintln!("check failed: {what}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::FailureBudget { .. }
                | Error::Infeasible
                | Error::MaxIterations(_)
                | Error::Divergence { .. } => EXIT_SOLVER,
                Error::Io(_) => 1,
                _ => EXIT_VALIDATION,
            };
            ExitCode::from(code)
        }
    }
}
