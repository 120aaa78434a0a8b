//! Training samples `(θ, x*(θ))`, parameter generators and the sample CSV
//! format `theta_0..,x_0..,objective,gamma_gap`.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{ParametricProblem, ThetaBox};
use crate::solvers::{solve, solve_gamma_relaxed, SamplerPolicy};

/// Largest tolerated share of failed solves in a sampling run.
pub const FAILURE_BUDGET: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub objective: f64,
    pub gamma_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaDistribution {
    /// Uniform over the problem's parameter box.
    Uniform,
    /// Standard normal in every coordinate.
    Normal,
    /// Regular grid over the parameter box, about `m` points.
    Grid,
}

impl ThetaDistribution {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "uniform" => Ok(Self::Uniform),
            "normal" => Ok(Self::Normal),
            "grid" => Ok(Self::Grid),
            other => Err(Error::InvalidArgument(format!(
                "distribution must be uniform, normal or grid, got `{other}`"
            ))),
        }
    }
}

/// `per_axis^k` grid points over `domain`, last coordinate varying fastest.
pub fn grid(domain: &ThetaBox, per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..domain.dim())
        .map(|d| {
            let (lo, hi) = (domain.lower[d], domain.upper[d]);
            if per_axis <= 1 {
                return vec![0.5 * (lo + hi)];
            }
            (0..per_axis)
                .map(|i| {
                    if i == per_axis - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (per_axis - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    cartesian(&axes)
}

/// Centers of the `cells^k` cells of a regular partition of `domain`.
pub fn cell_centers(domain: &ThetaBox, cells: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..domain.dim())
        .map(|d| {
            let (lo, hi) = (domain.lower[d], domain.upper[d]);
            (0..cells)
                .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / cells as f64)
                .collect()
        })
        .collect();
    cartesian(&axes)
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Draws `m` parameters (for [`ThetaDistribution::Grid`], the nearest grid
/// with at least two points per axis).
pub fn draw_thetas(
    domain: &ThetaBox,
    dist: ThetaDistribution,
    m: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let k = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        ThetaDistribution::Uniform => (0..m)
            .map(|_| {
                (0..k)
                    .map(|d| {
                        let (lo, hi) = (domain.lower[d], domain.upper[d]);
                        if hi > lo {
                            Uniform::new_inclusive(lo, hi).unwrap().sample(&mut rng)
                        } else {
                            lo
                        }
                    })
                    .collect()
            })
            .collect(),
        ThetaDistribution::Normal => {
            let normal = Normal::new(0.0, 1.0).unwrap();
            (0..m)
                .map(|_| (0..k).map(|_| normal.sample(&mut rng)).collect())
                .collect()
        }
        ThetaDistribution::Grid => {
            let per_axis = ((m as f64).powf(1.0 / k as f64) + 1e-9).floor().max(2.0) as usize;
            grid(domain, per_axis)
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    /// Parameters whose solve failed, with the reason.
    pub failures: Vec<(Vec<f64>, String)>,
}

impl SampleSet {
    pub fn pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        pairs(&self.samples)
    }

    /// Errors if more than 1% of solves failed.
    pub fn check_budget(&self) -> Result<()> {
        let total = self.samples.len() + self.failures.len();
        if self.failures.len() as f64 > FAILURE_BUDGET * total as f64 {
            return Err(Error::FailureBudget {
                failed: self.failures.len(),
                total,
            });
        }
        Ok(())
    }
}

pub fn pairs(samples: &[Sample]) -> Vec<(Vec<f64>, Vec<f64>)> {
    samples
        .iter()
        .map(|s| (s.theta.clone(), s.x.clone()))
        .collect()
}

/// Solves at every parameter; `gamma > 0` uses the γ-relaxed extractor.
/// Failed solves are recorded and skipped. Output order follows `thetas`.
pub fn collect_samples(
    p: &ParametricProblem,
    thetas: &[Vec<f64>],
    sampler: &SamplerPolicy,
    gamma: f64,
    seed: u64,
) -> SampleSet {
    let results: Vec<Result<Sample>> = thetas
        .par_iter()
        .map(|theta| {
            let r = if gamma > 0.0 {
                solve_gamma_relaxed(p, theta, gamma, seed)?
            } else {
                solve(p, theta, sampler)?.into_optimal()?
            };
            Ok(Sample {
                theta: theta.clone(),
                x: r.x,
                objective: r.objective,
                gamma_gap: r.gamma_gap,
            })
        })
        .collect();
    let mut set = SampleSet::default();
    for (theta, r) in thetas.iter().zip(results) {
        match r {
            Ok(s) => set.samples.push(s),
            Err(e) => {
                log::warn!("solve failed at theta = {theta:?}: {e}");
                set.failures.push((theta.clone(), e.to_string()));
            }
        }
    }
    set
}

pub fn write_samples_csv(samples: &[Sample], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = samples.first().map_or(0, |s| s.theta.len());
    let n = samples.first().map_or(0, |s| s.x.len());
    let mut header: Vec<String> = (0..k).map(|i| format!("theta_{i}")).collect();
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.push("objective".into());
    header.push("gamma_gap".into());
    w.write_record(&header)?;
    for s in samples {
        let row: Vec<String> = s
            .theta
            .iter()
            .chain(&s.x)
            .chain([&s.objective, &s.gamma_gap])
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv(input: impl Read) -> Result<Vec<Sample>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let k = header.iter().filter(|h| h.starts_with("theta_")).count();
    let n = header.iter().filter(|h| h.starts_with("x_")).count();
    let expected: Vec<String> = (0..k)
        .map(|i| format!("theta_{i}"))
        .chain((0..n).map(|i| format!("x_{i}")))
        .chain(["objective".to_string(), "gamma_gap".to_string()])
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidArgument(format!(
            "sample file header must be {}",
            expected.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let vals: Vec<f64> = record
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("not a number: `{v}`")))
            })
            .collect::<Result<_>>()?;
        out.push(Sample {
            theta: vals[..k].to_vec(),
            x: vals[k..k + n].to_vec(),
            objective: vals[k + n],
            gamma_gap: vals[k + n + 1],
        });
    }
    Ok(out)
}
