//! Exact and γ-relaxed solution extraction.
//!
//! Every solver returns exactly one point of the optimal set. When the
//! optimum is not unique the choice is delegated to a [`SamplerPolicy`]:
//! either a seeded arbitrary pick or a registered deterministic rule.
//! Callers only ever see the chosen point, never whether alternatives
//! existed.

pub mod qp;
pub mod simplex;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dot, mat_vec, norm2, to_dmatrix};
use crate::problems::{ParametricProblem, Polyhedron, ProblemData};

/// Feasibility tolerance for solver outputs.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Objective ties on finite sets.
pub const FINITE_TIE_TOL: f64 = 1e-12;
const DIRECTION_TRIES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// `|f(x, θ) − f*(θ)|`; zero for exact solves.
    pub gamma_gap: f64,
}

impl SolveResult {
    /// Turns a non-optimal termination into the matching error.
    pub fn into_optimal(self) -> Result<SolveResult> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible),
            SolveStatus::MaxIterations => Err(Error::MaxIterations(0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerMode {
    ArbitraryVertex,
    FixedRule,
}

/// Deterministic tie-breaking rules for [`SamplerMode::FixedRule`].
pub const RULES: &[&str] = &["always-lowest-point", "always-highest-point", "first-found"];

/// How to pick one point when the optimum is not unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerPolicy {
    pub mode: SamplerMode,
    pub rule_id: String,
    pub seed: u64,
}

impl SamplerPolicy {
    pub fn arbitrary(seed: u64) -> Self {
        SamplerPolicy {
            mode: SamplerMode::ArbitraryVertex,
            rule_id: String::new(),
            seed,
        }
    }

    pub fn rule(rule_id: &str) -> Result<Self> {
        if !RULES.contains(&rule_id) {
            return Err(Error::InvalidArgument(format!(
                "unknown sampler rule `{rule_id}`"
            )));
        }
        Ok(SamplerPolicy {
            mode: SamplerMode::FixedRule,
            rule_id: rule_id.to_string(),
            seed: 0,
        })
    }

    /// `arbitrary` or `rule:<id>`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        if text == "arbitrary" {
            Ok(Self::arbitrary(seed))
        } else if let Some(id) = text.strip_prefix("rule:") {
            Self::rule(id)
        } else {
            Err(Error::InvalidArgument(format!(
                "sampler must be `arbitrary` or `rule:<id>`, got `{text}`"
            )))
        }
    }

    fn pick<'a>(&self, candidates: &'a [Vec<f64>], theta: &[f64]) -> &'a [f64] {
        match self.mode {
            SamplerMode::ArbitraryVertex => {
                let mut rng = theta_rng(self.seed, theta);
                candidates.choose(&mut rng).expect("nonempty candidates")
            }
            SamplerMode::FixedRule => match self.rule_id.as_str() {
                "always-lowest-point" => candidates
                    .iter()
                    .min_by(|a, b| lex_cmp(a, b))
                    .expect("nonempty candidates"),
                "always-highest-point" => candidates
                    .iter()
                    .max_by(|a, b| lex_cmp(a, b))
                    .expect("nonempty candidates"),
                _ => &candidates[0],
            },
        }
    }
}

impl Default for SamplerPolicy {
    fn default() -> Self {
        Self::rule("first-found").unwrap()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// RNG stream determined by a seed and the exact bits of θ.
pub(crate) fn theta_rng(seed: u64, theta: &[f64]) -> ChaCha8Rng {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in theta {
        h ^= v.to_bits();
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn check_theta(p: &ParametricProblem, theta: &[f64]) -> Result<()> {
    check_dim("theta", p.k, theta.len())
}

/// Exact solve of any problem kind.
pub fn solve(p: &ParametricProblem, theta: &[f64], sampler: &SamplerPolicy) -> Result<SolveResult> {
    match p.data {
        ProblemData::LinearInequality(_) => solve_lp(p, theta, sampler),
        ProblemData::QuadraticInequality(_) => solve_qp(p, theta),
        ProblemData::FiniteSet(_) => solve_finite(p, theta, sampler),
    }
}

/// `f*(θ)` from a fresh exact solve.
pub fn optimal_value(p: &ParametricProblem, theta: &[f64]) -> Result<f64> {
    Ok(solve(p, theta, &SamplerPolicy::default())?
        .into_optimal()?
        .objective)
}

pub fn solve_lp(
    p: &ParametricProblem,
    theta: &[f64],
    sampler: &SamplerPolicy,
) -> Result<SolveResult> {
    if !matches!(p.data, ProblemData::LinearInequality(_)) {
        return Err(Error::InvalidArgument(
            "solve_lp needs a linear problem".into(),
        ));
    }
    check_theta(p, theta)?;
    let c = p.lp_cost(theta).unwrap();
    let poly = p.polyhedron(theta).unwrap();
    let run = simplex::solve(&c, &poly.rows, &poly.rhs);
    let sol = &run.solution;
    let status = match sol.outcome {
        simplex::LpOutcome::Optimal => SolveStatus::Optimal,
        simplex::LpOutcome::Infeasible => SolveStatus::Infeasible,
        simplex::LpOutcome::MaxIterations => SolveStatus::MaxIterations,
        simplex::LpOutcome::Unbounded => {
            return Err(Error::InvalidProblem(
                "linear program is unbounded; add a box bound".into(),
            ))
        }
    };
    if status != SolveStatus::Optimal {
        return Ok(SolveResult {
            x: sol.x.clone(),
            objective: sol.objective,
            status,
            gamma_gap: 0.0,
        });
    }
    let x = match run.optimal_face_vertices() {
        simplex::FaceVertices::Enumerated(vertices) => sampler.pick(&vertices, theta).to_vec(),
        simplex::FaceVertices::CapExceeded => {
            // random objective perturbation selects one vertex of the face
            let mut rng = theta_rng(sampler.seed, theta);
            let u = unit_direction(&mut rng, c.len());
            let c_hat: Vec<f64> = c.iter().zip(&u).map(|(a, b)| a + 1e-7 * b).collect();
            let rerun = simplex::solve(&c_hat, &poly.rows, &poly.rhs);
            if rerun.solution.outcome == simplex::LpOutcome::Optimal {
                rerun.solution.x
            } else {
                sol.x.clone()
            }
        }
    };
    let objective = dot(&c, &x);
    Ok(SolveResult {
        x,
        objective,
        status: SolveStatus::Optimal,
        gamma_gap: 0.0,
    })
}

pub fn solve_qp(p: &ParametricProblem, theta: &[f64]) -> Result<SolveResult> {
    let ProblemData::QuadraticInequality(d) = &p.data else {
        return Err(Error::InvalidArgument(
            "solve_qp needs a quadratic problem".into(),
        ));
    };
    check_theta(p, theta)?;
    let poly = p.polyhedron(theta).unwrap();
    let data = qp::QpData::from_inequalities(
        to_dmatrix(&d.p, p.n),
        DVector::from_column_slice(&d.q),
        &poly.rows,
        &poly.rhs,
    );
    let sol = qp::solve(&data);
    let x: Vec<f64> = sol.x.iter().copied().collect();
    let status = match sol.outcome {
        qp::QpOutcome::Optimal => SolveStatus::Optimal,
        qp::QpOutcome::MaxIterations => SolveStatus::MaxIterations,
        qp::QpOutcome::Infeasible => SolveStatus::Infeasible,
    };
    Ok(SolveResult {
        objective: data.objective(&sol.x),
        x,
        status,
        gamma_gap: 0.0,
    })
}

pub fn solve_finite(
    p: &ParametricProblem,
    theta: &[f64],
    sampler: &SamplerPolicy,
) -> Result<SolveResult> {
    let ProblemData::FiniteSet(d) = &p.data else {
        return Err(Error::InvalidArgument(
            "solve_finite needs a finite-set problem".into(),
        ));
    };
    check_theta(p, theta)?;
    let values: Vec<f64> = d
        .points
        .iter()
        .map(|x| p.evaluate_objective(x, theta))
        .collect::<Result<_>>()?;
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let ties: Vec<Vec<f64>> = d
        .points
        .iter()
        .zip(&values)
        .filter(|(_, v)| (*v - best).abs() <= FINITE_TIE_TOL)
        .map(|(x, _)| x.clone())
        .collect();
    let x = sampler.pick(&ties, theta).to_vec();
    let objective = p.evaluate_objective(&x, theta)?;
    Ok(SolveResult {
        x,
        objective,
        status: SolveStatus::Optimal,
        gamma_gap: 0.0,
    })
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nd = norm2(&d);
        if nd > 1e-12 {
            return d.into_iter().map(|v| v / nd).collect();
        }
    }
}

/// Largest `s ≥ 0` with `rows·(x + s d) ≤ rhs`.
fn max_feasible_step(poly: &Polyhedron, x: &[f64], d: &[f64]) -> f64 {
    poly.rows
        .iter()
        .zip(&poly.rhs)
        .filter_map(|(r, b)| {
            let rd = dot(r, d);
            (rd > 1e-12).then(|| ((b - dot(r, x)).max(0.0)) / rd)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Returns a feasible point whose objective is within `gamma` of `f*(θ)`.
///
/// The exact optimum is moved along a seeded random direction by a random
/// fraction of the longest step that keeps feasibility and the γ bound. On
/// finite sets a random point of the γ-suboptimal subset is drawn.
pub fn solve_gamma_relaxed(
    p: &ParametricProblem,
    theta: &[f64],
    gamma: f64,
    seed: u64,
) -> Result<SolveResult> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    let sampler = SamplerPolicy::arbitrary(seed);
    let exact = solve(p, theta, &sampler)?.into_optimal()?;
    if gamma == 0.0 {
        return Ok(exact);
    }
    let f_star = exact.objective;
    let mut rng = theta_rng(seed.wrapping_add(0x5bd1_e995), theta);

    if let ProblemData::FiniteSet(d) = &p.data {
        let mut pool = Vec::new();
        for x in &d.points {
            if (p.evaluate_objective(x, theta)? - f_star).abs() <= gamma {
                pool.push(x.clone());
            }
        }
        let x = pool.choose(&mut rng).cloned().unwrap_or(exact.x);
        let objective = p.evaluate_objective(&x, theta)?;
        return Ok(SolveResult {
            x,
            objective,
            status: SolveStatus::Optimal,
            gamma_gap: (objective - f_star).abs(),
        });
    }

    let poly = p.polyhedron(theta).unwrap();
    let xs = &exact.x;
    // objective along the ray: f(x* + s d) − f* = b s + ½ a s²
    let (grad, hess): (Vec<f64>, Option<&Vec<Vec<f64>>>) = match &p.data {
        ProblemData::LinearInequality(_) => (p.lp_cost(theta).unwrap(), None),
        ProblemData::QuadraticInequality(d) => (
            mat_vec(&d.p, xs)
                .iter()
                .zip(&d.q)
                .map(|(a, b)| a + b)
                .collect(),
            Some(&d.p),
        ),
        ProblemData::FiniteSet(_) => unreachable!(),
    };
    for _ in 0..DIRECTION_TRIES {
        let d = unit_direction(&mut rng, p.n);
        let s_feas = max_feasible_step(&poly, xs, &d);
        if !(s_feas > 1e-12) {
            continue;
        }
        let b = dot(&grad, &d);
        let a = hess.map_or(0.0, |h| dot(&d, &mat_vec(h, &d)));
        let s_gamma = if a > 0.0 {
            (-b + (b * b + 2.0 * a * gamma).sqrt()) / a
        } else if b.abs() > 0.0 {
            gamma / b.abs()
        } else {
            f64::INFINITY
        };
        let s_max = s_feas.min(s_gamma);
        if !s_max.is_finite() || s_max <= 1e-12 {
            continue;
        }
        let mut s = rng.random_range(0.0..1.0) * s_max;
        for _ in 0..30 {
            let x: Vec<f64> = xs.iter().zip(&d).map(|(x, d)| x + s * d).collect();
            let objective = p.evaluate_objective(&x, theta)?;
            let gap = (objective - f_star).abs();
            if poly.residual(&x) <= 0.0 && gap <= gamma {
                return Ok(SolveResult {
                    x,
                    objective,
                    status: SolveStatus::Optimal,
                    gamma_gap: gap,
                });
            }
            s *= 0.5;
        }
    }
    Ok(exact)
}

/// Euclidean projection of `x` onto `C(θ)`; returns the projection and the
/// distance.
pub fn project_to_feasible(
    p: &ParametricProblem,
    theta: &[f64],
    x: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_dim("x", p.n, x.len())?;
    check_theta(p, theta)?;
    if let ProblemData::FiniteSet(d) = &p.data {
        let y = d
            .points
            .iter()
            .min_by(|a, b| dist2(a, x).total_cmp(&dist2(b, x)))
            .expect("nonempty finite set")
            .clone();
        let dist = dist2(&y, x);
        return Ok((y, dist));
    }
    let poly = p.polyhedron(theta).unwrap();
    project_onto_polyhedron(&poly, x)
}

/// Projection onto `{y : rows·y ≤ rhs}` via the QP `min ½‖y‖² − xᵀy`.
pub fn project_onto_polyhedron(poly: &Polyhedron, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if poly.residual(x) <= 0.0 {
        return Ok((x.to_vec(), 0.0));
    }
    let n = x.len();
    let data = qp::QpData::from_inequalities(
        DMatrix::identity(n, n),
        -DVector::from_column_slice(x),
        &poly.rows,
        &poly.rhs,
    );
    let sol = qp::solve(&data);
    match sol.outcome {
        qp::QpOutcome::Optimal => {}
        qp::QpOutcome::Infeasible => return Err(Error::Infeasible),
        qp::QpOutcome::MaxIterations => return Err(Error::MaxIterations(sol.iterations)),
    }
    let y: Vec<f64> = sol.x.iter().copied().collect();
    let dist = dist2(&y, x);
    Ok((y, dist))
}
