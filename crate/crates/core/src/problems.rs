//! Parametric optimization problems `min_x f(x, θ) s.t. x ∈ C(θ)`.
//!
//! Three families are supported:
//!
//! - [`LinearInequalityData`]: `min c(θ)ᵀx  s.t.  A x ≤ b(θ) − t·1`
//! - [`QuadraticInequalityData`]: `min ½xᵀPx + qᵀx  s.t.  G x ≤ b(θ) − t·1`
//! - [`FiniteSetData`]: a fixed finite feasible set with a named objective.
//!
//! The right-hand side `b(θ)` is affine in θ and the constraint matrix is
//! fixed. Generated instances also carry a box `‖x‖∞ ≤ M` so every feasible
//! set is compact, plus the interior point that certifies nonemptiness over
//! the whole parameter box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dot, identity, is_rectangular, mat_vec, Matrix};

/// Box bound `M` appended to generated instances.
pub const GENERATED_BOX_BOUND: f64 = 1e3;
/// Required slack of the certificate point against the tightest corner of Θ.
pub const CERTIFICATE_SLACK: f64 = 0.1;
const MAX_GENERATOR_ATTEMPTS: usize = 1000;

/// Axis-aligned parameter box Θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ThetaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = ThetaBox { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// `[lo, hi]^k`.
    pub fn cube(k: usize, lo: f64, hi: f64) -> Self {
        ThetaBox {
            lower: vec![lo; k],
            upper: vec![hi; k],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| *t >= *lo && *t <= *hi)
    }

    pub fn max_side(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(0.0, |m, (lo, hi)| m.max(hi - lo))
    }

    fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::InvalidProblem(
                "theta_domain bounds must be nonempty and of equal length".into(),
            ));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(lo, hi)| !(hi - lo > 0.0) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::InvalidProblem(
                "theta_domain must have strictly positive finite side lengths".into(),
            ));
        }
        Ok(())
    }
}

/// `b(θ) = offset + matrix · θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineRhs {
    pub offset: Vec<f64>,
    pub matrix: Matrix,
}

impl AffineRhs {
    /// `b(θ) = θ`, so the parameter is the right-hand side itself.
    pub fn identity(m: usize) -> Self {
        AffineRhs {
            offset: vec![0.0; m],
            matrix: identity(m),
        }
    }

    /// Parameter-independent right-hand side.
    pub fn constant(offset: Vec<f64>, k: usize) -> Self {
        let m = offset.len();
        AffineRhs {
            offset,
            matrix: vec![vec![0.0; k]; m],
        }
    }

    pub fn rows(&self) -> usize {
        self.offset.len()
    }

    pub fn eval(&self, theta: &[f64]) -> Vec<f64> {
        self.offset
            .iter()
            .zip(mat_vec(&self.matrix, theta))
            .map(|(o, v)| o + v)
            .collect()
    }

    /// Componentwise minimum of `b(θ)` over the corners of `domain`.
    pub fn min_over_box(&self, domain: &ThetaBox) -> Vec<f64> {
        self.offset
            .iter()
            .zip(&self.matrix)
            .map(|(o, row)| {
                o + row
                    .iter()
                    .zip(domain.lower.iter().zip(&domain.upper))
                    .map(|(a, (lo, hi))| (a * lo).min(a * hi))
                    .sum::<f64>()
            })
            .collect()
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.matrix.len() != self.offset.len() || !is_rectangular(&self.matrix, k) {
            return Err(Error::InvalidProblem(format!(
                "rhs map must be {}x{k}",
                self.offset.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearInequalityData {
    pub c: Vec<f64>,
    /// Optional `n×k` matrix `D` making the cost parametric: `c(θ) = c + Dθ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_theta: Option<Matrix>,
    pub a: Matrix,
    pub rhs: AffineRhs,
    #[serde(default)]
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_point: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticInequalityData {
    pub p: Matrix,
    pub q: Vec<f64>,
    pub g: Matrix,
    pub rhs: AffineRhs,
    #[serde(default)]
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_point: Option<Vec<f64>>,
}

/// Closed registry of objectives for finite feasible sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedObjective {
    /// `(x−1)²(x−3)²`
    #[serde(rename = "example2")]
    Example2,
    /// `(x−1)²(x−3)² − θ(x−3)`
    #[serde(rename = "example3")]
    Example3,
    /// `−θx₁ − x₂`
    #[serde(rename = "example1_lp")]
    Example1Lp,
}

impl NamedObjective {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "example2" => Ok(NamedObjective::Example2),
            "example3" => Ok(NamedObjective::Example3),
            "example1_lp" => Ok(NamedObjective::Example1Lp),
            other => Err(Error::InvalidProblem(format!(
                "unknown objective `{other}`"
            ))),
        }
    }

    fn dims(self) -> (usize, Option<usize>) {
        match self {
            NamedObjective::Example2 => (1, None),
            NamedObjective::Example3 => (1, Some(1)),
            NamedObjective::Example1Lp => (2, Some(1)),
        }
    }

    fn eval(self, x: &[f64], theta: &[f64]) -> f64 {
        match self {
            NamedObjective::Example2 => {
                let v = x[0];
                (v - 1.0).powi(2) * (v - 3.0).powi(2)
            }
            NamedObjective::Example3 => {
                let v = x[0];
                (v - 1.0).powi(2) * (v - 3.0).powi(2) - theta[0] * (v - 3.0)
            }
            NamedObjective::Example1Lp => -theta[0] * x[0] - x[1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSetData {
    pub points: Vec<Vec<f64>>,
    pub objective: NamedObjective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum ProblemData {
    LinearInequality(LinearInequalityData),
    QuadraticInequality(QuadraticInequalityData),
    FiniteSet(FiniteSetData),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    LinearInequality,
    QuadraticInequality,
    FiniteSet,
}

/// A parametric problem with decision dimension `n` and parameter dimension `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricProblem {
    #[serde(flatten)]
    pub data: ProblemData,
    pub n: usize,
    pub k: usize,
    pub theta_domain: ThetaBox,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Inequality constraints `rows · x ≤ rhs` at a fixed θ, box rows included.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    pub rows: Matrix,
    pub rhs: Vec<f64>,
}

impl Polyhedron {
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .fold(0.0f64, |m, (r, b)| m.max(dot(r, x) - b))
    }
}

impl ParametricProblem {
    pub fn new(data: ProblemData, n: usize, k: usize, theta_domain: ThetaBox) -> Result<Self> {
        let p = ParametricProblem {
            data,
            n,
            k,
            theta_domain,
            seed: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> ProblemKind {
        match self.data {
            ProblemData::LinearInequality(_) => ProblemKind::LinearInequality,
            ProblemData::QuadraticInequality(_) => ProblemKind::QuadraticInequality,
            ProblemData::FiniteSet(_) => ProblemKind::FiniteSet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if n == 0 || k == 0 {
            return Err(Error::InvalidProblem("n and k must be at least 1".into()));
        }
        self.theta_domain.validate()?;
        check_dim("theta_domain", k, self.theta_domain.dim())?;
        match &self.data {
            ProblemData::LinearInequality(d) => {
                check_dim("c", n, d.c.len())?;
                if let Some(dm) = &d.cost_theta {
                    if dm.len() != n || !is_rectangular(dm, k) {
                        return Err(Error::InvalidProblem(format!("cost_theta must be {n}x{k}")));
                    }
                }
                validate_inequalities(&d.a, &d.rhs, n, k, d.t, d.bound)?;
            }
            ProblemData::QuadraticInequality(d) => {
                check_dim("q", n, d.q.len())?;
                if d.p.len() != n || !is_rectangular(&d.p, n) {
                    return Err(Error::InvalidProblem(format!("P must be {n}x{n}")));
                }
                for i in 0..n {
                    for j in 0..i {
                        if (d.p[i][j] - d.p[j][i]).abs() > 1e-12 * (1.0 + d.p[i][j].abs()) {
                            return Err(Error::InvalidProblem("P must be symmetric".into()));
                        }
                    }
                }
                let eig = crate::linalg::to_dmatrix(&d.p, n).symmetric_eigenvalues();
                if eig.iter().any(|&e| e < -1e-10) {
                    return Err(Error::InvalidProblem(
                        "P must be positive semidefinite".into(),
                    ));
                }
                validate_inequalities(&d.g, &d.rhs, n, k, d.t, d.bound)?;
            }
            ProblemData::FiniteSet(d) => {
                if d.points.is_empty() {
                    return Err(Error::InvalidProblem("finite set must be nonempty".into()));
                }
                if d.points.iter().any(|p| p.len() != n) {
                    return Err(Error::InvalidProblem(format!(
                        "finite set points must have length {n}"
                    )));
                }
                let (on, ok) = d.objective.dims();
                if on != n || ok.is_some_and(|kk| kk != k) {
                    return Err(Error::InvalidProblem(format!(
                        "objective {:?} does not accept n={n}, k={k}",
                        d.objective
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ParametricProblem = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Margin `t` of inequality problems (0 for finite sets).
    pub fn margin(&self) -> f64 {
        match &self.data {
            ProblemData::LinearInequality(d) => d.t,
            ProblemData::QuadraticInequality(d) => d.t,
            ProblemData::FiniteSet(_) => 0.0,
        }
    }

    /// Copy of this problem with the right-hand side tightened by `t`.
    pub fn with_margin(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "margin must be >= 0, got {t}"
            )));
        }
        let mut p = self.clone();
        match &mut p.data {
            ProblemData::LinearInequality(d) => d.t = t,
            ProblemData::QuadraticInequality(d) => d.t = t,
            ProblemData::FiniteSet(_) => {
                return Err(Error::InvalidArgument(
                    "finite-set problems have no margin".into(),
                ))
            }
        }
        Ok(p)
    }

    pub fn with_theta_domain(&self, domain: ThetaBox) -> Result<Self> {
        let mut p = self.clone();
        p.theta_domain = domain;
        p.validate()?;
        Ok(p)
    }

    fn check_point(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        check_dim("x", self.n, x.len())?;
        check_dim("theta", self.k, theta.len())
    }

    /// Cost vector `c(θ)` of a linear problem.
    pub fn lp_cost(&self, theta: &[f64]) -> Option<Vec<f64>> {
        match &self.data {
            ProblemData::LinearInequality(d) => Some(match &d.cost_theta {
                Some(dm) => {
                    d.c.iter()
                        .zip(mat_vec(dm, theta))
                        .map(|(c, v)| c + v)
                        .collect()
                }
                None => d.c.clone(),
            }),
            _ => None,
        }
    }

    /// Constraint rows at θ (including box rows), or `None` for finite sets.
    pub fn polyhedron(&self, theta: &[f64]) -> Option<Polyhedron> {
        let (a, rhs, t, bound) = match &self.data {
            ProblemData::LinearInequality(d) => (&d.a, &d.rhs, d.t, d.bound),
            ProblemData::QuadraticInequality(d) => (&d.g, &d.rhs, d.t, d.bound),
            ProblemData::FiniteSet(_) => return None,
        };
        let mut rows = a.clone();
        let mut b: Vec<f64> = rhs.eval(theta).into_iter().map(|v| v - t).collect();
        if let Some(m) = bound {
            for i in 0..self.n {
                let mut e = vec![0.0; self.n];
                e[i] = 1.0;
                rows.push(e.clone());
                b.push(m);
                e[i] = -1.0;
                rows.push(e);
                b.push(m);
            }
        }
        Some(Polyhedron { rows, rhs: b })
    }

    /// `f(x, θ)`; defined for infeasible `x` as well.
    pub fn evaluate_objective(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_point(x, theta)?;
        Ok(match &self.data {
            ProblemData::LinearInequality(_) => dot(&self.lp_cost(theta).unwrap(), x),
            ProblemData::QuadraticInequality(d) => 0.5 * dot(x, &mat_vec(&d.p, x)) + dot(&d.q, x),
            ProblemData::FiniteSet(d) => d.objective.eval(x, theta),
        })
    }

    /// Max constraint violation for inequality problems; distance to the
    /// nearest listed point for finite sets. Zero iff `x ∈ C(θ)`.
    pub fn feasibility_residual(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_point(x, theta)?;
        Ok(match &self.data {
            ProblemData::FiniteSet(d) => d
                .points
                .iter()
                .map(|p| dist2(p, x))
                .fold(f64::INFINITY, f64::min),
            _ => self.polyhedron(theta).unwrap().residual(x),
        })
    }

    /// Certificate point for generated instances.
    pub fn interior_point(&self) -> Option<&[f64]> {
        match &self.data {
            ProblemData::LinearInequality(d) => d.interior_point.as_deref(),
            ProblemData::QuadraticInequality(d) => d.interior_point.as_deref(),
            ProblemData::FiniteSet(_) => None,
        }
    }
}

fn validate_inequalities(
    a: &Matrix,
    rhs: &AffineRhs,
    n: usize,
    k: usize,
    t: f64,
    bound: Option<f64>,
) -> Result<()> {
    if !is_rectangular(a, n) {
        return Err(Error::InvalidProblem(format!(
            "constraint matrix must have {n} columns"
        )));
    }
    check_dim("rhs rows", a.len(), rhs.rows())?;
    rhs.validate(k)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidProblem("margin t must be >= 0".into()));
    }
    if let Some(m) = bound {
        if !(m > 0.0) {
            return Err(Error::InvalidProblem("box bound must be positive".into()));
        }
    }
    Ok(())
}

/// `min −θx₁ − x₂  s.t.  x₁ + x₂ ≤ 1, x ≥ 0`, θ ∈ [0, 2].
pub fn example1() -> ParametricProblem {
    let data = LinearInequalityData {
        c: vec![0.0, -1.0],
        cost_theta: Some(vec![vec![-1.0], vec![0.0]]),
        a: vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
        rhs: AffineRhs::constant(vec![1.0, 0.0, 0.0], 1),
        t: 0.0,
        bound: None,
        interior_point: Some(vec![0.25, 0.25]),
    };
    ParametricProblem::new(
        ProblemData::LinearInequality(data),
        2,
        1,
        ThetaBox::cube(1, 0.0, 2.0),
    )
    .expect("example1 is well formed")
}

/// `min (x−1)²(x−3)²  s.t.  x ∈ {1, 3}`.
pub fn example2() -> ParametricProblem {
    finite_example(NamedObjective::Example2)
}

/// `min (x−1)²(x−3)² − θ(x−3)  s.t.  x ∈ {1, 3}`.
pub fn example3() -> ParametricProblem {
    finite_example(NamedObjective::Example3)
}

fn finite_example(objective: NamedObjective) -> ParametricProblem {
    let data = FiniteSetData {
        points: vec![vec![1.0], vec![3.0]],
        objective,
    };
    ParametricProblem::new(
        ProblemData::FiniteSet(data),
        1,
        1,
        ThetaBox::cube(1, -1.0, 1.0),
    )
    .expect("finite example is well formed")
}

/// Resolves `example1`, `example2`, `example3`, `lp:<n>:<m>:<seed>` or
/// `qp:<n>:<m>:<seed>`.
pub fn builtin(name: &str) -> Result<ParametricProblem> {
    match name {
        "example1" => return Ok(example1()),
        "example2" => return Ok(example2()),
        "example3" => return Ok(example3()),
        _ => {}
    }
    let parts: Vec<&str> = name.split(':').collect();
    if parts.len() == 4 && (parts[0] == "lp" || parts[0] == "qp") {
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("malformed builtin name `{name}`")))
        };
        let (n, m, seed) = (parse(parts[1])?, parse(parts[2])?, parse(parts[3])?);
        return if parts[0] == "lp" {
            generate_random_lp(n as usize, m as usize, seed)
        } else {
            generate_random_qp(n as usize, m as usize, seed)
        };
    }
    Err(Error::InvalidArgument(format!(
        "unknown builtin problem `{name}`"
    )))
}

/// Default parameter box of generated instances.
pub fn default_generated_domain(k: usize) -> ThetaBox {
    ThetaBox::cube(k, -1.0, 1.0)
}

pub fn generate_random_lp(n: usize, m_c: usize, seed: u64) -> Result<ParametricProblem> {
    generate_random_lp_in(n, m_c, seed, default_generated_domain(m_c))
}

pub fn generate_random_qp(n: usize, m_c: usize, seed: u64) -> Result<ParametricProblem> {
    generate_random_qp_in(n, m_c, seed, default_generated_domain(m_c))
}

/// Random LP `min cᵀx s.t. Ax ≤ θ`, bounded for every θ because
/// `c = −Aᵀy` with `y > 0`.
pub fn generate_random_lp_in(
    n: usize,
    m_c: usize,
    seed: u64,
    domain: ThetaBox,
) -> Result<ParametricProblem> {
    check_generator_dims(n, m_c, &domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, x0) = certified_constraints(&mut rng, n, m_c, &domain)?;
    let y: Vec<f64> = (0..m_c).map(|_| rng.random_range(0.5..1.5)).collect();
    let c: Vec<f64> = crate::linalg::mat_t_vec(&a, &y, n)
        .into_iter()
        .map(|v| -v)
        .collect();
    let data = LinearInequalityData {
        c,
        cost_theta: None,
        a,
        rhs: AffineRhs::identity(m_c),
        t: 0.0,
        bound: Some(GENERATED_BOX_BOUND),
        interior_point: Some(x0),
    };
    let mut p = ParametricProblem::new(ProblemData::LinearInequality(data), n, m_c, domain)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Random strictly convex QP `min ½xᵀPx + qᵀx s.t. Gx ≤ θ` with
/// `P = MᵀM + 1e−3·I`.
pub fn generate_random_qp_in(
    n: usize,
    m_c: usize,
    seed: u64,
    domain: ThetaBox,
) -> Result<ParametricProblem> {
    check_generator_dims(n, m_c, &domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: Matrix = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|r| m[r][i] * m[r][j]).sum();
            p[i][j] = v;
            p[j][i] = v;
        }
        p[i][i] += 1e-3;
    }
    let q: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let (g, x0) = certified_constraints(&mut rng, n, m_c, &domain)?;
    let data = QuadraticInequalityData {
        p,
        q,
        g,
        rhs: AffineRhs::identity(m_c),
        t: 0.0,
        bound: Some(GENERATED_BOX_BOUND),
        interior_point: Some(x0),
    };
    let mut prob = ParametricProblem::new(ProblemData::QuadraticInequality(data), n, m_c, domain)?;
    prob.seed = Some(seed);
    Ok(prob)
}

fn check_generator_dims(n: usize, m_c: usize, domain: &ThetaBox) -> Result<()> {
    if n == 0 || m_c == 0 {
        return Err(Error::InvalidArgument(
            "n and m_c must be at least 1".into(),
        ));
    }
    check_dim("theta_domain", m_c, domain.dim())
}

/// Draws a Gaussian constraint matrix together with a point `x₀` such that
/// `A x₀ ≤ min_{θ∈Θ} θ − slack` row-wise and `‖x₀‖∞ ≤ M/2`.
fn certified_constraints(
    rng: &mut ChaCha8Rng,
    n: usize,
    m_c: usize,
    domain: &ThetaBox,
) -> Result<(Matrix, Vec<f64>)> {
    let rhs = AffineRhs::identity(m_c);
    let floor = rhs.min_over_box(domain);
    for _ in 0..MAX_GENERATOR_ATTEMPTS {
        let mut a: Matrix = (0..m_c)
            .map(|_| {
                (0..n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let mut d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let dn = crate::linalg::norm2(&d);
        d.iter_mut().for_each(|v| *v /= dn);
        let mut ok = true;
        let mut scale: f64 = 0.0;
        for (row, lo) in a.iter_mut().zip(&floor) {
            let s = dot(row, &d);
            if s.abs() < 0.1 {
                ok = false;
                break;
            }
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            // need alpha * (-|s|) <= lo - 2*slack
            scale = scale.max((2.0 * CERTIFICATE_SLACK - lo) / s.abs());
        }
        if !ok {
            continue;
        }
        let x0: Vec<f64> = d.iter().map(|v| v * scale).collect();
        if crate::linalg::norm_inf(&x0) > GENERATED_BOX_BOUND / 2.0 {
            continue;
        }
        let certified = a
            .iter()
            .zip(&floor)
            .all(|(row, lo)| dot(row, &x0) <= lo - CERTIFICATE_SLACK);
        if certified {
            return Ok((a, x0));
        }
    }
    Err(Error::InvalidProblem(
        "could not certify feasibility after 1000 attempts".into(),
    ))
}
