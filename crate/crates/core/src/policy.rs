//! Piecewise linear policies built by barycentric interpolation of sampled
//! solutions over a triangulation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::simplicial::{Locator, Triangulation};
use crate::solvers::project_onto_polyhedron;

/// Parameter points closer than this (max-norm) are treated as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// What to do with a query outside the hull of the samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Extrapolation {
    #[default]
    Error,
    /// Project θ onto the hull first.
    Clip,
}

/// Anything that maps a parameter to a decision.
pub trait Policy: Sync {
    fn predict(&self, theta: &[f64]) -> Result<Vec<f64>>;

    fn mesh_norm(&self) -> Option<f64> {
        None
    }

    fn sample_count(&self) -> usize {
        0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PiecewisePolicy {
    pub triangulation: Triangulation,
    pub solutions: Vec<Vec<f64>>,
    pub n: usize,
    pub problem_ref: String,
}

impl PiecewisePolicy {
    /// Triangulates the sample parameters and attaches their solutions.
    pub fn fit(samples: &[(Vec<f64>, Vec<f64>)], k: usize, seed: u64) -> Result<Self> {
        if samples.len() < k + 1 {
            return Err(Error::InvalidArgument(format!(
                "need at least {} samples for k = {k}, got {}",
                k + 1,
                samples.len()
            )));
        }
        let n = samples[0].1.len();
        let mut thetas: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
        let mut solutions = Vec::with_capacity(samples.len());
        for (i, (theta, x)) in samples.iter().enumerate() {
            check_dim("theta", k, theta.len())?;
            check_dim("solution", n, x.len())?;
            let dup = thetas.iter().position(|t| {
                t.iter()
                    .zip(theta)
                    .all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL)
            });
            if let Some(first) = dup {
                log::warn!("sample {i} repeats the parameter of sample {first}; keeping the first");
                continue;
            }
            thetas.push(theta.clone());
            solutions.push(x.clone());
        }
        let triangulation = Triangulation::build(&thetas, seed)?;
        Ok(PiecewisePolicy {
            triangulation,
            solutions,
            n,
            problem_ref: String::new(),
        })
    }

    pub fn with_problem_ref(mut self, problem_ref: impl Into<String>) -> Self {
        self.problem_ref = problem_ref.into();
        self
    }

    pub fn k(&self) -> usize {
        self.triangulation.k()
    }

    /// `x̂(θ)`; errors outside the hull.
    pub fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.evaluate_with(&mut Locator::default(), theta)
    }

    pub fn evaluate_with(&self, locator: &mut Locator, theta: &[f64]) -> Result<Vec<f64>> {
        let b = locator.locate(&self.triangulation, theta)?;
        Ok(self.combine(b.simplex_index, &b.lambdas))
    }

    /// Interpolates through a specific simplex, whether or not it contains θ.
    pub fn evaluate_in(&self, simplex: usize, theta: &[f64]) -> Result<Vec<f64>> {
        let lambdas = self
            .triangulation
            .barycentric_in(simplex, theta)?
            .ok_or(Error::DegenerateInput)?;
        Ok(self.combine(simplex, &lambdas))
    }

    fn combine(&self, simplex: usize, lambdas: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&v, &l) in self.triangulation.simplices()[simplex].iter().zip(lambdas) {
            for (xi, si) in x.iter_mut().zip(&self.solutions[v]) {
                *xi += l * si;
            }
        }
        x
    }

    /// Like [`evaluate`](Self::evaluate), but θ outside the hull is first
    /// moved to its nearest hull point.
    pub fn evaluate_clipped(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self.evaluate(theta) {
            Err(Error::OutsideHull) => {}
            other => return other,
        }
        let t = &self.triangulation;
        let projected = if t.k() == 1 {
            let (lo, hi) = t
                .vertices()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v[0]), hi.max(v[0]))
                });
            vec![theta[0].clamp(lo, hi)]
        } else {
            project_onto_polyhedron(&t.hull_halfspaces(), theta)?.0
        };
        match self.evaluate(&projected) {
            Err(Error::OutsideHull) => self.nearest_simplex_value(&projected),
            other => other,
        }
    }

    /// Fallback for points a hair outside every simplex after projection:
    /// the simplex whose smallest weight is largest, with weights clamped.
    fn nearest_simplex_value(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for j in 0..self.triangulation.len() {
            if let Some(l) = self.triangulation.barycentric_in(j, theta)? {
                let m = l.iter().copied().fold(f64::INFINITY, f64::min);
                if best.as_ref().is_none_or(|b| m > b.2) {
                    best = Some((j, l, m));
                }
            }
        }
        let (j, mut l, _) = best.ok_or(Error::OutsideHull)?;
        l.iter_mut().for_each(|v| *v = v.max(0.0));
        let s: f64 = l.iter().sum();
        l.iter_mut().for_each(|v| *v /= s);
        Ok(self.combine(j, &l))
    }

    pub fn extrapolating(&self, mode: Extrapolation) -> PolicyView<'_> {
        PolicyView { policy: self, mode }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: PiecewisePolicy = serde_json::from_str(text)?;
        check_dim(
            "solutions",
            p.triangulation.vertices().len(),
            p.solutions.len(),
        )?;
        for s in &p.solutions {
            check_dim("solution", p.n, s.len())?;
        }
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
}

impl Policy for PiecewisePolicy {
    fn predict(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(theta)
    }

    fn mesh_norm(&self) -> Option<f64> {
        Some(self.triangulation.mesh_norm())
    }

    fn sample_count(&self) -> usize {
        self.solutions.len()
    }
}

/// A policy paired with an extrapolation mode.
#[derive(Clone, Copy, Debug)]
pub struct PolicyView<'a> {
    policy: &'a PiecewisePolicy,
    mode: Extrapolation,
}

impl Policy for PolicyView<'_> {
    fn predict(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            Extrapolation::Error => self.policy.evaluate(theta),
            Extrapolation::Clip => self.policy.evaluate_clipped(theta),
        }
    }

    fn mesh_norm(&self) -> Option<f64> {
        self.policy.mesh_norm()
    }

    fn sample_count(&self) -> usize {
        self.policy.sample_count()
    }
}

/// Closed-form interpolant for the two-variable LP `min −θx₁ − x₂` over the
/// unit simplex, with neighbouring samples `θ_l ≤ 1 ≤ θ_r`.
pub fn closed_form_example1(theta: f64, theta_l: f64, theta_r: f64) -> Result<[f64; 2]> {
    if !((0.0..=1.0).contains(&theta_l) && (1.0..=2.0).contains(&theta_r)) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= theta_l <= 1 <= theta_r <= 2, got theta_l = {theta_l}, theta_r = {theta_r}"
        )));
    }
    if theta <= theta_l {
        Ok([0.0, 1.0])
    } else if theta >= theta_r {
        Ok([1.0, 0.0])
    } else {
        let w = theta_r - theta_l;
        Ok([(theta - theta_l) / w, (theta_r - theta) / w])
    }
}
