//! Feasibility and optimality gaps of a policy, the feasibility ratio used in
//! margin sweeps, and the norm-based generalization bound.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::policy::Policy;
use crate::problems::ParametricProblem;
use crate::solvers::{optimal_value, project_to_feasible, FEASIBILITY_TOL};

/// Distance from `x` to `C(θ)`. Zero whenever the constraint residual is
/// within [`FEASIBILITY_TOL`].
pub fn infeasibility(p: &ParametricProblem, theta: &[f64], x: &[f64]) -> Result<f64> {
    if p.feasibility_residual(x, theta)? <= FEASIBILITY_TOL {
        return Ok(0.0);
    }
    Ok(project_to_feasible(p, theta, x)?.1)
}

/// `|f(x, θ) − f*(θ)|` against a fresh exact solve.
pub fn suboptimality(p: &ParametricProblem, theta: &[f64], x: &[f64]) -> Result<f64> {
    check_dim("x", p.n, x.len())?;
    let f = p.evaluate_objective(x, theta)?;
    Ok((f - optimal_value(p, theta)?).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaRecord {
    pub theta: Vec<f64>,
    pub xhat: Vec<f64>,
    pub infeas_dist: f64,
    pub subopt_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub max: f64,
    pub mean: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

impl Aggregate {
    /// Summary of `values` in the given order; quantiles by nearest rank.
    pub fn of(values: &[f64]) -> Aggregate {
        if values.is_empty() {
            return Aggregate {
                max: f64::NAN,
                mean: f64::NAN,
                q50: f64::NAN,
                q90: f64::NAN,
                q99: f64::NAN,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let rank = (p * sorted.len() as f64).ceil() as usize;
            sorted[rank.clamp(1, sorted.len()) - 1]
        };
        Aggregate {
            max: sorted[sorted.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q50: q(0.5),
            q90: q(0.9),
            q99: q(0.99),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFailure {
    pub index: usize,
    pub theta: Vec<f64>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub records: Vec<ThetaRecord>,
    pub failures: Vec<EvaluationFailure>,
    pub infeas: Aggregate,
    pub subopt: Aggregate,
    pub mesh_norm: Option<f64>,
    pub m: usize,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    infeas: &'a Aggregate,
    subopt: &'a Aggregate,
    mesh_norm: Option<f64>,
    m: usize,
    evaluated: usize,
    failure_count: usize,
    failures: &'a [EvaluationFailure],
}

impl PolicyReport {
    pub fn max_infeas(&self) -> f64 {
        self.infeas.max
    }

    pub fn max_subopt(&self) -> f64 {
        self.subopt.max
    }

    /// CSV with columns `theta_*, xhat_*, infeas_dist, subopt_gap`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let k = self.records.first().map_or(0, |r| r.theta.len());
        let n = self.records.first().map_or(0, |r| r.xhat.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..k).map(|i| format!("theta_{i}")).collect();
        header.extend((0..n).map(|i| format!("xhat_{i}")));
        header.push("infeas_dist".into());
        header.push("subopt_gap".into());
        w.write_record(&header)?;
        for r in &self.records {
            let row: Vec<String> = r
                .theta
                .iter()
                .chain(&r.xhat)
                .chain([&r.infeas_dist, &r.subopt_gap])
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Sidecar {
            infeas: &self.infeas,
            subopt: &self.subopt,
            mesh_norm: self.mesh_norm,
            m: self.m,
            evaluated: self.records.len(),
            failure_count: self.failures.len(),
            failures: &self.failures,
        })?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.sidecar_json()?)?;
        Ok(())
    }
}

/// Measures a policy at every test parameter. Per-θ work runs in parallel;
/// results and aggregates follow the input order.
pub fn evaluate_policy(
    p: &ParametricProblem,
    policy: &dyn Policy,
    test_thetas: &[Vec<f64>],
) -> PolicyReport {
    let outcomes: Vec<Result<ThetaRecord>> = test_thetas
        .par_iter()
        .map(|theta| {
            let xhat = policy.predict(theta)?;
            let infeas_dist = infeasibility(p, theta, &xhat)?;
            let subopt_gap = suboptimality(p, theta, &xhat)?;
            Ok(ThetaRecord {
                theta: theta.clone(),
                xhat,
                infeas_dist,
                subopt_gap,
            })
        })
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (index, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => records.push(r),
            Err(e) => failures.push(EvaluationFailure {
                index,
                theta: test_thetas[index].clone(),
                message: e.to_string(),
            }),
        }
    }
    let inf: Vec<f64> = records.iter().map(|r| r.infeas_dist).collect();
    let sub: Vec<f64> = records.iter().map(|r| r.subopt_gap).collect();
    PolicyReport {
        infeas: Aggregate::of(&inf),
        subopt: Aggregate::of(&sub),
        records,
        failures,
        mesh_norm: policy.mesh_norm(),
        m: policy.sample_count(),
    }
}

/// Percentage of test parameters at which the policy output satisfies the
/// original constraints to within [`FEASIBILITY_TOL`]. Failed predictions
/// count as infeasible.
pub fn feasibility_ratio(
    p_original: &ParametricProblem,
    policy: &dyn Policy,
    test_thetas: &[Vec<f64>],
) -> f64 {
    if test_thetas.is_empty() {
        return 0.0;
    }
    let feasible = test_thetas
        .par_iter()
        .filter(|theta| {
            policy
                .predict(theta)
                .and_then(|x| p_original.feasibility_residual(&x, theta))
                .is_ok_and(|r| r <= FEASIBILITY_TOL)
        })
        .count();
    100.0 * feasible as f64 / test_thetas.len() as f64
}

/// `2 ∏ B_l / √m` over the supplied layer norms.
pub fn ge_bound(layer_norms: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    if layer_norms.is_empty() || layer_norms.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidArgument(
            "layer norms must be positive".into(),
        ));
    }
    Ok(2.0 * layer_norms.iter().product::<f64>() / (m as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1, example2};

    struct Constant(Vec<f64>);

    impl Policy for Constant {
        fn predict(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn infeasibility_examples() {
        let p = example1();
        assert_eq!(infeasibility(&p, &[0.5], &[0.2, 0.3]).unwrap(), 0.0);
        let d = infeasibility(&p, &[0.5], &[1.0, 1.0]).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-8, "{d}");
        assert_eq!(infeasibility(&example2(), &[0.0], &[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn suboptimality_examples() {
        let p = example1();
        assert!(suboptimality(&p, &[0.5], &[0.0, 1.0]).unwrap() <= 1e-8);
        for theta in [-1.0, 0.0, 0.7] {
            assert!((suboptimality(&example2(), &[theta], &[2.0]).unwrap() - 1.0).abs() < 1e-12);
        }
        // interpolated point between θ_l = 0.9 and θ_r = 1.1 at θ = 0.95
        let (tl, tr, t) = (0.9, 1.1, 0.95);
        let x = crate::policy::closed_form_example1(t, tl, tr).unwrap();
        let gap = suboptimality(&p, &[t], &x).unwrap();
        assert!((gap - (t - tl) * (1.0 - t) / (tr - tl)).abs() < 1e-12);
    }

    #[test]
    fn ge_bound_values() {
        assert_eq!(ge_bound(&[1.0, 1.0], 4).unwrap(), 1.0);
        assert_eq!(ge_bound(&[2.0, 3.0], 9).unwrap(), 4.0);
        let b = ge_bound(&[1.7, 0.3, 2.2], 25).unwrap();
        assert_eq!(ge_bound(&[1.7, 0.3, 2.2], 100).unwrap(), b / 2.0);
        assert!(ge_bound(&[1.0, 0.0], 4).is_err());
        assert!(ge_bound(&[1.0], 0).is_err());
    }

    #[test]
    fn aggregates_by_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let a = Aggregate::of(&v);
        assert_eq!((a.max, a.q50, a.q90, a.q99), (100.0, 50.0, 90.0, 99.0));
        assert_eq!(a.mean, 50.5);
    }

    #[test]
    fn ratio_extremes() {
        let p = example1();
        let thetas: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.2]).collect();
        assert_eq!(
            feasibility_ratio(&p, &Constant(vec![0.0, 1.0]), &thetas),
            100.0
        );
        assert_eq!(
            feasibility_ratio(&p, &Constant(vec![1.0, 1.0]), &thetas),
            0.0
        );
    }

    #[test]
    fn report_csv_header_and_failures() {
        let p = example1();
        let thetas = vec![vec![0.5], vec![1.5]];
        let r = evaluate_policy(&p, &Constant(vec![0.0, 1.0]), &thetas);
        assert!(r.failures.is_empty());
        assert!((r.max_subopt() - 0.5).abs() < 1e-9);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta_0,xhat_0,xhat_1,infeas_dist,subopt_gap\n"));

        let bad = evaluate_policy(&p, &Constant(vec![0.0]), &thetas);
        assert_eq!(bad.failures.len(), 2);
        assert!(bad.records.is_empty());
    }
}
