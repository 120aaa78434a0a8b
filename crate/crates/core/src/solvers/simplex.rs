//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  A x ≤ b` with free `x`. Each free variable is
//! split as `x = x⁺ − x⁻` and each row receives a slack, so the standard
//! form has `2n + m` structural columns plus one artificial per row whose
//! right-hand side is negative.

use std::collections::{HashSet, VecDeque};

use crate::linalg::{dot, Matrix};

pub const MAX_PIVOTS: usize = 100_000;
/// Reduced costs at or below this magnitude mark a possibly non-unique optimum.
pub const DEGENERATE_REDUCED_COST: f64 = 1e-7;
/// Cap on distinct optimal vertices collected from the optimal face.
pub const FACE_VERTEX_CAP: usize = 64;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-8;
const MAX_FACE_BASES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub outcome: LpOutcome,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Reduced costs of every structural column (`x⁺`, `x⁻`, slacks).
    pub reduced_costs: Vec<f64>,
    /// Lagrange multipliers `y ≥ 0` of `A x ≤ b` (so `c + Aᵀy = 0`).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

#[derive(Clone)]
struct Tableau {
    /// `rows` constraint rows followed by the objective row; last column is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    rows: usize,
    cols: usize,
    /// Columns that may enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn set_cost(&mut self, cost: &[f64]) {
        let obj = self.rows;
        let mut row = vec![0.0; self.cols + 1];
        row[..cost.len()].copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (v, a) in row.iter_mut().zip(&self.t[i]) {
                    *v -= cb * a;
                }
            }
        }
        self.t[obj] = row;
    }

    fn objective_value(&self) -> f64 {
        -self.t[self.rows][self.cols]
    }

    /// Ratio test with Bland's tie-break (smallest basic column index).
    fn leaving_row(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.t[i][c];
            if a > PIVOT_EPS {
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12
                            || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs primal simplex on the current objective row.
    fn optimize(&mut self, pivots: &mut usize) -> LpOutcome {
        loop {
            let obj = &self.t[self.rows];
            let entering = (0..self.cols).find(|&j| self.allowed[j] && obj[j] < -COST_EPS);
            let Some(c) = entering else {
                return LpOutcome::Optimal;
            };
            let Some(r) = self.leaving_row(c) else {
                return LpOutcome::Unbounded;
            };
            if *pivots >= MAX_PIVOTS {
                return LpOutcome::MaxIterations;
            }
            self.pivot(r, c);
            *pivots += 1;
        }
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            z[b] = self.rhs(i);
        }
        (0..n).map(|j| z[j] - z[n + j]).collect()
    }

    fn basis_key(&self) -> Vec<usize> {
        let mut b = self.basis.clone();
        b.sort_unstable();
        b
    }
}

/// A solved tableau that can be queried for further optimal vertices.
pub struct SimplexRun {
    tableau: Tableau,
    n: usize,
    m: usize,
    pub solution: LpSolution,
}

fn build(c: &[f64], a: &Matrix, b: &[f64]) -> (Tableau, Vec<f64>) {
    let n = c.len();
    let m = a.len();
    let flipped: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let n_art = flipped.iter().filter(|&&f| f).count();
    let structural = 2 * n + m;
    let cols = structural + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    let mut basis = vec![0; m];
    let mut art = structural;
    for i in 0..m {
        let s = if flipped[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[i][j];
            t[i][n + j] = -s * a[i][j];
        }
        t[i][2 * n + i] = s;
        t[i][cols] = s * b[i];
        if flipped[i] {
            t[i][art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }
    let mut phase1 = vec![0.0; cols];
    for v in phase1.iter_mut().skip(structural) {
        *v = 1.0;
    }
    let tab = Tableau {
        t,
        basis,
        rows: m,
        cols,
        allowed: vec![true; cols],
    };
    (tab, phase1)
}

/// Solves `min cᵀx s.t. A x ≤ b`.
pub fn solve(c: &[f64], a: &Matrix, b: &[f64]) -> SimplexRun {
    let n = c.len();
    let m = a.len();
    let (mut tab, phase1) = build(c, a, b);
    let structural = 2 * n + m;
    let mut pivots = 0;

    if tab.cols > structural {
        tab.set_cost(&phase1);
        let out = tab.optimize(&mut pivots);
        if out == LpOutcome::MaxIterations {
            return finish(tab, n, m, c, LpOutcome::MaxIterations, pivots);
        }
        if tab.objective_value() > PHASE1_TOL {
            return finish(tab, n, m, c, LpOutcome::Infeasible, pivots);
        }
        // Drive zero-level artificials out of the basis.
        for i in 0..m {
            if tab.basis[i] >= structural {
                if let Some(j) = (0..structural).find(|&j| tab.t[i][j].abs() > PIVOT_EPS) {
                    tab.pivot(i, j);
                    pivots += 1;
                }
            }
        }
        for j in structural..tab.cols {
            tab.allowed[j] = false;
        }
    }
    let mut cost = vec![0.0; tab.cols];
    cost[..n].copy_from_slice(c);
    for j in 0..n {
        cost[n + j] = -c[j];
    }
    tab.set_cost(&cost);
    let out = tab.optimize(&mut pivots);
    finish(tab, n, m, c, out, pivots)
}

fn finish(
    tab: Tableau,
    n: usize,
    m: usize,
    c: &[f64],
    outcome: LpOutcome,
    pivots: usize,
) -> SimplexRun {
    let x = tab.primal(n);
    let structural = 2 * n + m;
    let reduced_costs = tab.t[tab.rows][..structural].to_vec();
    let duals = (0..m).map(|i| reduced_costs[2 * n + i]).collect();
    let objective = dot(c, &x);
    SimplexRun {
        solution: LpSolution {
            outcome,
            x,
            objective,
            reduced_costs,
            duals,
            pivots,
        },
        tableau: tab,
        n,
        m,
    }
}

/// Outcome of walking the optimal face.
pub enum FaceVertices {
    /// All distinct optimal vertices reachable by zero-reduced-cost pivots,
    /// starting with the vertex the simplex stopped at.
    Enumerated(Vec<Vec<f64>>),
    /// More than [`FACE_VERTEX_CAP`] vertices were found.
    CapExceeded,
}

impl SimplexRun {
    /// Breadth-first pivoting over optimal bases through nonbasic columns
    /// whose reduced cost is within [`DEGENERATE_REDUCED_COST`] of zero.
    pub fn optimal_face_vertices(&self) -> FaceVertices {
        let mut vertices = vec![self.solution.x.clone()];
        if self.solution.outcome != LpOutcome::Optimal {
            return FaceVertices::Enumerated(vertices);
        }
        let structural = 2 * self.n + self.m;
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        seen.insert(self.tableau.basis_key());
        let mut queue = VecDeque::from([self.tableau.clone()]);
        while let Some(tab) = queue.pop_front() {
            for j in 0..structural {
                if !tab.allowed[j]
                    || tab.basis.contains(&j)
                    || tab.t[tab.rows][j].abs() > DEGENERATE_REDUCED_COST
                {
                    continue;
                }
                let Some(r) = tab.leaving_row(j) else {
                    continue;
                };
                let mut next = tab.clone();
                next.pivot(r, j);
                if !seen.insert(next.basis_key()) {
                    continue;
                }
                let x = next.primal(self.n);
                if !vertices
                    .iter()
                    .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-9))
                {
                    vertices.push(x);
                    if vertices.len() > FACE_VERTEX_CAP {
                        return FaceVertices::CapExceeded;
                    }
                }
                if seen.len() < MAX_FACE_BASES {
                    queue.push_back(next);
                }
            }
        }
        FaceVertices::Enumerated(vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1(theta: f64) -> (Vec<f64>, Matrix, Vec<f64>) {
        (
            vec![-theta, -1.0],
            vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 0.0, 0.0],
        )
    }

    #[test]
    fn example1_unique_vertices() {
        let (c, a, b) = example1(0.5);
        let s = solve(&c, &a, &b).solution;
        assert_eq!(s.outcome, LpOutcome::Optimal);
        assert!((s.x[0]).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!((s.objective + 1.0).abs() < 1e-12);
        let (c, a, b) = example1(2.0);
        let s = solve(&c, &a, &b).solution;
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn example1_face_at_one_has_two_vertices() {
        let (c, a, b) = example1(1.0);
        let run = solve(&c, &a, &b);
        let FaceVertices::Enumerated(v) = run.optimal_face_vertices() else {
            panic!("cap exceeded")
        };
        assert_eq!(v.len(), 2, "{v:?}");
        let (c, a, b) = example1(0.5);
        let FaceVertices::Enumerated(v) = solve(&c, &a, &b).optimal_face_vertices() else {
            panic!()
        };
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn phase_one_handles_negative_rhs() {
        // x >= 2 written as -x <= -2, min x
        let s = solve(&[1.0], &vec![vec![-1.0], vec![1.0]], &[-2.0, 5.0]).solution;
        assert_eq!(s.outcome, LpOutcome::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let s = solve(&[1.0], &vec![vec![-1.0], vec![1.0]], &[-2.0, 1.0]).solution;
        assert_eq!(s.outcome, LpOutcome::Infeasible);
        let s = solve(&[-1.0], &vec![vec![-1.0]], &[0.0]).solution;
        assert_eq!(s.outcome, LpOutcome::Unbounded);
    }

    #[test]
    fn square_face_enumerates_four_vertices() {
        // min 0 over the unit square: every vertex is optimal
        let a = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ];
        let run = solve(&[0.0, 0.0], &a, &[1.0, 1.0, 0.0, 0.0]);
        let FaceVertices::Enumerated(v) = run.optimal_face_vertices() else {
            panic!()
        };
        assert_eq!(v.len(), 4, "{v:?}");
    }
}
