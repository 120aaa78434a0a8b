//! Operator-splitting QP solver.
//!
//! Solves `min ½xᵀPx + qᵀx  s.t.  l ≤ Cx ≤ u` by ADMM on the splitting
//! `z = Cx`: an equality-constrained quadratic step in `x`, a projection of
//! `z` onto the box `[l, u]`, and a dual update. The KKT matrix
//! `P + σI + Cᵀ diag(ρ) C` is factored once per penalty value. Once the
//! residuals are small the active set is guessed from the duals and the
//! reduced KKT system is solved directly ("polishing"), which usually lands on
//! the exact optimum.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub const MAX_ITERATIONS: usize = 50_000;
pub const TOLERANCE: f64 = 1e-8;
/// Consecutive non-decreasing primal residual iterations (above 1.0)
/// that trigger the infeasibility heuristic.
pub const STALL_WINDOW: usize = 1_000;

const SIGMA: f64 = 1e-6;
const ALPHA: f64 = 1.6;
const RHO_EQ_SCALE: f64 = 1e3;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const CHECK_EVERY: usize = 10;
const POLISH_FROM: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct QpData {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub c: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpOutcome {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub outcome: QpOutcome,
    pub x: DVector<f64>,
    /// Duals of `l ≤ Cx ≤ u`; positive entries mark active upper bounds.
    pub y: DVector<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub polished: bool,
}

impl QpData {
    /// `rows · x ≤ rhs` as a QP constraint block.
    pub fn from_inequalities(
        p: DMatrix<f64>,
        q: DVector<f64>,
        rows: &[Vec<f64>],
        rhs: &[f64],
    ) -> Self {
        let n = q.len();
        let c = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        QpData {
            p,
            q,
            c,
            l: DVector::from_element(rows.len(), f64::NEG_INFINITY),
            u: DVector::from_column_slice(rhs),
        }
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    fn residuals(&self, x: &DVector<f64>, z: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
        let cx = &self.c * x;
        let prim = (&cx - z).amax();
        let dual = (&self.p * x + &self.q + self.c.transpose() * y).amax();
        (prim, dual)
    }

    /// Max violation of `l ≤ Cx ≤ u`.
    fn violation(&self, x: &DVector<f64>) -> f64 {
        let cx = &self.c * x;
        (0..cx.len()).fold(0.0f64, |m, i| {
            m.max(cx[i] - self.u[i]).max(self.l[i] - cx[i])
        })
    }
}

fn project(v: &DVector<f64>, l: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].max(l[i]).min(u[i]))
}

fn rho_vector(data: &QpData, rho: f64) -> DVector<f64> {
    DVector::from_fn(data.l.len(), |i, _| {
        let (l, u) = (data.l[i], data.u[i]);
        if l == u {
            RHO_EQ_SCALE * rho
        } else if l.is_infinite() && u.is_infinite() {
            RHO_MIN
        } else {
            rho
        }
    })
}

fn factor(data: &QpData, rho: &DVector<f64>) -> Cholesky<f64, Dyn> {
    let n = data.q.len();
    let mut k = data.p.clone() + DMatrix::identity(n, n) * SIGMA;
    let ct = data.c.transpose();
    k += &ct * DMatrix::from_diagonal(rho) * &data.c;
    Cholesky::new(k).expect("P + σI + CᵀρC is positive definite")
}

pub fn solve(data: &QpData) -> QpSolution {
    let n = data.q.len();
    let m = data.l.len();
    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut y = DVector::zeros(m);
    let mut rho = 0.1;
    let mut rho_vec = rho_vector(data, rho);
    let mut chol = factor(data, &rho_vec);
    let ct = data.c.transpose();

    let mut last_prim = f64::INFINITY;
    let mut stall = 0usize;
    let mut best_polish_attempt = f64::INFINITY;

    for iter in 1..=MAX_ITERATIONS {
        let rhs = &x * SIGMA - &data.q + &ct * (rho_vec.component_mul(&z) - &y);
        let x_tilde = chol.solve(&rhs);
        let z_tilde = &data.c * &x_tilde;
        x = &x_tilde * ALPHA + &x * (1.0 - ALPHA);
        let z_hat = &z_tilde * ALPHA + &z * (1.0 - ALPHA);
        let z_new = project(&(&z_hat + y.component_div(&rho_vec)), &data.l, &data.u);
        y += rho_vec.component_mul(&(&z_hat - &z_new));
        z = z_new;

        let (prim, dual) = data.residuals(&x, &z, &y);
        if prim > 1.0 && prim >= last_prim {
            stall += 1;
            if stall >= STALL_WINDOW {
                return QpSolution {
                    outcome: QpOutcome::Infeasible,
                    x,
                    y,
                    iterations: iter,
                    primal_residual: prim,
                    dual_residual: dual,
                    polished: false,
                };
            }
        } else {
            stall = 0;
        }
        last_prim = prim;

        if prim <= TOLERANCE && dual <= TOLERANCE {
            let mut sol = QpSolution {
                outcome: QpOutcome::Optimal,
                x,
                y,
                iterations: iter,
                primal_residual: prim,
                dual_residual: dual,
                polished: false,
            };
            if let Some(p) = polish(data, &z, &sol.y) {
                sol = QpSolution {
                    iterations: iter,
                    ..p
                };
            }
            return sol;
        }

        if iter % CHECK_EVERY == 0 {
            let scale = prim.max(dual);
            if scale < POLISH_FROM && scale < best_polish_attempt / 10.0 {
                best_polish_attempt = scale;
                if let Some(p) = polish(data, &z, &y) {
                    return QpSolution {
                        iterations: iter,
                        ..p
                    };
                }
            }
            // Penalty adaptation balancing the normalized residuals.
            let cx = &data.c * &x;
            let prim_norm = prim / cx.amax().max(z.amax()).max(1e-12);
            let dual_norm = dual
                / (&data.p * &x)
                    .amax()
                    .max((&ct * &y).amax())
                    .max(data.q.amax())
                    .max(1e-12);
            if prim_norm > 0.0 && dual_norm > 0.0 {
                let new_rho = (rho * (prim_norm / dual_norm).sqrt()).clamp(RHO_MIN, RHO_MAX);
                if new_rho > 5.0 * rho || new_rho < rho / 5.0 {
                    rho = new_rho;
                    rho_vec = rho_vector(data, rho);
                    chol = factor(data, &rho_vec);
                }
            }
        }
    }
    let (prim, dual) = data.residuals(&x, &z, &y);
    QpSolution {
        outcome: QpOutcome::MaxIterations,
        x,
        y,
        iterations: MAX_ITERATIONS,
        primal_residual: prim,
        dual_residual: dual,
        polished: false,
    }
}

/// Solves the KKT system restricted to the guessed active set and accepts
/// the result only if it is primal feasible, dual feasible with correct
/// multiplier signs, and stationary.
fn polish(data: &QpData, z: &DVector<f64>, y: &DVector<f64>) -> Option<QpSolution> {
    let n = data.q.len();
    let m = data.l.len();
    let mut active: Vec<(usize, f64)> = Vec::new();
    for i in 0..m {
        if data.u[i] - z[i] < y[i] {
            active.push((i, data.u[i]));
        } else if z[i] - data.l[i] < -y[i] {
            active.push((i, data.l[i]));
        }
    }
    let na = active.len();
    if na > n {
        return None;
    }
    let dim = n + na;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&data.p);
    let mut rhs = DVector::zeros(dim);
    for j in 0..n {
        rhs[j] = -data.q[j];
    }
    for (a, &(i, bound)) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + a, j)] = data.c[(i, j)];
            kkt[(j, n + a)] = data.c[(i, j)];
        }
        rhs[n + a] = bound;
    }
    let lu = kkt.clone().lu();
    let mut sol = lu.solve(&rhs)?;
    // two steps of iterative refinement
    for _ in 0..2 {
        let r = &rhs - &kkt * &sol;
        if let Some(d) = lu.solve(&r) {
            sol += d;
        }
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let xp = sol.rows(0, n).into_owned();
    let mut yp = DVector::zeros(m);
    for (a, &(i, bound)) in active.iter().enumerate() {
        let mult = sol[n + a];
        // upper-active needs y ≥ 0, lower-active y ≤ 0
        let is_upper = bound == data.u[i] && data.u[i] != data.l[i];
        let is_lower = bound == data.l[i] && data.u[i] != data.l[i];
        if (is_upper && mult < -1e-9) || (is_lower && mult > 1e-9) {
            return None;
        }
        yp[i] = mult;
    }
    let viol = data.violation(&xp);
    let zp = &data.c * &xp;
    let zp = project(&zp, &data.l, &data.u);
    let (prim, dual) = data.residuals(&xp, &zp, &yp);
    let scale = 1.0
        + data.q.amax()
        + data
            .u
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, v| a.max(v.abs()));
    if viol <= 1e-10 * scale && dual <= 1e-10 * scale {
        Some(QpSolution {
            outcome: QpOutcome::Optimal,
            x: xp,
            y: yp,
            iterations: 0,
            primal_residual: prim.max(viol),
            dual_residual: dual,
            polished: true,
        })
    } else {
        None
    }
}
