//! ℓ1-penalized least squares (LASSO) and the ridge-stabilised ℓ2 fit on a
//! selected support.
//!
//! The LASSO objective is the unnormalised `‖Y − Zθ‖² + λ‖θ‖₁`. Everything
//! is computed from the sufficient statistics `ZᵀZ`, `ZᵀY` and `YᵀY`, which
//! the policy accumulates round by round, so a fit never touches the raw
//! history.

use nalgebra::{DMatrix, DVector};

use crate::error::RegressionError;

pub const DEFAULT_TOL: f64 = 1e-6;

/// Sufficient statistics of a least-squares problem with an ℓ1 penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    /// `ZᵀZ` (d×d).
    pub gram: DMatrix<f64>,
    /// `ZᵀY`.
    pub moment: DVector<f64>,
    /// `YᵀY`.
    pub response_sq: f64,
    /// Number of rows t.
    pub rows: usize,
    pub lambda: f64,
    /// ℓ2 ball radius `C_θ`.
    pub radius: f64,
}

impl RegressionProblem {
    pub fn empty(d: usize, lambda: f64, radius: f64) -> Self {
        RegressionProblem {
            gram: DMatrix::zeros(d, d),
            moment: DVector::zeros(d),
            response_sq: 0.0,
            rows: 0,
            lambda,
            radius,
        }
    }

    pub fn from_design(design: &DMatrix<f64>, response: &DVector<f64>, lambda: f64, radius: f64) -> Self {
        RegressionProblem {
            gram: design.transpose() * design,
            moment: design.transpose() * response,
            response_sq: response.norm_squared(),
            rows: design.nrows(),
            lambda,
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    /// Appends one observation `(x, y)`.
    pub fn push(&mut self, x: &DVector<f64>, y: f64) {
        self.gram.ger(1.0, x, x, 1.0);
        self.moment.axpy(y, x, 1.0);
        self.response_sq += y * y;
        self.rows += 1;
    }

    /// `‖Y − Zθ‖² + λ‖θ‖₁`.
    pub fn objective(&self, theta: &DVector<f64>) -> f64 {
        let quad = theta.dot(&(&self.gram * theta));
        quad - 2.0 * theta.dot(&self.moment) + self.response_sq + self.lambda * theta.lp_norm(1)
    }

    /// Gradient of the squared loss, `2(ZᵀZθ − ZᵀY)`.
    pub fn loss_gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        (&self.gram * theta - &self.moment) * 2.0
    }
}

/// Largest coordinatewise violation of the LASSO optimality conditions:
/// `|g_j| ≤ λ` where `θ_j = 0`, `g_j = −λ·sign(θ_j)` elsewhere, with
/// `g = 2Zᵀ(Zθ − Y)`.
pub fn kkt_residual(problem: &RegressionProblem, theta: &DVector<f64>) -> f64 {
    let grad = problem.loss_gradient(theta);
    kkt_from_gradient(&grad, theta, problem.lambda)
}

fn kkt_from_gradient(grad: &DVector<f64>, theta: &DVector<f64>, lambda: f64) -> f64 {
    grad.iter()
        .zip(theta.iter())
        .map(|(&g, &th)| {
            if th == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g + lambda * th.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub theta: DVector<f64>,
    /// Coordinate updates performed.
    pub iterations: usize,
    /// KKT residual of the unprojected iterate.
    pub residual: f64,
    pub converged: bool,
    /// Set when the solution was rescaled onto the `C_θ` ball.
    pub projected: bool,
    /// Objective after each full sweep, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    pub fn ensure_converged(&self, tol: f64) -> Result<(), RegressionError> {
        if self.converged {
            Ok(())
        } else {
            Err(RegressionError::NoConvergence { tol, iters: self.iterations, residual: self.residual })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub tol: f64,
    /// Coordinate updates; `None` means `10⁴·d`.
    pub max_iters: Option<usize>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions { tol: DEFAULT_TOL, max_iters: None }
    }
}

/// Cyclic coordinate descent on the LASSO objective.
///
/// Each coordinate step is the exact minimiser
/// `θ_j = soft(b_j − Σ_{k≠j} G_jk θ_k, λ/2) / G_jj`, so the objective never
/// increases. Convergence is declared when the KKT residual drops to `tol`.
/// A non-converged fit is returned with `converged = false` and the best
/// iterate. If `‖θ̂‖₂ > radius` the result is rescaled onto the ball, which
/// keeps the support.
pub fn lasso_fit(problem: &RegressionProblem, opts: LassoOptions, warm_start: Option<&DVector<f64>>) -> LassoFit {
    let d = problem.dim();
    let max_iters = opts.max_iters.unwrap_or(10_000 * d.max(1));
    let lambda = problem.lambda.max(0.0);
    let mut theta = match warm_start {
        Some(w) if w.len() == d => w.clone(),
        _ => DVector::zeros(d),
    };
    // Gθ kept in sync with θ.
    let mut g_theta = &problem.gram * &theta;
    let mut trace = vec![problem.objective(&theta)];
    let mut iterations = 0;

    let mut residual = kkt_from_gradient(&((&g_theta - &problem.moment) * 2.0), &theta, lambda);
    let mut best = (residual, theta.clone());
    while residual > opts.tol && iterations < max_iters {
        for j in 0..d {
            let gjj = problem.gram[(j, j)];
            let old = theta[j];
            let new = if gjj > 0.0 {
                let rho = problem.moment[j] - (g_theta[j] - gjj * old);
                soft_threshold(rho, lambda / 2.0) / gjj
            } else {
                0.0
            };
            if new != old {
                let delta = new - old;
                g_theta.axpy(delta, &problem.gram.column(j), 1.0);
                theta[j] = new;
            }
            iterations += 1;
        }
        trace.push(problem.objective(&theta));
        residual = kkt_from_gradient(&((&g_theta - &problem.moment) * 2.0), &theta, lambda);
        if residual < best.0 {
            best = (residual, theta.clone());
        }
    }
    let converged = residual <= opts.tol;
    let (residual, mut theta) = if converged { (residual, theta) } else { best };

    let norm = theta.norm();
    let projected = norm > problem.radius;
    if projected {
        theta *= problem.radius / norm;
    }
    LassoFit { theta, iterations, residual, converged, projected, objective_trace: trace }
}

pub fn soft_threshold(x: f64, level: f64) -> f64 {
    if x > level {
        x - level
    } else if x < -level {
        x + level
    } else {
        0.0
    }
}

/// Normal-equation data for the ℓ2 regression restricted to a support.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedGram {
    /// Sorted support indices into the full d-vector.
    pub support: Vec<usize>,
    /// `Σ x_S x_Sᵀ` (|S|×|S|).
    pub v: DMatrix<f64>,
    /// `Σ x_S r`.
    pub u: DVector<f64>,
    pub count: usize,
}

impl RestrictedGram {
    /// `10⁻⁶·trace(V)/|S|`, floored so the shift stays positive.
    pub fn default_ridge(&self) -> f64 {
        let s = self.support.len().max(1) as f64;
        (1e-6 * self.v.trace() / s).max(1e-12)
    }
}

/// Solves `(V + ρI) w = u` and embeds `w` into a length-`d` vector that is
/// zero off the support. Solutions longer than `c_theta` are rescaled to it.
pub fn restricted_l2_fit(
    gram: &RestrictedGram,
    d: usize,
    c_theta: f64,
    ridge: f64,
) -> Result<DVector<f64>, RegressionError> {
    let s = gram.support.len();
    if s == 0 {
        return Err(RegressionError::InvalidInput("empty support".into()));
    }
    if !(ridge > 0.0) {
        return Err(RegressionError::InvalidInput(format!("ridge must be positive, got {ridge}")));
    }
    if gram.v.nrows() != s || gram.v.ncols() != s || gram.u.len() != s {
        return Err(RegressionError::InvalidInput("restricted gram shape mismatch".into()));
    }
    if let Some(&bad) = gram.support.iter().find(|&&i| i >= d) {
        return Err(RegressionError::InvalidInput(format!("support index {bad} >= {d}")));
    }
    let mut shifted = gram.v.clone();
    for i in 0..s {
        shifted[(i, i)] += ridge;
    }
    let w = match shifted.clone().cholesky() {
        Some(chol) => chol.solve(&gram.u),
        None => shifted.lu().solve(&gram.u).ok_or(RegressionError::Singular)?,
    };
    let norm = w.norm();
    let scale = if norm > c_theta { c_theta / norm } else { 1.0 };
    let mut theta = DVector::zeros(d);
    for (slot, &i) in gram.support.iter().enumerate() {
        theta[i] = w[slot] * scale;
    }
    Ok(theta)
}
