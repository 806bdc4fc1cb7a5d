//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use dpbandit_core::sparse_regression::RegressionProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Random `t × d` Gaussian design with a 3-sparse signal plus noise.
pub fn random_lasso_problem<R: Rng>(rng: &mut R, d: usize, t: usize) -> RegressionProblem {
    let z = DMatrix::from_fn(t, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut theta = DVector::zeros(d);
    for _ in 0..3 {
        let i = rng.random_range(0..d);
        theta[i] = rng.random_range(-2.0..2.0);
    }
    let y = &z * &theta + DVector::from_fn(t, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
    let lambda = rng.random_range(0.5..8.0);
    RegressionProblem::from_design(&z, &y, lambda, 1e9)
}

/// Exact LASSO minimizer by enumerating every sign pattern in {−1, 0, 1}^d.
///
/// For a pattern s with active set A the stationarity condition
/// `2 G_AA θ_A − 2 b_A + λ s_A = 0` has one solution when `G_AA` is
/// invertible; it is kept when its signs agree with s. The global minimizer
/// is sign-consistent with its own pattern, so the best kept candidate is it.
pub fn lasso_by_sign_enumeration(p: &RegressionProblem) -> (DVector<f64>, f64) {
    let d = p.dim();
    let mut best = (DVector::zeros(d), p.objective(&DVector::zeros(d)));
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let signs: Vec<i8> = (0..d)
            .map(|_| {
                let s = (c % 3) as i8 - 1;
                c /= 3;
                s
            })
            .collect();
        let active: Vec<usize> = (0..d).filter(|&j| signs[j] != 0).collect();
        if active.is_empty() {
            continue;
        }
        let k = active.len();
        let g = DMatrix::from_fn(k, k, |i, j| p.gram[(active[i], active[j])]);
        let rhs = DVector::from_fn(k, |i, _| p.moment[active[i]] - p.lambda * signs[active[i]] as f64 / 2.0);
        let Some(sol) = g.lu().solve(&rhs) else { continue };
        if active.iter().enumerate().any(|(i, &j)| sol[i] * signs[j] as f64 <= 0.0) {
            continue;
        }
        let mut theta = DVector::zeros(d);
        for (i, &j) in active.iter().enumerate() {
            theta[j] = sol[i];
        }
        let obj = p.objective(&theta);
        if obj < best.1 {
            best = (theta, obj);
        }
    }
    best
}

/// Context vectors with small integer entries, so every partial sum of
/// their outer products is exact in floating point.
pub fn integer_stream<R: Rng>(rng: &mut R, d: usize, n: usize) -> Vec<(DVector<f64>, f64)> {
    (0..n)
        .map(|_| {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-4i32..=4) as f64);
            (x, rng.random_range(-4i32..=4) as f64)
        })
        .collect()
}

/// Running sum of `b·bᵀ`, `b = (x, r)`, in insertion order.
pub fn exact_accumulator(stream: &[(DVector<f64>, f64)]) -> Vec<DMatrix<f64>> {
    let dim = stream.first().map_or(1, |s| s.0.len() + 1);
    let mut acc = DMatrix::zeros(dim, dim);
    let mut out = Vec::with_capacity(stream.len());
    for (x, r) in stream {
        let mut b = DVector::zeros(dim);
        b.rows_mut(0, dim - 1).copy_from(x);
        b[dim - 1] = *r;
        acc += &b * b.transpose();
        out.push(acc.clone());
    }
    out
}

/// Minimum of `x_Sᵀ M x_S / ‖x_S‖₁²` for |S| = 2 over a grid of the cone
/// `‖x_{Sᶜ}‖₁ ≤ 3‖x_S‖₁`. The off-support part does not enter the ratio, so
/// only directions of `x_S` are gridded (angle θ ↦ (cos θ, sin θ)).
pub fn compatibility_grid(m: &DMatrix<f64>, support: [usize; 2], points: usize) -> f64 {
    let (a, b) = (support[0], support[1]);
    let mut best = f64::INFINITY;
    for k in 0..points {
        let angle = std::f64::consts::PI * k as f64 / points as f64;
        let (x, y) = (angle.cos(), angle.sin());
        let quad = m[(a, a)] * x * x + 2.0 * m[(a, b)] * x * y + m[(b, b)] * y * y;
        let l1 = x.abs() + y.abs();
        best = best.min(quad / (l1 * l1));
    }
    best
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
