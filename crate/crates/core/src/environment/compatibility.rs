use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};

use crate::error::EnvironmentError;
use crate::rng::SimRng;

/// Largest support for which every sign orthant is searched.
const EXHAUSTIVE_SUPPORT: usize = 12;
const RANDOM_STARTS: usize = 512;
const MAX_STEPS: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityEstimate {
    /// Minimized `x_Sᵀ M x_S / ‖x_S‖₁²` over the searched orthants.
    pub phi_sq: f64,
    /// `max(λ_min(M_SS), 0) / |S|`, a bound that holds for every x.
    pub eigen_lower_bound: f64,
    pub orthants_searched: usize,
}

/// Estimates φ²(M, S) = min over the cone `‖x_{Sᶜ}‖₁ ≤ 3‖x_S‖₁` of
/// `x_Sᵀ M x_S / ‖x_S‖₁²`.
///
/// The objective only involves `x_S`, so setting `x_{Sᶜ} = 0` is always
/// feasible and the problem reduces to minimizing `yᵀ M_SS y` on the unit
/// ℓ1 sphere of `R^{|S|}`. Within a sign orthant that is a convex quadratic
/// over a simplex, solved by projected gradient. Supports up to 12 indices
/// enumerate every orthant; larger ones use random orthants plus the sign
/// pattern of the bottom eigenvector.
pub fn compatibility_constant(
    gram: &DMatrix<f64>,
    support: &[usize],
) -> Result<CompatibilityEstimate, EnvironmentError> {
    if support.is_empty() {
        return Err(EnvironmentError::DegenerateSupport);
    }
    let n = gram.nrows();
    if gram.ncols() != n || support.iter().any(|&i| i >= n) {
        return Err(EnvironmentError::InvalidDimensions("support outside matrix".into()));
    }
    let s = support.len();
    let sub = DMatrix::from_fn(s, s, |i, j| 0.5 * (gram[(support[i], support[j])] + gram[(support[j], support[i])]));
    let eig = SymmetricEigen::new(sub.clone());
    let (lo_idx, lo) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let hi = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let eigen_lower_bound = lo.max(0.0) / s as f64;

    let mut patterns: Vec<Vec<f64>> = Vec::new();
    if s <= EXHAUSTIVE_SUPPORT {
        // ±x give the same value, so fix the first sign.
        for mask in 0..(1usize << (s - 1)) {
            patterns.push(
                (0..s)
                    .map(|i| if i == 0 || (mask >> (i - 1)) & 1 == 0 { 1.0 } else { -1.0 })
                    .collect(),
            );
        }
    } else {
        let v = eig.eigenvectors.column(lo_idx);
        patterns.push(v.iter().map(|&c| if c >= 0.0 { 1.0 } else { -1.0 }).collect());
        patterns.push(vec![1.0; s]);
        let mut rng = SimRng::seed_from_u64(0x00C0_FFEE);
        for _ in 0..RANDOM_STARTS {
            patterns.push((0..s).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect());
        }
    }

    let step = if hi > 0.0 { 1.0 / (2.0 * hi) } else { 1.0 };
    let mut best = f64::INFINITY;
    for signs in &patterns {
        let d = DVector::from_column_slice(signs);
        let a = DMatrix::from_fn(s, s, |i, j| d[i] * sub[(i, j)] * d[j]);
        best = best.min(simplex_quadratic_min(&a, step));
    }
    Ok(CompatibilityEstimate {
        phi_sq: best.max(0.0),
        eigen_lower_bound,
        orthants_searched: patterns.len(),
    })
}

/// min yᵀAy over the probability simplex by projected gradient.
fn simplex_quadratic_min(a: &DMatrix<f64>, step: f64) -> f64 {
    let s = a.nrows();
    let mut y = DVector::from_element(s, 1.0 / s as f64);
    let mut value = (y.transpose() * a * &y)[(0, 0)];
    for _ in 0..MAX_STEPS {
        let grad = a * &y * 2.0;
        let next = project_simplex(&(&y - grad * step));
        let next_value = (next.transpose() * a * &next)[(0, 0)];
        let moved = (&next - &y).amax();
        y = next;
        value = next_value;
        if moved < 1e-13 {
            break;
        }
    }
    value
}

/// Euclidean projection onto `{y ≥ 0, Σy = 1}` (sort-and-threshold).
pub(crate) fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let candidate = (cum - 1.0) / (k + 1) as f64;
        if uk - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.map(|x| (x - tau).max(0.0))
}
