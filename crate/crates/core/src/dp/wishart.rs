//! Wishart matrix noise `W_p(s̃·I, k)`: the Gram matrix of k iid
//! `N(0, s̃·I_p)` vectors, which is symmetric PSD by construction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::budget::{ceil_log2, PrivacyBudget};
use crate::error::PrivacyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WishartParams {
    /// Matrix dimension p = d + 1.
    pub dim: usize,
    /// Per-sample variance s̃.
    pub scale: f64,
    /// Degrees of freedom (number of Gaussian samples).
    pub k: u64,
    pub eps_node: f64,
    pub delta_node: f64,
}

impl WishartParams {
    /// Per-node budget `(ε₂/√(8·⌈log₂T⌉·ln(2/δ₂)), δ₂/(2⌈log₂T⌉))` and
    /// `k = ⌈d·ε_node⁻²·ln(8d/δ_node)·ln(2/δ_node)⌉`, raised to at least
    /// `dim`. `k_override` replaces the formula.
    pub fn from_budget(
        d: usize,
        budget: &PrivacyBudget,
        scale: f64,
        k_override: Option<u64>,
    ) -> Result<Self, PrivacyError> {
        if !(scale > 0.0) {
            return Err(PrivacyError::InvalidParameter(format!("wishart scale must be positive, got {scale}")));
        }
        let log_t = ceil_log2(budget.horizon).max(1) as f64;
        let eps_node = budget.eps2 / (8.0 * log_t * (2.0 / budget.delta2).ln()).sqrt();
        let delta_node = budget.delta2 / (2.0 * log_t);
        let dim = d + 1;
        let k = match k_override {
            Some(k) => k,
            None => {
                let d_f = d as f64;
                let raw = d_f / (eps_node * eps_node)
                    * (8.0 * d_f / delta_node).ln()
                    * (2.0 / delta_node).ln();
                raw.ceil() as u64
            }
        }
        .max(dim as u64);
        Ok(WishartParams { dim, scale, k, eps_node, delta_node })
    }
}

/// Samples `Σ_{j=1..k} v_j v_jᵀ`, `v_j ~ N(0, s̃·I)`.
///
/// Small k sums the outer products directly. Otherwise the Bartlett
/// decomposition `s̃·A·Aᵀ` is used, with A lower triangular,
/// `A_ii = √χ²(k − i)` and standard normal entries below the diagonal; it has
/// the same law at O(p³) cost independent of k. The result is mirrored from
/// its lower triangle so it is exactly symmetric.
pub fn wishart_noise<R: Rng + ?Sized>(params: &WishartParams, rng: &mut R) -> DMatrix<f64> {
    let p = params.dim;
    let k = params.k;
    let direct_limit = (p * p / 3).max(p) as u64;
    let mut w = if k < p as u64 || k <= direct_limit {
        let sd = params.scale.sqrt();
        let mut acc = DMatrix::zeros(p, p);
        for _ in 0..k {
            let v = DVector::from_fn(p, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
            acc.ger(1.0, &v, &v, 1.0);
        }
        acc
    } else {
        let mut a = DMatrix::zeros(p, p);
        for i in 0..p {
            let dof = (k - i as u64) as f64;
            a[(i, i)] = ChiSquared::new(dof).expect("positive dof").sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        (&a * a.transpose()) * params.scale
    };
    for i in 0..p {
        for j in 0..i {
            w[(j, i)] = w[(i, j)];
        }
    }
    w
}
