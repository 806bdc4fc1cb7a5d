//! Private support estimation: LASSO, a non-private screen at `4λ`, then
//! noisy thresholding of the survivors.

use nalgebra::DVector;
use rand::Rng;

use crate::dp::{svt_select, SvtConfig};
use crate::sparse_regression::{lasso_fit, LassoFit, LassoOptions, RegressionProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct SupportEstimate {
    /// Non-private candidates `{i : |θ̂_i| > 4λ}`, ascending.
    pub s0_candidates: Vec<usize>,
    /// Private selection, ascending, a subset of the candidates.
    pub s1_selected: Vec<usize>,
    pub episode: u32,
    pub cap_hit: bool,
    pub cap: usize,
    pub lambda: f64,
    /// Noise-free threshold `4λΓ√s̄` the candidates were compared against.
    pub threshold: f64,
    /// Values handed to the noisy threshold, `(i, |θ̂_i|)` for i in S0.
    pub values: Vec<(usize, f64)>,
    /// Candidates compared before the scan stopped.
    pub examined: Vec<usize>,
    /// False when the LASSO fit hit its iteration cap.
    pub lasso_converged: bool,
}

impl SupportEstimate {
    pub fn empty(episode: u32, lambda: f64, cap: usize) -> Self {
        SupportEstimate {
            s0_candidates: Vec::new(),
            s1_selected: Vec::new(),
            episode,
            cap_hit: false,
            cap,
            lambda,
            threshold: 0.0,
            values: Vec::new(),
            examined: Vec::new(),
            lasso_converged: true,
        }
    }
}

/// Runs one support estimation on the accumulated history.
///
/// With no observations there is nothing to fit, so both sets are empty and
/// no noise is drawn.
pub fn sparse_estimation<R: Rng + ?Sized>(
    history: &RegressionProblem,
    lambda: f64,
    svt: &SvtConfig,
    episode: u32,
    lasso: LassoOptions,
    warm_start: Option<&DVector<f64>>,
    rng: &mut R,
) -> (SupportEstimate, Option<LassoFit>) {
    if history.rows == 0 {
        let mut empty = SupportEstimate::empty(episode, lambda, svt.cap);
        empty.threshold = svt.base_threshold(lambda);
        return (empty, None);
    }
    let mut problem = history.clone();
    problem.lambda = lambda;
    let fit = lasso_fit(&problem, lasso, warm_start);

    let screen = 4.0 * lambda;
    let values: Vec<(usize, f64)> = fit
        .theta
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > screen)
        .map(|(i, v)| (i, v.abs()))
        .collect();
    let threshold = svt.base_threshold(lambda);
    let outcome = svt_select(&values, threshold, svt, rng);

    let estimate = SupportEstimate {
        s0_candidates: values.iter().map(|&(i, _)| i).collect(),
        s1_selected: outcome.selected,
        episode,
        cap_hit: outcome.cap_hit,
        cap: svt.cap,
        lambda,
        threshold,
        values,
        examined: outcome.examined,
        lasso_converged: fit.converged,
    };
    (estimate, Some(fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::SvtVariant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthogonal_history(theta: &[f64], reps: usize) -> RegressionProblem {
        let d = theta.len();
        let mut p = RegressionProblem::empty(d, 0.0, 1e9);
        for _ in 0..reps {
            for i in 0..d {
                let mut x = DVector::zeros(d);
                x[i] = 1.0;
                p.push(&x, theta[i]);
            }
        }
        p
    }

    #[test]
    fn noiseless_recovers_true_support() {
        let theta = [0.0, 0.8, 0.0, -0.6, 0.0, 0.0, 0.5, 0.0];
        let history = orthogonal_history(&theta, 50);
        let svt = SvtConfig::with_scale(1e-12, 8, SvtVariant::PerQuery);
        // With 50 copies of each unit vector θ̂_i = sign·max(|θ_i| − λ/100, 0);
        // λ = 0.1 puts both the screen and the threshold (Γ = s̄ = 1) at 0.4.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (est, fit) = sparse_estimation(&history, 0.1, &svt, 3, LassoOptions::default(), None, &mut rng);
        assert!(fit.unwrap().converged);
        assert_eq!(est.s1_selected, vec![1, 3, 6]);
        assert_eq!(est.s0_candidates, vec![1, 3, 6]);
        assert!(!est.cap_hit);
    }

    #[test]
    fn zero_parameter_selects_nothing() {
        let history = orthogonal_history(&[0.0; 6], 10);
        let svt = SvtConfig::with_scale(1.0, 6, SvtVariant::PerQuery);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (est, _) = sparse_estimation(&history, 0.5, &svt, 1, LassoOptions::default(), None, &mut rng);
        assert!(est.s0_candidates.is_empty());
        assert!(est.s1_selected.is_empty());
    }

    #[test]
    fn cap_of_one_stops_early() {
        let history = orthogonal_history(&[5.0, 0.0, 5.0], 10);
        let svt = SvtConfig::with_scale(1e-12, 1, SvtVariant::PerQuery);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (est, _) = sparse_estimation(&history, 0.1, &svt, 1, LassoOptions::default(), None, &mut rng);
        assert_eq!(est.s1_selected.len(), 1);
        assert!(est.cap_hit);
        assert_eq!(est.s0_candidates, vec![0, 2]);
    }

    #[test]
    fn empty_history_is_cold_start() {
        let history = RegressionProblem::empty(4, 0.0, 1.0);
        let svt = SvtConfig::with_scale(1.0, 2, SvtVariant::PerQuery);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (est, fit) = sparse_estimation(&history, 0.1, &svt, 0, LassoOptions::default(), None, &mut rng);
        assert!(fit.is_none());
        assert!(est.s1_selected.is_empty());
    }
}
