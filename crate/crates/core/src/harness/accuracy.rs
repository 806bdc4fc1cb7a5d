//! Threshold accuracy of the private selection step.
//!
//! A selection is (α, β)-accurate against threshold τ when every selected
//! value is at least `τ − α` and every rejected value at most `τ + α`, except
//! with probability β. Candidates the scan never reached (after the cap was
//! hit) were not classified and are ignored.

use crate::dp::{PrivacyBudget, SvtConfig};
use crate::policy::SupportEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub alpha: f64,
    /// Largest distance to the threshold over misclassified coordinates.
    pub alpha_hat: f64,
    /// Fraction of estimates with a misclassification beyond α.
    pub violation_rate: f64,
    pub estimates: usize,
}

/// Largest `τ − v` over selected and `v − τ` over rejected examined
/// coordinates, counting only those on the wrong side; 0 if none.
pub fn misclassification(estimate: &SupportEstimate) -> f64 {
    let tau = estimate.threshold;
    let mut worst = 0.0f64;
    for &(i, v) in &estimate.values {
        if estimate.s1_selected.binary_search(&i).is_ok() {
            worst = worst.max(tau - v);
        } else if estimate.examined.binary_search(&i).is_ok() {
            worst = worst.max(v - tau);
        }
    }
    worst
}

pub fn violates(estimate: &SupportEstimate, alpha: f64) -> bool {
    misclassification(estimate) > alpha
}

pub fn accuracy_report<'a, I>(estimates: I, alpha: f64) -> AccuracyReport
where
    I: IntoIterator<Item = &'a SupportEstimate>,
{
    let mut alpha_hat = 0.0f64;
    let mut violations = 0usize;
    let mut n = 0usize;
    for e in estimates {
        let m = misclassification(e);
        alpha_hat = alpha_hat.max(m);
        if m > alpha {
            violations += 1;
        }
        n += 1;
    }
    AccuracyReport {
        alpha,
        alpha_hat,
        violation_rate: if n == 0 { 0.0 } else { violations as f64 / n as f64 },
        estimates: n,
    }
}

/// `α = (128·s̄/ε₁)·ln(1/δ₁)·ln(2T·s0^{3/2}·s̲·s̄)`, evaluated with the
/// selection step's own share (ε₁, δ₁). Zero when ε is infinite.
pub fn calibrated_alpha(budget: &PrivacyBudget, svt: &SvtConfig, s0: usize) -> f64 {
    if budget.is_noise_free() {
        return 0.0;
    }
    let t = budget.horizon as f64;
    let s = s0 as f64;
    128.0 * svt.s_bar / budget.eps1 * (1.0 / budget.delta1).ln() * (2.0 * t * s.powf(1.5) * svt.s_under * svt.s_bar).ln()
}
