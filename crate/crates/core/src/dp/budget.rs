use crate::error::PrivacyError;

/// `⌈log₂ n⌉`, with `ceil_log2(1) = 0`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n > 0, "ceil_log2 of zero");
    usize::BITS - (n - 1).leading_zeros()
}

/// Total (ε, δ) and its even split between support estimation (ε₁, δ₁) and
/// the Gram tree (ε₂, δ₂):
///
/// `δ₁ = δ₂ = δ / (2⌈log₂T⌉)`, `ε₁ = ε₂ = ε / (2⌈log₂T⌉·ln(1/δ₂))`.
///
/// `epsilon = ∞` is accepted and means "no noise anywhere".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub eps1: f64,
    pub delta1: f64,
    pub eps2: f64,
    pub delta2: f64,
    pub horizon: usize,
    /// `⌈log₂T⌉`.
    pub log_t: u32,
}

pub fn split_budget(epsilon: f64, delta: f64, horizon: usize) -> Result<PrivacyBudget, PrivacyError> {
    if !(epsilon > 0.0) {
        return Err(PrivacyError::InvalidBudget(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PrivacyError::InvalidBudget(format!("delta must lie in (0, 1), got {delta}")));
    }
    if horizon < 2 {
        return Err(PrivacyError::InvalidBudget(format!("horizon must be at least 2, got {horizon}")));
    }
    let log_t = ceil_log2(horizon);
    let l = log_t as f64;
    let delta2 = delta / (2.0 * l);
    let eps2 = epsilon / (2.0 * l * (1.0 / delta2).ln());
    Ok(PrivacyBudget { epsilon, delta, eps1: eps2, delta1: delta2, eps2, delta2, horizon, log_t })
}

impl PrivacyBudget {
    pub fn is_noise_free(&self) -> bool {
        self.epsilon.is_infinite()
    }
}

/// ε' of the k-fold adaptive composition of (ε, δ)-DP mechanisms at slack δ':
/// `√(2k·ln(1/δ'))·ε + k·ε·(e^ε − 1)`. The composite is (ε', kδ + δ')-DP.
pub fn compose_advanced(eps: f64, _delta: f64, k: u64, delta_prime: f64) -> f64 {
    let k = k as f64;
    (2.0 * k * (1.0 / delta_prime).ln()).sqrt() * eps + k * eps * eps.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMethod {
    Basic,
    Advanced,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composition {
    pub epsilon: f64,
    pub delta: f64,
    pub method: CompositionMethod,
}

/// Tightest of basic and advanced composition for `k` uses of an (ε, δ)
/// mechanism, when the result has to fit within `delta_target`.
///
/// Advanced composition is only available when `kδ < delta_target`, in which
/// case the leftover is spent as the slack δ'.
pub fn compose(eps: f64, delta: f64, k: u64, delta_target: f64) -> Composition {
    if k == 0 {
        return Composition { epsilon: 0.0, delta: 0.0, method: CompositionMethod::Empty };
    }
    let kf = k as f64;
    let basic = Composition { epsilon: kf * eps, delta: kf * delta, method: CompositionMethod::Basic };
    let slack = delta_target - kf * delta;
    if slack > 0.0 {
        let adv = compose_advanced(eps, delta, k, slack);
        if adv < basic.epsilon {
            return Composition { epsilon: adv, delta: kf * delta + slack, method: CompositionMethod::Advanced };
        }
    }
    basic
}

/// Privacy spent by one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    pub support_estimation: Composition,
    pub tree: Composition,
    pub epsilon_spent: f64,
    pub delta_spent: f64,
    pub epsilon_budget: f64,
    pub delta_budget: f64,
}

impl BudgetReport {
    /// Composes `se_invocations` support-estimation calls at (ε₁, δ₁) and a
    /// tree in which every record enters `nodes_per_record` nodes at
    /// (ε_node, δ_node). Each side gets half of δ as its target, and the two
    /// sides add up by basic composition.
    pub fn account(
        budget: &PrivacyBudget,
        se_invocations: u64,
        nodes_per_record: u64,
        eps_node: f64,
        delta_node: f64,
    ) -> Self {
        let half = budget.delta / 2.0;
        let support_estimation = compose(budget.eps1, budget.delta1, se_invocations, half);
        let tree = compose(eps_node, delta_node, nodes_per_record, half);
        BudgetReport {
            support_estimation,
            tree,
            epsilon_spent: support_estimation.epsilon + tree.epsilon,
            delta_spent: support_estimation.delta + tree.delta,
            epsilon_budget: budget.epsilon,
            delta_budget: budget.delta,
        }
    }

    pub fn within_budget(&self) -> bool {
        self.epsilon_spent <= self.epsilon_budget && self.delta_spent <= self.delta_budget * (1.0 + 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(16), 4);
        assert_eq!(ceil_log2(17), 5);
    }

    #[test]
    fn split_hand_evaluated() {
        let b = split_budget(1.0, 0.01, 16).unwrap();
        assert_eq!(b.log_t, 4);
        assert!((b.delta1 - 0.00125).abs() < 1e-18);
        assert_eq!(b.delta1, b.delta2);
        let expected = 1.0 / (8.0 * 800f64.ln());
        assert!((b.eps1 - expected).abs() < 1e-15);
        assert_eq!(b.eps1, b.eps2);
    }

    #[test]
    fn smallest_horizon() {
        let b = split_budget(1.0, 0.2, 2).unwrap();
        assert_eq!(b.log_t, 1);
        assert!((b.delta1 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn linear_in_epsilon() {
        let a = split_budget(0.7, 0.01, 100).unwrap();
        let b = split_budget(1.4, 0.01, 100).unwrap();
        assert!((b.eps1 - 2.0 * a.eps1).abs() < 1e-15);
        assert!((b.eps2 - 2.0 * a.eps2).abs() < 1e-15);
        assert_eq!(a.delta1, b.delta1);
        assert_eq!(a.delta2, b.delta2);
    }

    #[test]
    fn rejects_bad_budgets() {
        assert!(split_budget(0.0, 0.1, 8).is_err());
        assert!(split_budget(-1.0, 0.1, 8).is_err());
        assert!(split_budget(1.0, 0.0, 8).is_err());
        assert!(split_budget(1.0, 1.0, 8).is_err());
        assert!(split_budget(1.0, 0.1, 1).is_err());
        assert!(split_budget(f64::INFINITY, 0.1, 8).unwrap().is_noise_free());
    }

    #[test]
    fn advanced_composition_hand_value() {
        let v = compose_advanced(0.1, 0.0, 1, (-1f64).exp());
        let expected = 2f64.sqrt() * 0.1 + 0.1 * (0.1f64.exp() - 1.0);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.15193).abs() < 1e-5);
    }

    #[test]
    fn advanced_composition_limits_and_monotonicity() {
        assert!(compose_advanced(1e-12, 0.0, 10, 1e-5) < 1e-10);
        let mut last = 0.0;
        for k in 1..50 {
            let v = compose_advanced(0.05, 0.0, k, 1e-6);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn advanced_first_order_term() {
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let k = 20;
            let delta = 1e-5;
            let lead = (2.0 * k as f64 * (1.0_f64 / delta).ln()).sqrt() * eps;
            let v = compose_advanced(eps, 0.0, k, delta);
            assert!((v - lead) / lead <= eps);
        }
    }

    #[test]
    fn compose_picks_tighter_route() {
        let basic_only = compose(0.1, 0.01, 10, 0.1);
        assert_eq!(basic_only.method, CompositionMethod::Basic);
        let many = compose(0.001, 1e-9, 10_000, 1e-3);
        assert_eq!(many.method, CompositionMethod::Advanced);
        assert!(many.epsilon < 10.0);
        assert!(many.delta <= 1e-3 * (1.0 + 1e-12));
    }
}
