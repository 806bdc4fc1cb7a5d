//! The thresholded-LASSO decision loop, private and otherwise.
//!
//! At every round `t = 2^ℓ` the support is re-estimated from all data so far
//! and frozen for the episode `[2^ℓ, 2^{ℓ+1} − 1]`. Each round the arm is the
//! argmax of `⟨x_k, θ̂⟩`, where `θ̂` is a ridge fit on the frozen support
//! computed from the (noisy) Gram tree over rounds `1..t−1`.

mod estimation;
mod schedule;

pub use estimation::{sparse_estimation, SupportEstimate};
pub use schedule::{lambda_schedule, EpisodeSchedule};

use nalgebra::DVector;
use rand::Rng;

use crate::dp::{split_budget, BudgetReport, PrivacyBudget, SvtConfig, SvtConstants, SvtVariant, WishartParams};
use crate::environment::{argmax_lowest, BanditInstance, ContextSet};
use crate::error::PolicyError;
use crate::gram_tree::{extract_regression, NoisyGramTree, Retention};
use crate::rng::SimRng;
use crate::sparse_regression::{restricted_l2_fit, LassoOptions, RegressionProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    PrivateThresholdLasso,
    /// Same code path with every noise source switched off.
    NonPrivateThresholdLasso,
    Random,
    /// Ridge fit on the true support, no privacy noise.
    OracleSupport,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::PrivateThresholdLasso => "private-threshold-lasso",
            PolicyKind::NonPrivateThresholdLasso => "nonprivate-threshold-lasso",
            PolicyKind::Random => "random",
            PolicyKind::OracleSupport => "oracle-support",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            PolicyKind::PrivateThresholdLasso,
            PolicyKind::NonPrivateThresholdLasso,
            PolicyKind::Random,
            PolicyKind::OracleSupport,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub lambda0: f64,
    /// `f64::INFINITY` disables all privacy noise.
    pub epsilon: f64,
    pub delta: f64,
    pub gamma_floor: f64,
    /// Per-coordinate variance s̃ of the Wishart node noise.
    pub wishart_scale: f64,
    pub wishart_k: Option<u64>,
    pub svt_variant: SvtVariant,
    /// Compatibility constant φ² used for s̄; defaults to the instance's
    /// analytic value.
    pub phi_sq: Option<f64>,
    pub lasso: LassoOptions,
    /// Ridge for the restricted fit; defaults to `10⁻⁶·trace(V)/|S|`.
    pub ridge: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            lambda0: 0.003,
            epsilon: 1.0,
            delta: 1e-3,
            gamma_floor: 1.0,
            wishart_scale: 1.0,
            wishart_k: None,
            svt_variant: SvtVariant::PerQuery,
            phi_sq: None,
            lasso: LassoOptions::default(),
            ridge: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub instant_regret: f64,
    pub cumulative_regret: f64,
    pub episode: u32,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: PolicyKind,
    pub rounds: Vec<RoundRecord>,
    /// First round of each episode.
    pub episode_marks: Vec<usize>,
    /// Support estimate made at each update round, in order.
    pub snapshots: Vec<SupportEstimate>,
    /// Present for private runs with finite ε.
    pub budget_report: Option<BudgetReport>,
    /// Standard deviation of the off-diagonal query noise at the last round.
    pub sigma_b: Option<f64>,
    pub noise_draws: usize,
    pub lasso_nonconverged: usize,
    pub svt: Option<SvtConfig>,
}

impl Trajectory {
    pub fn total_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cumulative_regret)
    }

    pub fn arms(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.arm).collect()
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    kind: PolicyKind,
    config: PolicyConfig,
    d: usize,
    c_theta: f64,
    pub budget: Option<PrivacyBudget>,
    pub svt: Option<SvtConfig>,
    history: RegressionProblem,
    tree: Option<NoisyGramTree>,
    pub current_support: SupportEstimate,
    pub theta_hat_priv: DVector<f64>,
    pub lambda_t: f64,
    /// Rounds completed.
    pub t: usize,
    warm_start: Option<DVector<f64>>,
    snapshots: Vec<SupportEstimate>,
    se_invocations: u64,
    lasso_nonconverged: usize,
}

impl PolicyState {
    pub fn new(
        kind: PolicyKind,
        config: &PolicyConfig,
        instance: &BanditInstance,
        horizon: usize,
    ) -> Result<Self, PolicyError> {
        let d = instance.d;
        let epsilon = match kind {
            PolicyKind::PrivateThresholdLasso => config.epsilon,
            _ => f64::INFINITY,
        };
        let thresholded = matches!(kind, PolicyKind::PrivateThresholdLasso | PolicyKind::NonPrivateThresholdLasso);

        let (budget, svt) = if thresholded {
            let budget = split_budget(epsilon, config.delta, horizon.max(2))?;
            let phi_sq = config
                .phi_sq
                .unwrap_or_else(|| instance.context_dist.compatibility_sq(d, instance.s0, instance.c_x));
            let constants = SvtConstants {
                d,
                s0: instance.s0,
                c_r: instance.c_r(),
                c_x: instance.c_x,
                c_theta: instance.c_theta,
                phi_sq,
                gamma_floor: config.gamma_floor,
                variant: config.svt_variant,
            };
            let svt = SvtConfig::calibrate(&budget, &constants);
            (Some(budget), Some(svt))
        } else {
            (None, None)
        };

        let tree = match kind {
            PolicyKind::Random => None,
            _ => {
                let noise = match &budget {
                    Some(b) if !b.is_noise_free() => {
                        Some(WishartParams::from_budget(d, b, config.wishart_scale, config.wishart_k)?)
                    }
                    _ => None,
                };
                Some(NoisyGramTree::new(horizon.max(1), d + 1, noise, Retention::Streaming))
            }
        };

        let cap = svt.as_ref().map_or(instance.s0, |s| s.cap);
        let mut current_support = SupportEstimate::empty(0, 0.0, cap);
        if kind == PolicyKind::OracleSupport {
            current_support.s0_candidates = instance.support.clone();
            current_support.s1_selected = instance.support.clone();
        }

        Ok(PolicyState {
            kind,
            config: config.clone(),
            d,
            c_theta: instance.c_theta,
            budget,
            svt,
            history: RegressionProblem::empty(d, 0.0, instance.c_theta),
            tree,
            current_support,
            theta_hat_priv: DVector::zeros(d),
            lambda_t: f64::NAN,
            t: 0,
            warm_start: None,
            snapshots: Vec::new(),
            se_invocations: 0,
            lasso_nonconverged: 0,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Picks the arm for round `t + 1`. Only uses data through round `t`.
    pub fn choose(&mut self, contexts: &ContextSet, mech_rng: &mut SimRng) -> Result<usize, PolicyError> {
        let arms = contexts.vectors.len();
        if self.kind == PolicyKind::Random {
            return Ok(mech_rng.random_range(0..arms.max(1)));
        }
        let round = self.t + 1;
        if let Some(svt) = &self.svt {
            if round.is_power_of_two() {
                self.lambda_t = lambda_schedule(self.config.lambda0, round, self.d);
                let (estimate, fit) = sparse_estimation(
                    &self.history,
                    self.lambda_t,
                    svt,
                    EpisodeSchedule::episode_of(round),
                    self.config.lasso,
                    self.warm_start.as_ref(),
                    mech_rng,
                );
                if let Some(fit) = fit {
                    self.se_invocations += 1;
                    if !fit.converged {
                        self.lasso_nonconverged += 1;
                        log::debug!("lasso hit its iteration cap at t={round} (residual {:e})", fit.residual);
                    }
                    self.warm_start = Some(fit.theta);
                }
                self.snapshots.push(estimate.clone());
                self.current_support = estimate;
            }
        }
        self.refit()?;
        Ok(argmax_lowest(contexts.vectors.iter().map(|x| x.dot(&self.theta_hat_priv))))
    }

    fn refit(&mut self) -> Result<(), PolicyError> {
        let support = &self.current_support.s1_selected;
        let tree = self.tree.as_ref().expect("non-random policies own a tree");
        if support.is_empty() || self.t == 0 {
            self.theta_hat_priv = DVector::zeros(self.d);
            return Ok(());
        }
        let gram = tree.query_prefix(self.t)?;
        let restricted = extract_regression(&gram, support, self.t)?;
        let ridge = self.config.ridge.unwrap_or_else(|| restricted.default_ridge());
        self.theta_hat_priv = restricted_l2_fit(&restricted, self.d, self.c_theta, ridge)?;
        Ok(())
    }

    /// Records the pulled context and its reward.
    pub fn observe(&mut self, x: &DVector<f64>, reward: f64, mech_rng: &mut SimRng) -> Result<(), PolicyError> {
        if let Some(tree) = &mut self.tree {
            tree.insert(x, reward, mech_rng)?;
        }
        if self.svt.is_some() {
            self.history.push(x, reward);
        }
        self.t += 1;
        Ok(())
    }

    pub fn budget_report(&self) -> Option<BudgetReport> {
        let budget = self.budget.as_ref()?;
        let params = self.tree.as_ref()?.noise_params()?;
        let nodes = self.tree.as_ref()?.nodes_per_record() as u64;
        Some(BudgetReport::account(budget, self.se_invocations, nodes, params.eps_node, params.delta_node))
    }

    /// Empirical standard deviation of the strictly-upper entries of
    /// `G̃_t − G_t` at the current round.
    pub fn sigma_b(&self) -> Option<f64> {
        let tree = self.tree.as_ref()?;
        tree.noise_params()?;
        if self.t == 0 {
            return None;
        }
        let diff = tree.query_prefix(self.t).ok()? - tree.exact_prefix(self.t).ok()?;
        let n = diff.nrows();
        let entries: Vec<f64> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|ij| diff[ij]).collect();
        if entries.len() < 2 {
            return None;
        }
        let mean = entries.iter().sum::<f64>() / entries.len() as f64;
        let var = entries.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (entries.len() - 1) as f64;
        Some(var.sqrt())
    }

    fn into_trajectory(self, rounds: Vec<RoundRecord>, episode_marks: Vec<usize>) -> Trajectory {
        Trajectory {
            kind: self.kind,
            budget_report: self.budget_report(),
            sigma_b: self.sigma_b(),
            noise_draws: self.tree.as_ref().map_or(0, |t| t.noise_draws()),
            lasso_nonconverged: self.lasso_nonconverged,
            svt: self.svt,
            snapshots: self.snapshots,
            rounds,
            episode_marks,
        }
    }
}

/// Drives one policy over `horizon` rounds. Contexts and rewards come from
/// `env_rng`; privacy noise and random-arm draws come from `mech_rng`.
pub fn run(
    kind: PolicyKind,
    config: &PolicyConfig,
    instance: &BanditInstance,
    horizon: usize,
    env_rng: &mut SimRng,
    mech_rng: &mut SimRng,
) -> Result<Trajectory, PolicyError> {
    let mut state = PolicyState::new(kind, config, instance, horizon)?;
    let mut rounds = Vec::with_capacity(horizon);
    let mut episode_marks = Vec::new();
    let mut cumulative = 0.0;
    for t in 1..=horizon {
        if t.is_power_of_two() {
            episode_marks.push(t);
        }
        let contexts = instance.sample_contexts(t, env_rng);
        let arm = state.choose(&contexts, mech_rng)?;
        let instant = instance.instant_regret(&contexts, arm)?;
        let x = &contexts.vectors[arm];
        let reward = instance.reward(x, env_rng);
        state.observe(x, reward, mech_rng)?;
        cumulative += instant;
        rounds.push(RoundRecord {
            t,
            arm,
            reward,
            instant_regret: instant,
            cumulative_regret: cumulative,
            episode: EpisodeSchedule::episode_of(t),
            support_size: state.current_support.s1_selected.len(),
        });
    }
    Ok(state.into_trajectory(rounds, episode_marks))
}

/// A comparison policy on the same environment streams as [`run`].
pub fn baseline_run(
    kind: PolicyKind,
    config: &PolicyConfig,
    instance: &BanditInstance,
    horizon: usize,
    env_rng: &mut SimRng,
    mech_rng: &mut SimRng,
) -> Result<Trajectory, PolicyError> {
    run(kind, config, instance, horizon, env_rng, mech_rng)
}
