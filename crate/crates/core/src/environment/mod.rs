//! Synthetic sparse linear contextual bandit environments.
//!
//! An instance fixes an `s0`-sparse parameter θ and a context law. Each round
//! the environment draws one context vector per arm, the learner picks an arm,
//! and the reward is `⟨x, θ⟩ + η` with η uniform on `[-√3σ, √3σ]`, so
//! `|r| ≤ C_x·C_θ + √3σ` holds on every draw.

mod compatibility;

pub use compatibility::{compatibility_constant, CompatibilityEstimate};

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::EnvironmentError;
use crate::rng::SimRng;

/// Radius, in units of `√d`, at which the truncated Gaussian is cut off.
pub const TRUNCATION_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextDistribution {
    /// Standard Gaussian conditioned on `‖z‖ ≤ 1.5·√d`, scaled so the cut-off
    /// sphere has radius `C_x`.
    TruncatedGaussian,
    /// Uniform on the sphere of radius `C_x`.
    UniformSphere,
}

impl ContextDistribution {
    pub fn name(self) -> &'static str {
        match self {
            ContextDistribution::TruncatedGaussian => "truncated-gaussian",
            ContextDistribution::UniformSphere => "uniform-sphere",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "truncated-gaussian" => Some(ContextDistribution::TruncatedGaussian),
            "uniform-sphere" => Some(ContextDistribution::UniformSphere),
            _ => None,
        }
    }

    /// `E[x_i²]` for one coordinate; both laws are isotropic so the
    /// second-moment matrix is this value times the identity.
    pub fn coordinate_second_moment(self, d: usize, c_x: f64) -> f64 {
        let d_f = d as f64;
        match self {
            ContextDistribution::UniformSphere => c_x * c_x / d_f,
            ContextDistribution::TruncatedGaussian => {
                // E[‖z‖² | ‖z‖² ≤ R²] = d·F_{d+2}(R²)/F_d(R²) for chi-square CDFs.
                let cut = TRUNCATION_RADIUS * TRUNCATION_RADIUS * d_f;
                let f_d = ChiSquared::new(d_f).expect("d > 0").cdf(cut);
                let f_d2 = ChiSquared::new(d_f + 2.0).expect("d > 0").cdf(cut);
                let scale = c_x / (TRUNCATION_RADIUS * d_f.sqrt());
                scale * scale * f_d2 / f_d
            }
        }
    }

    /// Compatibility constant φ² of the arm-averaged second-moment matrix on
    /// a support of size `s0`. For `m·I` the cone minimum is `m/s0`.
    pub fn compatibility_sq(self, d: usize, s0: usize, c_x: f64) -> f64 {
        self.coordinate_second_moment(d, c_x) / s0 as f64
    }
}

/// Parameters accepted by [`generate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceParams {
    pub d: usize,
    pub s0: usize,
    pub arms: usize,
    pub theta_min: f64,
    pub c_theta: f64,
    pub c_x: f64,
    pub sigma: f64,
    pub context_dist: ContextDistribution,
    pub seed: u64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            d: 100,
            s0: 5,
            arms: 2,
            theta_min: 0.5,
            c_theta: 2.0,
            c_x: 1.0,
            sigma: 0.1,
            context_dist: ContextDistribution::UniformSphere,
            seed: 0,
        }
    }
}

/// Ground truth for one simulated problem. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    pub d: usize,
    pub s0: usize,
    pub arms: usize,
    pub theta: DVector<f64>,
    /// Sorted ascending.
    pub support: Vec<usize>,
    pub theta_min: f64,
    pub c_theta: f64,
    pub c_x: f64,
    pub sigma: f64,
    pub context_dist: ContextDistribution,
    pub seed: u64,
}

/// Draws a random `s0`-sparse θ with `min |θ_i| = theta_min` on the support
/// and `‖θ‖₂ ≤ c_theta`.
///
/// Magnitudes are `theta_min + h·u_i` with `u` uniform on `[0, 1]`, one `u_i`
/// pinned to zero, and `h ∈ [0, theta_min]` shrunk until the norm bound holds.
pub fn generate_instance(params: &InstanceParams) -> Result<BanditInstance, EnvironmentError> {
    let InstanceParams { d, s0, arms, theta_min, c_theta, c_x, sigma, .. } = *params;
    if s0 == 0 || s0 >= d {
        return Err(EnvironmentError::InvalidDimensions(format!(
            "need 1 <= s0 < d, got s0={s0}, d={d}"
        )));
    }
    if arms == 0 {
        return Err(EnvironmentError::InvalidDimensions("need at least one arm".into()));
    }
    if !(theta_min > 0.0) || !(c_x > 0.0) || !(sigma >= 0.0) {
        return Err(EnvironmentError::InvalidDimensions(
            "theta_min and c_x must be positive, sigma nonnegative".into(),
        ));
    }
    let floor_norm_sq = theta_min * theta_min * s0 as f64;
    // Allow rounding slack so the saturated case theta_min·√s0 == c_theta passes.
    if floor_norm_sq > c_theta * c_theta * (1.0 + 1e-12) {
        return Err(EnvironmentError::InvalidDimensions(format!(
            "theta_min·sqrt(s0) = {} exceeds c_theta = {c_theta}",
            floor_norm_sq.sqrt()
        )));
    }

    let mut rng: SimRng = rand::SeedableRng::seed_from_u64(params.seed);
    let mut support: Vec<usize> = sample(&mut rng, d, s0).into_vec();
    support.sort_unstable();

    let mut excess: Vec<f64> = (0..s0).map(|_| rng.random::<f64>()).collect();
    let pinned = rng.random_range(0..s0);
    excess[pinned] = 0.0;
    let signs: Vec<f64> = (0..s0).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();

    // Largest h ≤ theta_min with Σ (theta_min + h·u_i)² ≤ c_theta².
    let a: f64 = excess.iter().map(|u| u * u).sum();
    let b: f64 = 2.0 * theta_min * excess.iter().sum::<f64>();
    let c = floor_norm_sq - c_theta * c_theta;
    let mut h = theta_min;
    if c >= -1e-12 * c_theta * c_theta {
        h = 0.0;
    } else if a > 0.0 {
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let root = (-b + disc.sqrt()) / (2.0 * a);
        h = h.min(root.max(0.0));
    }

    let mut theta = DVector::zeros(d);
    for (slot, &i) in support.iter().enumerate() {
        theta[i] = signs[slot] * (theta_min + h * excess[slot]);
    }
    // The pinned coordinate is exactly theta_min in magnitude.
    theta[support[pinned]] = signs[pinned] * theta_min;

    Ok(BanditInstance {
        d,
        s0,
        arms,
        theta,
        support,
        theta_min,
        c_theta,
        c_x,
        sigma,
        context_dist: params.context_dist,
        seed: params.seed,
    })
}

/// Undoes rounding that leaves `‖v‖` a few ulps above `radius`.
fn within_radius(mut v: DVector<f64>, radius: f64) -> DVector<f64> {
    while v.norm() > radius {
        v *= 1.0 - f64::EPSILON;
    }
    v
}

/// One round's contexts, one vector per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSet {
    pub round: usize,
    pub vectors: Vec<DVector<f64>>,
}

impl BanditInstance {
    /// Reward magnitude bound `C_x·C_θ + √3σ`.
    pub fn c_r(&self) -> f64 {
        self.c_x * self.c_theta + 3f64.sqrt() * self.sigma
    }

    pub fn mean_reward(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.theta)
    }

    pub fn sample_contexts(&self, round: usize, rng: &mut SimRng) -> ContextSet {
        let vectors = (0..self.arms).map(|_| self.sample_context(rng)).collect();
        ContextSet { round, vectors }
    }

    fn sample_context(&self, rng: &mut SimRng) -> DVector<f64> {
        let d = self.d;
        match self.context_dist {
            ContextDistribution::UniformSphere => loop {
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = z.norm();
                if norm > 0.0 {
                    return within_radius(z * (self.c_x / norm), self.c_x);
                }
            },
            ContextDistribution::TruncatedGaussian => {
                let radius = TRUNCATION_RADIUS * (d as f64).sqrt();
                loop {
                    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let norm = z.norm();
                    if norm <= radius {
                        return within_radius(z * (self.c_x / radius), self.c_x);
                    }
                }
            }
        }
    }

    /// `⟨x, θ⟩ + η`, η uniform on `[-√3σ, √3σ]` (variance σ²).
    pub fn reward(&self, x: &DVector<f64>, rng: &mut SimRng) -> f64 {
        let half_width = 3f64.sqrt() * self.sigma;
        let noise = if half_width > 0.0 {
            rng.random_range(-half_width..=half_width)
        } else {
            0.0
        };
        self.mean_reward(x) + noise
    }

    /// Index of the best arm, ties broken toward the lowest index.
    pub fn best_arm(&self, contexts: &ContextSet) -> usize {
        argmax_lowest(contexts.vectors.iter().map(|x| self.mean_reward(x)))
    }

    /// `max_k ⟨x_k, θ⟩ − ⟨x_chosen, θ⟩`, clamped at zero against rounding.
    pub fn instant_regret(&self, contexts: &ContextSet, chosen: usize) -> Result<f64, EnvironmentError> {
        let k = contexts.vectors.len();
        if chosen >= k {
            return Err(EnvironmentError::ArmOutOfRange { arm: chosen, arms: k });
        }
        let best = contexts
            .vectors
            .iter()
            .map(|x| self.mean_reward(x))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((best - self.mean_reward(&contexts.vectors[chosen])).max(0.0))
    }
}

/// First index attaining the maximum. NaN scores never win.
pub fn argmax_lowest<I: IntoIterator<Item = f64>>(scores: I) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in scores.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// One row of the regret ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretEntry {
    pub t: usize,
    pub arm: usize,
    pub instant: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    pub per_round: Vec<RegretEntry>,
    pub episode_marks: Vec<usize>,
}

impl RegretLedger {
    pub fn record(&mut self, t: usize, arm: usize, instant: f64) {
        let instant = instant.max(0.0);
        let cumulative = self.total() + instant;
        self.per_round.push(RegretEntry { t, arm, instant, cumulative });
    }

    pub fn mark_episode(&mut self, t: usize) {
        self.episode_marks.push(t);
    }

    pub fn total(&self) -> f64 {
        self.per_round.last().map_or(0.0, |e| e.cumulative)
    }
}
