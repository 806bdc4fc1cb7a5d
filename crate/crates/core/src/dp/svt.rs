//! Noisy-threshold support selection.
//!
//! Candidates are scanned in ascending index order. Each comparison adds
//! `Lap(2ξ)` to the candidate value and `Lap(ξ)` to the threshold, and the
//! scan stops as soon as `cap` indices have been selected.

use log::warn;
use rand::Rng;
use rand_distr::Distribution;

use super::budget::PrivacyBudget;
use super::laplace::Laplace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvtVariant {
    /// Fresh threshold noise for every candidate.
    PerQuery,
    /// Classical sparse vector: one threshold draw per call.
    SharedThreshold,
}

impl SvtVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per-query" => Some(SvtVariant::PerQuery),
            "shared-threshold" => Some(SvtVariant::SharedThreshold),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SvtVariant::PerQuery => "per-query",
            SvtVariant::SharedThreshold => "shared-threshold",
        }
    }
}

/// Problem constants the selection is calibrated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvtConstants {
    pub d: usize,
    pub s0: usize,
    pub c_r: f64,
    pub c_x: f64,
    pub c_theta: f64,
    /// Compatibility constant φ².
    pub phi_sq: f64,
    pub gamma_floor: f64,
    pub variant: SvtVariant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvtConfig {
    /// Per-candidate privacy parameter ε'.
    pub eps_prime: f64,
    /// Threshold noise scale ξ; value noise uses 2ξ. Zero disables noise.
    pub xi: f64,
    /// Threshold multiplier Γ after flooring.
    pub gamma: f64,
    /// Γ as computed before flooring (may be negative or non-finite).
    pub gamma_raw: f64,
    pub cap: usize,
    /// `1 + 4·C_r·C_x·√s0/φ²`.
    pub s_bar: f64,
    /// `1 + 4·C_r·C_x/φ²`.
    pub s_under: f64,
    pub variant: SvtVariant,
}

impl SvtConfig {
    /// Calibrates the selection from the support-estimation share (ε₁, δ₁):
    ///
    /// * `ε' = ε₁·(8·s̄·ln(1/δ₁))^{-1/2}`
    /// * `ξ = (32·ln(1/δ₁))^{1/2} / ε'`
    /// * `Γ = s̄^{-1/2}·[(ξ·ln((1−δ)/ε) − C_θ) / √(ln d·ln T) − 1]`, floored
    /// * `cap = ⌈s0 + √s̄⌉`
    pub fn calibrate(budget: &PrivacyBudget, c: &SvtConstants) -> Self {
        let s_bar = 1.0 + 4.0 * c.c_r * c.c_x * (c.s0 as f64).sqrt() / c.phi_sq;
        let s_under = 1.0 + 4.0 * c.c_r * c.c_x / c.phi_sq;
        let log_inv_delta1 = (1.0 / budget.delta1).ln();
        let eps_prime = budget.eps1 / (8.0 * s_bar * log_inv_delta1).sqrt();
        let xi = if eps_prime.is_infinite() { 0.0 } else { (32.0 * log_inv_delta1).sqrt() / eps_prime };
        let gamma_raw = s_bar.powf(-0.5)
            * ((xi * ((1.0 - budget.delta) / budget.epsilon).ln() - c.c_theta)
                / ((c.d as f64).ln() * (budget.horizon as f64).ln()).sqrt()
                - 1.0);
        let gamma = if gamma_raw.is_finite() && gamma_raw >= c.gamma_floor {
            gamma_raw
        } else {
            if xi > 0.0 {
                warn!("threshold multiplier {gamma_raw} below floor {}, clamping", c.gamma_floor);
            }
            c.gamma_floor
        };
        let cap = (c.s0 as f64 + s_bar.sqrt()).ceil() as usize;
        SvtConfig { eps_prime, xi, gamma, gamma_raw, cap, s_bar, s_under, variant: c.variant }
    }

    /// Direct construction, mainly for tests and probes.
    pub fn with_scale(xi: f64, cap: usize, variant: SvtVariant) -> Self {
        SvtConfig {
            eps_prime: f64::NAN,
            xi,
            gamma: 1.0,
            gamma_raw: 1.0,
            cap,
            s_bar: 1.0,
            s_under: 1.0,
            variant,
        }
    }

    /// `4·λ·Γ·√s̄`.
    pub fn base_threshold(&self, lambda: f64) -> f64 {
        4.0 * lambda * self.gamma * self.s_bar.sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvtOutcome {
    /// Selected indices, ascending.
    pub selected: Vec<usize>,
    /// Indices actually compared before the scan ended.
    pub examined: Vec<usize>,
    pub cap_hit: bool,
}

/// Scans `values` (index, value) in ascending index order and selects `i`
/// when `value + ν_i > base_threshold + ζ_i`.
pub fn svt_select<R: Rng + ?Sized>(
    values: &[(usize, f64)],
    base_threshold: f64,
    config: &SvtConfig,
    rng: &mut R,
) -> SvtOutcome {
    let mut ordered = values.to_vec();
    ordered.sort_unstable_by_key(|&(i, _)| i);
    let noise = (config.xi > 0.0).then(|| {
        (
            Laplace::new(config.xi).expect("positive scale"),
            Laplace::new(2.0 * config.xi).expect("positive scale"),
        )
    });
    let shared_zeta = match (&noise, config.variant) {
        (Some((threshold_noise, _)), SvtVariant::SharedThreshold) => threshold_noise.sample(rng),
        _ => 0.0,
    };

    let mut out = SvtOutcome::default();
    if config.cap == 0 {
        out.cap_hit = true;
        return out;
    }
    for (i, value) in ordered {
        let (zeta, nu) = match &noise {
            Some((threshold_noise, value_noise)) => {
                let zeta = match config.variant {
                    SvtVariant::PerQuery => threshold_noise.sample(rng),
                    SvtVariant::SharedThreshold => shared_zeta,
                };
                (zeta, value_noise.sample(rng))
            }
            None => (0.0, 0.0),
        };
        out.examined.push(i);
        if value + nu > base_threshold + zeta {
            out.selected.push(i);
            if out.selected.len() >= config.cap {
                out.cap_hit = true;
                break;
            }
        }
    }
    out
}
