//! Empirical privacy audits on canonical neighbouring inputs.
//!
//! Each probe runs a mechanism `n` times on two inputs that differ by `gap`
//! and estimates `max |ln(p̂/q̂)|` over a fixed family of output events.

use rand::Rng;

use crate::dp::{svt_select, Laplace, SvtConfig, SvtVariant};
use crate::error::HarnessError;
use crate::rng::SimRng;

/// Events observed fewer times than this make the estimate unreliable.
pub const MIN_EVENT_COUNT: u64 = 100;

/// z for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// `x + Lap(gap/ε)` on inputs 0 and `gap`; events `{y > gap + j·b}`,
    /// `j = 0..5`, where the ratio is exactly `e^ε`.
    LaplaceScalar,
    /// The selection step on one coordinate with `ξ = gap/(2ε)`: the value
    /// noise alone then bounds the loss by ε. Inputs straddle the threshold
    /// by `±gap/2`; events are "selected" and "rejected".
    SvtSingleCoordinate,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::LaplaceScalar => "laplace-scalar",
            Mechanism::SvtSingleCoordinate => "svt-single-coordinate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "laplace-scalar" => Some(Mechanism::LaplaceScalar),
            "svt-single-coordinate" => Some(Mechanism::SvtSingleCoordinate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventEstimate {
    pub p_hat: f64,
    pub q_hat: f64,
    pub log_ratio: f64,
    /// Delta-method standard error of `ln(p̂/q̂)`.
    pub stderr: f64,
    /// Log ratio bounds from the two Wilson intervals.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub mechanism: Mechanism,
    pub epsilon: f64,
    pub gap: f64,
    pub trials: u64,
    pub epsilon_hat: f64,
    /// Standard error of the event attaining `epsilon_hat`.
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub events: Vec<EventEstimate>,
}

impl ProbeReport {
    /// `ε̂ ≤ ε + 3·stderr`.
    pub fn passes(&self) -> bool {
        self.epsilon_hat <= self.epsilon + 3.0 * self.stderr
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn estimate(kp: u64, kq: u64, n: u64) -> EventEstimate {
    let n_f = n as f64;
    let (p, q) = (kp as f64 / n_f, kq as f64 / n_f);
    let (p_lo, p_hi) = wilson(kp, n, Z95);
    let (q_lo, q_hi) = wilson(kq, n, Z95);
    EventEstimate {
        p_hat: p,
        q_hat: q,
        log_ratio: (p / q).ln(),
        stderr: ((1.0 - p) / (n_f * p) + (1.0 - q) / (n_f * q)).sqrt(),
        ci_low: (p_lo / q_hi).ln(),
        ci_high: (p_hi / q_lo).ln(),
    }
}

/// Runs `trials` draws per input. `gap = 0` feeds identical inputs (the
/// noise scale is then set as for `gap = 1`).
pub fn privacy_probe(
    mechanism: Mechanism,
    gap: f64,
    epsilon: f64,
    trials: u64,
    rng: &mut SimRng,
) -> Result<ProbeReport, HarnessError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) || !(gap >= 0.0 && gap.is_finite()) || trials == 0 {
        return Err(HarnessError::Config(format!(
            "probe needs finite epsilon > 0, gap >= 0 and trials > 0 (got {epsilon}, {gap}, {trials})"
        )));
    }
    let unit = if gap > 0.0 { gap } else { 1.0 };
    let counts: Vec<(u64, u64)> = match mechanism {
        Mechanism::LaplaceScalar => {
            let b = unit / epsilon;
            let lap = Laplace::new(b).map_err(HarnessError::Privacy)?;
            let cuts: Vec<f64> = (0..5).map(|j| gap + j as f64 * b).collect();
            let mut c = vec![(0u64, 0u64); cuts.len()];
            for _ in 0..trials {
                let y_far = gap + rng.sample(lap);
                let y_near = rng.sample(lap);
                for (slot, &cut) in c.iter_mut().zip(&cuts) {
                    slot.0 += u64::from(y_far > cut);
                    slot.1 += u64::from(y_near > cut);
                }
            }
            c
        }
        Mechanism::SvtSingleCoordinate => {
            let config = SvtConfig::with_scale(unit / (2.0 * epsilon), 1, SvtVariant::PerQuery);
            let (high, low) = (gap / 2.0, -gap / 2.0);
            let mut selected = (0u64, 0u64);
            for _ in 0..trials {
                selected.0 += svt_select(&[(0, high)], 0.0, &config, rng).selected.len() as u64;
                selected.1 += svt_select(&[(0, low)], 0.0, &config, rng).selected.len() as u64;
            }
            vec![selected, (trials - selected.0, trials - selected.1)]
        }
    };
    for &(a, b) in &counts {
        let min = a.min(b);
        if min < MIN_EVENT_COUNT {
            return Err(HarnessError::InsufficientTrials { count: min, min: MIN_EVENT_COUNT });
        }
    }
    let events: Vec<EventEstimate> = counts.iter().map(|&(a, b)| estimate(a, b, trials)).collect();
    let worst = events
        .iter()
        .copied()
        .max_by(|a, b| a.log_ratio.abs().total_cmp(&b.log_ratio.abs()))
        .expect("event family is non-empty");
    let (ci_low, ci_high) = if worst.log_ratio >= 0.0 {
        (worst.ci_low, worst.ci_high)
    } else {
        (-worst.ci_high, -worst.ci_low)
    };
    Ok(ProbeReport {
        mechanism,
        epsilon,
        gap,
        trials,
        epsilon_hat: worst.log_ratio.abs(),
        stderr: worst.stderr,
        ci_low,
        ci_high,
        events,
    })
}
