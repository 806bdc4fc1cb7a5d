/// Rounds at which the support is re-estimated: `{2^{k−1} : k = 1..=⌊log₂T⌋+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeSchedule {
    pub horizon: usize,
    pub update_set: Vec<usize>,
}

impl EpisodeSchedule {
    pub fn new(horizon: usize) -> Self {
        let mut update_set = Vec::new();
        let mut t = 1usize;
        while t <= horizon.max(1) {
            update_set.push(t);
            t <<= 1;
        }
        EpisodeSchedule { horizon, update_set }
    }

    pub fn is_update(&self, t: usize) -> bool {
        t.is_power_of_two()
    }

    /// ℓ with `t ∈ [2^ℓ, 2^{ℓ+1} − 1]`.
    pub fn episode_of(t: usize) -> u32 {
        assert!(t >= 1, "rounds are 1-based");
        usize::BITS - 1 - t.leading_zeros()
    }
}

/// `λ_t = λ₀·√(2·ln t·ln d / t)`; at `t = 1`, where `ln t = 0`, this returns
/// `λ₀·√(2·ln d)` instead.
pub fn lambda_schedule(lambda0: f64, t: usize, d: usize) -> f64 {
    let ln_d = (d as f64).ln();
    if t <= 1 {
        return lambda0 * (2.0 * ln_d).sqrt();
    }
    let tf = t as f64;
    lambda0 * (2.0 * tf.ln() * ln_d / tf).sqrt()
}
