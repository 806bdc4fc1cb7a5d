//! Seed derivation for reproducible, non-overlapping random streams.
//!
//! Every replication `r` of an experiment with base seed `b` owns three
//! ChaCha8 streams keyed by `derive_seed(b, r, purpose)`:
//! `Purpose::Instance` draws θ, `Purpose::Environment` draws contexts and
//! reward noise, `Purpose::Mechanism` draws all privacy noise and random
//! baseline choices. Keeping mechanism noise on its own stream means a run
//! with noise disabled sees exactly the same contexts and rewards as a run
//! with noise enabled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Instance = 1,
    Environment = 2,
    Mechanism = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed: splitmix64 chained over (base, replication, purpose).
pub fn derive_seed(base: u64, replication: u64, purpose: Purpose) -> u64 {
    let a = splitmix64(base);
    let b = splitmix64(a ^ replication.wrapping_mul(0xD605_0E8D_3F5A_9C2B));
    splitmix64(b ^ purpose as u64)
}

pub fn stream(base: u64, replication: u64, purpose: Purpose) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base, replication, purpose))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purposes_and_replications_get_distinct_seeds() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..100 {
            for p in [Purpose::Instance, Purpose::Environment, Purpose::Mechanism] {
                assert!(seen.insert(derive_seed(42, r, p)));
            }
        }
    }
}
