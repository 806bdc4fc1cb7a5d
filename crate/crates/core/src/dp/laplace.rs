use rand::Rng;
use rand_distr::Distribution;

use crate::error::PrivacyError;

/// Zero-centred Laplace distribution with density `exp(−|x|/b) / 2b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self, PrivacyError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(PrivacyError::InvalidParameter(format!("laplace scale must be positive, got {scale}")));
        }
        Ok(Laplace { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x / self.scale).exp()
        } else {
            1.0 - 0.5 * (-x / self.scale).exp()
        }
    }
}

impl Distribution<f64> for Laplace {
    /// Inverse-CDF sampling from a uniform on (−½, ½).
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random::<f64>() - 0.5;
            let tail = 1.0 - 2.0 * u.abs();
            if tail > 0.0 {
                return -self.scale * u.signum() * tail.ln();
            }
        }
    }
}
