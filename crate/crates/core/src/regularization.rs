//! Truncation of scheme coefficients to `[eps, 1/eps]`.

use crate::error::{Error, Result};
use crate::mesh::NodalField;

/// Truncation level, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `s` clamped to `[eps, 1/eps]`.
pub fn lambda_eps(s: f64, eps: Epsilon) -> f64 {
    s.clamp(eps.0, eps.0.recip())
}

/// Elementwise constant lift: `lambda_eps` of the P1 value at each element
/// midpoint.
pub fn lambda_eps_midpoint(z: &NodalField, eps: Epsilon) -> Vec<f64> {
    z.values()
        .windows(2)
        .map(|w| lambda_eps(0.5 * (w[0] + w[1]), eps))
        .collect()
}
