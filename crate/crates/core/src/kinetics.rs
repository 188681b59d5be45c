//! Lotka-Volterra reaction terms and the environmental drift.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    First,
    Second,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::First, Species::Second];

    pub fn index(self) -> usize {
        match self {
            Species::First => 0,
            Species::Second => 1,
        }
    }
}

/// Whether the two species share their growth and competition coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KineticsMode {
    /// `f_i = u_i (alpha - beta (u_1 + u_2))`.
    #[serde(rename = "nd")]
    NonDifferentiated,
    /// `f_i = u_i (alpha_i - beta_i1 u_1 - beta_i2 u_2)`.
    #[serde(rename = "d")]
    Differentiated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LotkaVolterraParams {
    alpha: [f64; 2],
    beta: [[f64; 2]; 2],
    mode: KineticsMode,
}

impl LotkaVolterraParams {
    /// Shared coefficients for both species.
    pub fn non_differentiated(alpha: f64, beta: f64) -> Result<Self> {
        Self::new([alpha; 2], [[beta; 2]; 2], KineticsMode::NonDifferentiated)
    }

    pub fn differentiated(alpha: [f64; 2], beta: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(alpha, beta, KineticsMode::Differentiated)
    }

    /// No reaction at all (a non-differentiated system with zero rates).
    pub fn zero() -> Self {
        Self {
            alpha: [0.0; 2],
            beta: [[0.0; 2]; 2],
            mode: KineticsMode::NonDifferentiated,
        }
    }

    pub fn new(alpha: [f64; 2], beta: [[f64; 2]; 2], mode: KineticsMode) -> Result<Self> {
        let all = alpha.iter().chain(beta.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "Lotka-Volterra coefficients must be finite".into(),
            ));
        }
        if mode == KineticsMode::NonDifferentiated {
            let b = beta[0][0];
            if alpha[0] != alpha[1] || beta.iter().flatten().any(|&v| v != b) {
                return Err(Error::InvalidParameter(
                    "non-differentiated kinetics need equal alpha_i and equal beta_ij".into(),
                ));
            }
        }
        Ok(Self { alpha, beta, mode })
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn beta(&self) -> [[f64; 2]; 2] {
        self.beta
    }

    pub fn mode(&self) -> KineticsMode {
        self.mode
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().chain(self.beta.iter().flatten()).all(|&v| v == 0.0)
    }

    /// Per-capita rate `alpha_i - beta_i1 u1 - beta_i2 u2`.
    pub fn per_capita(&self, species: Species, u1: f64, u2: f64) -> f64 {
        let i = species.index();
        self.alpha[i] - (self.beta[i][0] * u1 + self.beta[i][1] * u2)
    }

    /// Reaction rate `f_i(u1, u2)`.
    pub fn rate(&self, species: Species, u1: f64, u2: f64) -> f64 {
        let own = [u1, u2][species.index()];
        own * self.per_capita(species, u1, u2)
    }

    /// `F = f_1 + f_2`.
    pub fn total_rate(&self, u1: f64, u2: f64) -> f64 {
        self.rate(Species::First, u1, u2) + self.rate(Species::Second, u1, u2)
    }

    /// Reaction terms `(F_1, F_2)` of the total-density / fraction
    /// formulation, with `u_1 = r u` and `u_2 = (1 - r) u`.
    pub fn ratio_rates(&self, u: f64, r: f64) -> Result<(f64, f64)> {
        if !(u > 0.0) {
            return Err(Error::DegenerateDensity(u));
        }
        Ok(self.ratio_rates_unchecked(u, r))
    }

    /// [`Self::ratio_rates`] without the positivity check. `F_2` is evaluated
    /// in the form `r (1 - r) (g_1 - g_2)` with `g_i = f_i / u_i`, which has
    /// no removable singularity at `r = 0` or `r = 1`.
    pub fn ratio_rates_unchecked(&self, u: f64, r: f64) -> (f64, f64) {
        let (u1, u2) = (r * u, (1.0 - r) * u);
        let f1 = self.total_rate(u1, u2);
        let f2 = r
            * (1.0 - r)
            * (self.per_capita(Species::First, u1, u2) - self.per_capita(Species::Second, u1, u2));
        (f1, f2)
    }
}

type DriftFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Environmental drift `q(t, x)`; must vanish on the boundary.
#[derive(Clone, Default)]
pub struct DriftField {
    q: Option<Arc<DriftFn>>,
}

impl DriftField {
    pub fn zero() -> Self {
        Self { q: None }
    }

    pub fn new(q: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            q: Some(Arc::new(q)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_none()
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.q.as_ref().map_or(0.0, |q| q(t, x))
    }

    /// Checks `q(t, left) = q(t, right) = 0`.
    pub fn check_boundary(&self, t: f64, left: f64, right: f64) -> Result<()> {
        for x in [left, right] {
            let value = self.eval(t, x);
            if value != 0.0 {
                return Err(Error::DriftOnBoundary { time: t, x, value });
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.q {
            None => f.write_str("DriftField(0)"),
            Some(_) => f.write_str("DriftField(<fn>)"),
        }
    }
}
