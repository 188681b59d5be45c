//! Closed-form reference solutions and the initial data of the two
//! reference experiments.
//!
//! The Barenblatt profile
//!
//! ```text
//! B(t, x) = 2 (t + t*)^(-1/3) [1 - x^2 (t + t*)^(-2/3) / 12]_+
//! ```
//!
//! solves `u_t = (u u_x)_x` with support `|x| < rho(t) = sqrt(12) (t + t*)^(1/3)`
//! and mass `8 sqrt(12) / 3`. Splitting it at the moving contact point
//! `eta(t) = x0 (1 + t / t*)^(1/3)` gives a segregated weak solution of the
//! reaction-free two-species system.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{interpolate, Mesh, NodalField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattParams {
    t_star: f64,
    x0: f64,
    half_length: f64,
}

impl Default for BarenblattParams {
    fn default() -> Self {
        Self {
            t_star: 0.01,
            x0: -0.25,
            half_length: 2.0,
        }
    }
}

impl BarenblattParams {
    pub fn new(t_star: f64, x0: f64, half_length: f64) -> Result<Self> {
        if !(t_star > 0.0 && t_star.is_finite()) {
            return Err(Error::InvalidParameter(format!("t* must be positive, got {t_star}")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "half-length must be positive, got {half_length}"
            )));
        }
        let p = Self {
            t_star,
            x0,
            half_length,
        };
        if !(x0.abs() < p.support_radius(0.0)) {
            return Err(Error::InvalidParameter(format!(
                "contact point {x0} outside the initial support (radius {})",
                p.support_radius(0.0)
            )));
        }
        if !(p.support_radius(0.0) < half_length) {
            return Err(Error::InvalidParameter(
                "initial support does not fit in the domain".into(),
            ));
        }
        Ok(p)
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// `rho(t) = sqrt(12) (t + t*)^(1/3)`.
    pub fn support_radius(&self, t: f64) -> f64 {
        12f64.sqrt() * (t + self.t_star).cbrt()
    }

    /// Largest final time for which the support stays inside `(-L, L)`.
    pub fn horizon(&self) -> f64 {
        (self.half_length / 12f64.sqrt()).powi(3) - self.t_star
    }

    /// Checks `rho(t_end) < L`.
    pub fn check_horizon(&self, t_end: f64) -> Result<()> {
        if self.support_radius(t_end) < self.half_length {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "support radius {} at T = {t_end} reaches the boundary L = {}",
                self.support_radius(t_end),
                self.half_length
            )))
        }
    }

    /// Total mass, independent of time.
    pub fn mass() -> f64 {
        8.0 / 3.0 * 12f64.sqrt()
    }
}

pub fn barenblatt(t: f64, x: f64, p: &BarenblattParams) -> f64 {
    let scaled = x / p.support_radius(t);
    2.0 / (t + p.t_star).cbrt() * (1.0 - scaled * scaled).max(0.0)
}

/// Contact point `x0 (1 + t / t*)^(1/3)`.
pub fn eta(t: f64, p: &BarenblattParams) -> f64 {
    p.x0 * (1.0 + t / p.t_star).cbrt()
}

/// Heaviside step with `H(0) = 1/2`.
fn heaviside(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `(H(x - eta) B, H(eta - x) B)`: species 1 right of the contact point.
pub fn segregated_solution(t: f64, x: f64, p: &BarenblattParams) -> (f64, f64) {
    let b = barenblatt(t, x, p);
    let e = eta(t, p);
    (heaviside(x - e) * b, heaviside(e - x) * b)
}

/// Centre and width parameter of the invading Gaussian population.
const INVASION_CENTRE: f64 = 0.25;
const INVASION_WIDTH: f64 = 0.001;
const INVASION_PEAK: f64 = 0.22;
const INVASION_TOTAL: f64 = 0.45;

pub fn invasion_profile(x: f64) -> (f64, f64) {
    let d = x - INVASION_CENTRE;
    let u1 = INVASION_PEAK * (-(d * d) / INVASION_WIDTH).exp();
    (u1, INVASION_TOTAL - u1)
}

/// Nodal interpolation of the invasion data: a narrow Gaussian of the
/// first species inside a uniform total density of 0.45.
pub fn experiment1_initial(mesh: &Arc<Mesh>) -> Result<(NodalField, NodalField)> {
    Ok((
        interpolate(|x| invasion_profile(x).0, mesh)?,
        interpolate(|x| invasion_profile(x).1, mesh)?,
    ))
}

/// Segregated Barenblatt data `(u1_0, u2_0, r_0)` with `r_0 = H(x - x0)`,
/// the fraction of species 1.
pub fn experiment2_initial(
    mesh: &Arc<Mesh>,
    p: &BarenblattParams,
) -> Result<(NodalField, NodalField, NodalField)> {
    Ok((
        interpolate(|x| segregated_solution(0.0, x, p).0, mesh)?,
        interpolate(|x| segregated_solution(0.0, x, p).1, mesh)?,
        interpolate(|x| heaviside(x - p.x0), mesh)?,
    ))
}
