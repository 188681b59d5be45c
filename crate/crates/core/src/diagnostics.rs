//! Oscillation measure, error norms and conservation monitors.

use serde::Serialize;

use crate::error::Result;
use crate::mesh::{lumped_product, NodalField};

/// Per-step monitor values written to the diagnostics CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub osc_u: f64,
    pub mass_u1: f64,
    pub mass_u2: f64,
    /// Smallest nodal value of the scheme's density unknowns.
    pub min_u: f64,
    pub max_u: f64,
    pub rel_l2_err: Option<f64>,
    pub inner_iters: usize,
}

fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Discrete count of sign changes of `u_x`, weighted by the mesh size:
/// `h * sum_j |s_{j+1} - s_j|` with `s_j = sign(u_{j+1} - u_j)`.
///
/// Only defined on uniform meshes.
pub fn osc(u: &NodalField) -> Result<f64> {
    let h = u.mesh().uniform_spacing()?;
    let signs: Vec<i32> = u.values().windows(2).map(|w| sign(w[1] - w[0])).collect();
    let jumps: i32 = signs.windows(2).map(|s| (s[1] - s[0]).abs()).sum();
    Ok(h * f64::from(jumps))
}

/// Lumped-norm relative error of `u` against the interpolant of `exact(t, .)`.
///
/// Falls back to the absolute error when the reference norm is below 1e-14.
pub fn relative_l2_error(u: &NodalField, exact: impl Fn(f64, f64) -> f64, t: f64) -> Result<f64> {
    let reference = crate::mesh::interpolate(|x| exact(t, x), u.mesh())?;
    let diff = u.zip_with(&reference, |a, b| a - b)?;
    let num = lumped_product(&diff, &diff)?.sqrt();
    let den = lumped_product(&reference, &reference)?.sqrt();
    Ok(if den < 1e-14 { num } else { num / den })
}

/// `(u, 1)^h`.
pub fn discrete_mass(u: &NodalField) -> f64 {
    u.mesh()
        .lumped_weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v)
        .sum()
}

/// Time average of a sampled signal by the trapezoid rule.
pub fn time_average(times: &[f64], values: &[f64]) -> f64 {
    if times.len() < 2 {
        return values.first().copied().unwrap_or(0.0);
    }
    let span = times[times.len() - 1] - times[0];
    let integral: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    integral / span
}
