//! Parameters and bookkeeping shared by the two fully discrete schemes.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::mesh::NodalField;
use crate::regularization::Epsilon;

pub const DEFAULT_MAX_INNER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeParams {
    pub tau: f64,
    /// Viscosity `delta` for the two-species scheme, `delta_B` for the
    /// total-density / fraction scheme.
    pub delta: f64,
    #[serde(serialize_with = "serialize_eps")]
    pub eps: Epsilon,
    pub tol: f64,
    pub max_inner: usize,
    pub t_end: f64,
}

fn serialize_eps<S: serde::Serializer>(eps: &Epsilon, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(eps.value())
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!("{what} is invalid: {v}")))
        };
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("time step", self.tau);
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("viscosity", self.delta);
        }
        if !(self.tol > 0.0) {
            return bad("tolerance", self.tol);
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidParameter("max_inner must be >= 1".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("final time", self.t_end);
        }
        Ok(())
    }

    /// Number of uniform steps covering `[0, T]` and the step actually used.
    /// `tau` is shrunk slightly when `T / tau` is not an integer.
    pub fn time_grid(&self) -> (usize, f64) {
        let steps = (self.t_end / self.tau - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            (0, self.tau)
        } else {
            (steps, self.t_end / steps as f64)
        }
    }
}

/// What the inner fixed-point loop did in one time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub time: f64,
    pub iterations: usize,
    /// Sup-norm change of the last accepted iterate.
    pub increment: f64,
    /// Residual of the summed two-species equations (non-differentiated
    /// kinetics only).
    pub summed_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub u1: NodalField,
    pub u2: NodalField,
    pub u: NodalField,
    pub r: Option<NodalField>,
}

/// Exact total density `u(t, x)` used for the error column.
pub type ExactTotal = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone, Default)]
pub struct RunOptions {
    /// Output times; mapped to the nearest step.
    pub snapshot_times: Vec<f64>,
    pub exact_total: Option<ExactTotal>,
    /// Reject runs whose fraction `r` leaves `[-band, 1 + band]`.
    pub fraction_band: Option<f64>,
}

impl fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunOptions")
            .field("snapshot_times", &self.snapshot_times)
            .field("exact_total", &self.exact_total.as_ref().map(|_| "<fn>"))
            .field("fraction_band", &self.fraction_band)
            .finish()
    }
}

impl RunOptions {
    pub(crate) fn snapshot_steps(&self, steps: usize, tau: f64, t_end: f64) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.snapshot_times.len());
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
                return Err(Error::InvalidParameter(format!(
                    "snapshot time {t} outside [0, {t_end}]"
                )));
            }
            let k = ((t / tau).round() as usize).min(steps);
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Output of a full run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// One record for the initial state and one per step.
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepReport>,
    /// Range of the fraction `r` over the run (fraction-based scheme only).
    pub fraction_range: Option<(f64, f64)>,
}

impl Trajectory {
    pub fn max_inner_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).max().unwrap_or(0)
    }

    pub fn min_density(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_u).fold(f64::INFINITY, f64::min)
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.diagnostics.last().expect("trajectory always holds the initial record")
    }
}
