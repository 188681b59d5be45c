//! Finite element laboratory for a segregating cross-diffusion model
//! of two competing populations,
//!
//! ```text
//! u_i,t - (u_i (u_1 + u_2)_x + u_i q)_x = f_i(u_1, u_2),   i = 1, 2,
//! ```
//!
//! on an interval with no-flux boundaries. Two regularized P1 schemes are
//! provided: a direct nonlinear-viscosity scheme in the species densities
//! ([`pdelta`]) and a total-density / fraction scheme ([`pb`]). Reference
//! solutions live in [`exact`] and the space-independent splitting models
//! in [`ode`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod kinetics;
pub mod mesh;
pub mod ode;
pub mod pb;
pub mod pdelta;
pub mod regularization;
pub mod scheme;

pub use banded::{solve_banded, BandedMatrix, BandedSystem};
pub use diagnostics::{discrete_mass, osc, relative_l2_error, DiagnosticsRecord};
pub use error::{Error, Result};
pub use exact::BarenblattParams;
pub use kinetics::{DriftField, KineticsMode, LotkaVolterraParams, Species};
pub use mesh::{Mesh, NodalField};
pub use pb::{pb_run, pb_run_partial, pb_step, PbState, TransportForm};
pub use pdelta::{pdelta_run, pdelta_run_partial, pdelta_step, PdeltaState};
pub use regularization::{lambda_eps, lambda_eps_midpoint, Epsilon};
pub use scheme::{RunOptions, SchemeParams, Snapshot, StepReport, Trajectory};
pub use experiment::{run_experiment, simulate, ExperimentConfig, ExperimentKind, RunOutput, Scheme, SchemeChoice};
