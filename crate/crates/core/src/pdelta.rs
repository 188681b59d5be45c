//! Semi-implicit P1 scheme for the two-species system with nonlinear
//! viscosity `-(delta/2) (u_i (u_1 + u_2))_xx`.
//!
//! Each time step runs a fixed-point loop. Iterate `k` solves one coupled
//! linear system in `(u_1^k, u_2^k)`, with every nonlinear coefficient
//! frozen at iterate `k - 1` and the competition densities at the previous
//! time level:
//!
//! ```text
//! (u_i^k - u_i^old, chi)^h / tau
//!   + (1 + delta/2) (A_i grad(u_1^k + u_2^k), grad chi)
//!   + (delta/2) ((A_1 + A_2) grad u_i^k, grad chi)
//!   + (q A_i, grad chi)
//!   = (alpha_i u_i^k - lambda(u_i^{k-1}) (beta_i1 lambda(u_1^old) + beta_i2 lambda(u_2^old)), chi)^h
//! ```
//!
//! where `A_i` is the truncated midpoint value of `u_i^{k-1}`. Unknowns are
//! interleaved per node so the system has bandwidth 3.

use std::sync::Arc;

use crate::banded::{solve_banded, BandedMatrix, BandedSystem};
use crate::diagnostics::{discrete_mass, osc, relative_l2_error, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::kinetics::{DriftField, KineticsMode, LotkaVolterraParams};
use crate::mesh::{add_weighted_stiffness, assemble_weighted_stiffness, Mesh, NodalField};
use crate::regularization::{lambda_eps, lambda_eps_midpoint};
use crate::scheme::{RunOptions, SchemeParams, Snapshot, StepReport, Trajectory};

#[derive(Debug, Clone)]
pub struct PdeltaState {
    pub u1: NodalField,
    pub u2: NodalField,
    pub time: f64,
    /// Inner iterations used by each completed step.
    pub inner_iterations_used: Vec<usize>,
}

impl PdeltaState {
    pub fn new(u1: NodalField, u2: NodalField) -> Result<Self> {
        u1.ensure_same_mesh(&u2)?;
        Ok(Self {
            u1,
            u2,
            time: 0.0,
            inner_iterations_used: Vec::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.u1.mesh()
    }

    pub fn total(&self) -> NodalField {
        self.u1
            .zip_with(&self.u2, |a, b| a + b)
            .expect("species share a mesh")
    }
}

/// Drift contribution `(q A, grad chi)` for each node, with `q` taken at
/// element midpoints.
fn drift_load(mesh: &Mesh, q: &DriftField, t: f64, coeff: &[f64]) -> Vec<f64> {
    let mut load = vec![0.0; mesh.node_count()];
    if q.is_zero() {
        return load;
    }
    for (e, &a) in coeff.iter().enumerate() {
        let v = q.eval(t, mesh.midpoint(e)) * a;
        load[e] -= v;
        load[e + 1] += v;
    }
    load
}

/// Competition load `lambda(u_i^{k-1}) (beta_i1 lambda(u_1^old) + beta_i2 lambda(u_2^old))`
/// at node `m`.
fn competition(
    lv: &LotkaVolterraParams,
    i: usize,
    lag: f64,
    old: (f64, f64),
    eps: crate::regularization::Epsilon,
) -> f64 {
    let beta = lv.beta()[i];
    lambda_eps(lag, eps) * (beta[0] * lambda_eps(old.0, eps) + beta[1] * lambda_eps(old.1, eps))
}

/// Assembles the coupled linear system of one fixed-point iterate.
pub fn assemble_iterate(
    old: &PdeltaState,
    lag: (&NodalField, &NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    t_new: f64,
) -> Result<BandedSystem> {
    let mesh = old.mesh();
    lag.0.ensure_same_mesh(&old.u1)?;
    lag.1.ensure_same_mesh(&old.u1)?;
    let n = mesh.node_count();
    let w = mesh.lumped_weights();
    let coeff = [
        lambda_eps_midpoint(lag.0, p.eps),
        lambda_eps_midpoint(lag.1, p.eps),
    ];
    let sum: Vec<f64> = coeff[0].iter().zip(&coeff[1]).map(|(a, b)| a + b).collect();
    let old_vals = [old.u1.values(), old.u2.values()];
    let lag_vals = [lag.0.values(), lag.1.values()];
    let alpha = lv.alpha();

    let mut matrix = BandedMatrix::zeros(2 * n, 3);
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..2 {
        for s in 0..2 {
            add_weighted_stiffness(&mut matrix, mesh, &coeff[i], 1.0 + 0.5 * p.delta, |j| {
                (2 * j + i, 2 * j + s)
            });
        }
        add_weighted_stiffness(&mut matrix, mesh, &sum, 0.5 * p.delta, |j| (2 * j + i, 2 * j + i));

        let drift = drift_load(mesh, q, t_new, &coeff[i]);
        for m in 0..n {
            let row = 2 * m + i;
            matrix.add(row, row, w[m] * (1.0 / p.tau - alpha[i]));
            let react = competition(lv, i, lag_vals[i][m], (old_vals[0][m], old_vals[1][m]), p.eps);
            rhs[row] = w[m] * (old_vals[i][m] / p.tau - react) - drift[m];
        }
    }
    BandedSystem::new(matrix, rhs)
}

/// Residual of the sum of the two species equations, written for the total
/// density alone:
///
/// ```text
/// (u - u^old, chi)^h / tau + (1 + delta) ((A_1 + A_2) grad u, grad chi) + (q (A_1 + A_2), grad chi)
///   = (alpha u - (lambda(u_1^{k-1}) + lambda(u_2^{k-1})) beta (lambda(u_1^old) + lambda(u_2^old)), chi)^h
/// ```
///
/// Only meaningful for non-differentiated kinetics.
pub fn summed_residual(
    old: &PdeltaState,
    lag: (&NodalField, &NodalField),
    total: &NodalField,
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    t_new: f64,
) -> Result<f64> {
    if lv.mode() != KineticsMode::NonDifferentiated {
        return Err(Error::InvalidParameter(
            "summed scheme requires non-differentiated kinetics".into(),
        ));
    }
    let mesh = old.mesh();
    let w = mesh.lumped_weights();
    let sum: Vec<f64> = lambda_eps_midpoint(lag.0, p.eps)
        .iter()
        .zip(lambda_eps_midpoint(lag.1, p.eps))
        .map(|(a, b)| a + b)
        .collect();
    let mut stiffness = assemble_weighted_stiffness(&sum, mesh)?;
    stiffness.scale(1.0 + p.delta);
    let diffusion = stiffness.mul_vec(total.values());
    let drift = drift_load(mesh, q, t_new, &sum);
    let (alpha, beta) = (lv.alpha()[0], lv.beta()[0][0]);
    let eps = p.eps;

    let mut worst = 0.0_f64;
    for m in 0..mesh.node_count() {
        let u_old = old.u1.values()[m] + old.u2.values()[m];
        let lhs = w[m] * ((total.values()[m] - u_old) / p.tau - alpha * total.values()[m])
            + diffusion[m]
            + drift[m];
        let lagged = lambda_eps(lag.0.values()[m], eps) + lambda_eps(lag.1.values()[m], eps);
        let crowd = lambda_eps(old.u1.values()[m], eps) + lambda_eps(old.u2.values()[m], eps);
        let rhs = -w[m] * lagged * beta * crowd;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Advances one time step; returns the new state and the loop report.
pub fn pdelta_step(
    state: &PdeltaState,
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
) -> Result<(PdeltaState, StepReport)> {
    let mesh = Arc::clone(state.mesh());
    let t_new = state.time + p.tau;
    q.check_boundary(t_new, mesh.left(), mesh.right())?;

    let mut lag = (state.u1.clone(), state.u2.clone());
    let mut increment = f64::INFINITY;
    for k in 1..=p.max_inner {
        let system = assemble_iterate(state, (&lag.0, &lag.1), p, lv, q, t_new)?;
        let x = solve_banded(&system)?;
        let next = (
            NodalField::new(&mesh, x.iter().step_by(2).copied().collect())?,
            NodalField::new(&mesh, x.iter().skip(1).step_by(2).copied().collect())?,
        );
        increment = next.0.max_abs_diff(&lag.0)?.max(next.1.max_abs_diff(&lag.1)?);
        if increment < p.tol {
            let summed_residual = if lv.mode() == KineticsMode::NonDifferentiated {
                let total = next.0.zip_with(&next.1, |a, b| a + b)?;
                Some(summed_residual(state, (&lag.0, &lag.1), &total, p, lv, q, t_new)?)
            } else {
                None
            };
            let mut history = state.inner_iterations_used.clone();
            history.push(k);
            let new_state = PdeltaState {
                u1: next.0,
                u2: next.1,
                time: t_new,
                inner_iterations_used: history,
            };
            let report = StepReport {
                time: t_new,
                iterations: k,
                increment,
                summed_residual,
            };
            return Ok((new_state, report));
        }
        lag = next;
    }
    Err(Error::NotConverged {
        time: t_new,
        iterations: p.max_inner,
        residual: increment,
    })
}

pub(crate) fn record(
    u1: &NodalField,
    u2: &NodalField,
    u: &NodalField,
    min_over: &[&NodalField],
    time: f64,
    inner_iters: usize,
    options: &RunOptions,
) -> Result<DiagnosticsRecord> {
    let rel_l2_err = match &options.exact_total {
        Some(exact) => Some(relative_l2_error(u, |t, x| exact(t, x), time)?),
        None => None,
    };
    Ok(DiagnosticsRecord {
        time,
        osc_u: osc(u)?,
        mass_u1: discrete_mass(u1),
        mass_u2: discrete_mass(u2),
        min_u: min_over.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min),
        max_u: min_over.iter().map(|f| f.max()).fold(f64::NEG_INFINITY, f64::max),
        rel_l2_err,
        inner_iters,
    })
}

/// Runs the scheme from `initial` to `p.t_end` with uniform steps.
pub fn pdelta_run(
    initial: (NodalField, NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    options: &RunOptions,
) -> Result<Trajectory> {
    match pdelta_run_partial(initial, p, lv, q, options)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`pdelta_run`], but a failing step returns the trajectory computed so
/// far together with the error. Invalid input is still an `Err`.
pub fn pdelta_run_partial(
    initial: (NodalField, NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    options: &RunOptions,
) -> Result<(Trajectory, Option<Error>)> {
    p.validate()?;
    let (steps, tau) = p.time_grid();
    let step_params = SchemeParams { tau, ..*p };
    let snapshot_steps = options.snapshot_steps(steps, tau, p.t_end)?;
    let mut state = PdeltaState::new(initial.0, initial.1)?;

    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::with_capacity(steps + 1),
        steps: Vec::with_capacity(steps),
        fraction_range: None,
    };
    let observe = |state: &PdeltaState, n: usize, iters: usize, traj: &mut Trajectory| -> Result<()> {
        let u = state.total();
        traj.diagnostics.push(record(
            &state.u1,
            &state.u2,
            &u,
            &[&state.u1, &state.u2],
            state.time,
            iters,
            options,
        )?);
        if snapshot_steps.contains(&n) {
            traj.snapshots.push(Snapshot {
                time: state.time,
                u1: state.u1.clone(),
                u2: state.u2.clone(),
                u,
                r: None,
            });
        }
        Ok(())
    };

    observe(&state, 0, 0, &mut traj)?;
    for n in 1..=steps {
        let (mut next, report) = match pdelta_step(&state, &step_params, lv, q) {
            Ok(v) => v,
            Err(e) => return Ok((traj, Some(e))),
        };
        // Pin the clock to the grid rather than accumulating round-off.
        next.time = n as f64 * tau;
        if let Err(e) = observe(&next, n, report.iterations, &mut traj) {
            return Ok((traj, Some(e)));
        }
        traj.steps.push(report);
        state = next;
    }
    Ok((traj, None))
}
