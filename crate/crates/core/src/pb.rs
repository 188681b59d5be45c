//! P1 scheme for the parabolic-hyperbolic reformulation in the total
//! density `u = u_1 + u_2` and the fraction `r = u_1 / u`:
//!
//! ```text
//! u_t - (u (u_x + q))_x          = F_1(u, r)
//! r_t - (u_x + q) r_x - dB r_xx  = F_2(u, r)
//! ```
//!
//! Each fixed-point iterate solves two independent tridiagonal systems with
//! the coefficients, the transport velocity and the reaction terms taken
//! from the previous iterate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::{solve_banded, BandedMatrix, BandedSystem};
use crate::error::{Error, Result};
use crate::kinetics::{DriftField, LotkaVolterraParams};
use crate::mesh::{
    add_weighted_stiffness, element_gradient, nodal_gradient, Mesh, NodalField,
};
use crate::pdelta::record;
use crate::regularization::{lambda_eps, lambda_eps_midpoint};
use crate::scheme::{RunOptions, SchemeParams, Snapshot, StepReport, Trajectory};

/// How the transport term of the fraction equation is tested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportForm {
    /// `((u_x + q) r_x, chi)^h` with nodal recovered gradients.
    #[default]
    Chi,
    /// `((u_x + q) r_x, chi_x)`, elementwise.
    GradChi,
}

#[derive(Debug, Clone)]
pub struct PbState {
    pub u: NodalField,
    pub r: NodalField,
    pub time: f64,
    pub inner_iterations_used: Vec<usize>,
}

impl PbState {
    pub fn new(u: NodalField, r: NodalField) -> Result<Self> {
        u.ensure_same_mesh(&r)?;
        Ok(Self {
            u,
            r,
            time: 0.0,
            inner_iterations_used: Vec::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.u.mesh()
    }

    /// `(r u, u - r u)` nodewise.
    pub fn species(&self) -> (NodalField, NodalField) {
        reconstruct(&self.u, &self.r).expect("u and r share a mesh")
    }
}

/// Species densities `u_1 = r u` and `u_2 = (1 - r) u`, rounded so that
/// `u_1 + u_2 == u` holds exactly in floating point.
pub fn reconstruct(u: &NodalField, r: &NodalField) -> Result<(NodalField, NodalField)> {
    u.ensure_same_mesh(r)?;
    let (u1, u2): (Vec<f64>, Vec<f64>) = u
        .values()
        .iter()
        .zip(r.values())
        .map(|(&u, &r)| split_exact(u, r))
        .unzip();
    Ok((NodalField::new(u.mesh(), u1)?, NodalField::new(u.mesh(), u2)?))
}

/// The larger share is computed by multiplication and the smaller one by
/// subtraction, which is exact (Sterbenz) for `r` in `[-1, 2]`. Outside that
/// range the smaller share is nudged by single ulps, which usually but not
/// always reaches `u`.
fn split_exact(u: f64, r: f64) -> (f64, f64) {
    let (mut small, big, first_is_big) = if r >= 0.5 {
        let big = r * u;
        (u - big, big, true)
    } else {
        let big = (1.0 - r) * u;
        (u - big, big, false)
    };
    for _ in 0..8 {
        let sum = big + small;
        if sum == u || !sum.is_finite() {
            break;
        }
        small = if sum < u { small.next_up() } else { small.next_down() };
    }
    if first_is_big {
        (big, small)
    } else {
        (small, big)
    }
}

/// Linear system of the total-density equation for one iterate.
pub fn assemble_density(
    old: &PbState,
    lag: (&NodalField, &NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    t_new: f64,
) -> Result<BandedSystem> {
    let mesh = old.mesh();
    let w = mesh.lumped_weights();
    let coeff = lambda_eps_midpoint(lag.0, p.eps);
    let mut matrix = BandedMatrix::zeros(mesh.node_count(), 1);
    add_weighted_stiffness(&mut matrix, mesh, &coeff, 1.0, |j| (j, j));
    matrix.add_diagonal(w, 1.0 / p.tau);

    let mut rhs: Vec<f64> = (0..mesh.node_count())
        .map(|m| {
            let s = lambda_eps(lag.0.values()[m], p.eps);
            let sigma = lambda_eps(lag.1.values()[m], p.eps);
            let (f1, _) = lv.ratio_rates_unchecked(s, sigma);
            w[m] * (old.u.values()[m] / p.tau + f1)
        })
        .collect();
    if !q.is_zero() {
        for (e, &a) in coeff.iter().enumerate() {
            let v = q.eval(t_new, mesh.midpoint(e)) * a;
            rhs[e] += v;
            rhs[e + 1] -= v;
        }
    }
    BandedSystem::new(matrix, rhs)
}

/// Linear system of the fraction equation for one iterate.
pub fn assemble_fraction(
    old: &PbState,
    lag: (&NodalField, &NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    t_new: f64,
    form: TransportForm,
) -> Result<BandedSystem> {
    let mesh = old.mesh();
    let w = mesh.lumped_weights();
    let mut matrix = BandedMatrix::zeros(mesh.node_count(), 1);
    let ones = vec![1.0; mesh.element_count()];
    add_weighted_stiffness(&mut matrix, mesh, &ones, p.delta, |j| (j, j));
    matrix.add_diagonal(w, 1.0 / p.tau);

    let mut rhs: Vec<f64> = (0..mesh.node_count())
        .map(|m| {
            let s = lambda_eps(lag.0.values()[m], p.eps);
            let sigma = lambda_eps(lag.1.values()[m], p.eps);
            let (_, f2) = lv.ratio_rates_unchecked(s, sigma);
            w[m] * (old.r.values()[m] / p.tau + f2)
        })
        .collect();

    match form {
        TransportForm::Chi => {
            let gu = nodal_gradient(lag.0);
            let gr = nodal_gradient(lag.1);
            for (m, &x) in mesh.nodes().iter().enumerate() {
                rhs[m] += w[m] * (gu[m] + q.eval(t_new, x)) * gr[m];
            }
        }
        TransportForm::GradChi => {
            let gu = element_gradient(lag.0);
            let gr = element_gradient(lag.1);
            for e in 0..mesh.element_count() {
                let v = (gu[e] + q.eval(t_new, mesh.midpoint(e))) * gr[e];
                rhs[e] -= v;
                rhs[e + 1] += v;
            }
        }
    }
    BandedSystem::new(matrix, rhs)
}

pub fn pb_step(
    state: &PbState,
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    form: TransportForm,
) -> Result<(PbState, StepReport)> {
    let mesh = Arc::clone(state.mesh());
    let t_new = state.time + p.tau;
    q.check_boundary(t_new, mesh.left(), mesh.right())?;

    let mut lag = (state.u.clone(), state.r.clone());
    let mut increment = f64::INFINITY;
    for k in 1..=p.max_inner {
        let du = assemble_density(state, (&lag.0, &lag.1), p, lv, q, t_new)?;
        let dr = assemble_fraction(state, (&lag.0, &lag.1), p, lv, q, t_new, form)?;
        let next = (
            NodalField::new(&mesh, solve_banded(&du)?)?,
            NodalField::new(&mesh, solve_banded(&dr)?)?,
        );
        increment = next.0.max_abs_diff(&lag.0)?.max(next.1.max_abs_diff(&lag.1)?);
        if increment < p.tol {
            let mut history = state.inner_iterations_used.clone();
            history.push(k);
            let new_state = PbState {
                u: next.0,
                r: next.1,
                time: t_new,
                inner_iterations_used: history,
            };
            let report = StepReport {
                time: t_new,
                iterations: k,
                increment,
                summed_residual: None,
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

/// Runs the scheme from `(u_0, r_0)` to `p.t_end`; snapshots carry the
/// reconstructed species.
pub fn pb_run(
    initial: (NodalField, NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    form: TransportForm,
    options: &RunOptions,
) -> Result<Trajectory> {
    match pb_run_partial(initial, p, lv, q, form, options)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`pb_run`], but a failing step returns the trajectory computed so
/// far together with the error. Invalid input is still an `Err`.
pub fn pb_run_partial(
    initial: (NodalField, NodalField),
    p: &SchemeParams,
    lv: &LotkaVolterraParams,
    q: &DriftField,
    form: TransportForm,
    options: &RunOptions,
) -> Result<(Trajectory, Option<Error>)> {
    p.validate()?;
    let (steps, tau) = p.time_grid();
    let step_params = SchemeParams { tau, ..*p };
    let snapshot_steps = options.snapshot_steps(steps, tau, p.t_end)?;
    let mut state = PbState::new(initial.0, initial.1)?;

    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::with_capacity(steps + 1),
        steps: Vec::with_capacity(steps),
        fraction_range: Some((f64::INFINITY, f64::NEG_INFINITY)),
    };
    let observe = |state: &PbState, n: usize, iters: usize, traj: &mut Trajectory| -> Result<()> {
        let (u1, u2) = state.species();
        traj.diagnostics.push(record(
            &u1,
            &u2,
            &state.u,
            &[&state.u],
            state.time,
            iters,
            options,
        )?);
        let (rmin, rmax) = (state.r.min(), state.r.max());
        if let Some((lo, hi)) = traj.fraction_range.as_mut() {
            *lo = lo.min(rmin);
            *hi = hi.max(rmax);
        }
        if let Some(band) = options.fraction_band {
            if rmin < -band || rmax > 1.0 + band {
                return Err(Error::FractionOutOfBand {
                    time: state.time,
                    min: rmin,
                    max: rmax,
                });
            }
        }
        if snapshot_steps.contains(&n) {
            traj.snapshots.push(Snapshot {
                time: state.time,
                u1,
                u2,
                u: state.u.clone(),
                r: Some(state.r.clone()),
            });
        }
        Ok(())
    };

    observe(&state, 0, 0, &mut traj)?;
    for n in 1..=steps {
        let (mut next, report) = match pb_step(&state, &step_params, lv, q, form) {
            Ok(v) => v,
            Err(e) => return Ok((traj, Some(e))),
        };
        next.time = n as f64 * tau;
        if let Err(e) = observe(&next, n, report.iterations, &mut traj) {
            return Ok((traj, Some(e)));
        }
        traj.steps.push(report);
        state = next;
    }
    Ok((traj, None))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use super::*;
    use crate::diagnostics::discrete_mass;
    use crate::mesh::interpolate;
    use crate::regularization::Epsilon;

    fn params(delta: f64) -> SchemeParams {
        SchemeParams {
            tau: 1e-3,
            delta,
            eps: Epsilon::new(1e-10).unwrap(),
            tol: 1e-8,
            max_inner: 100,
            t_end: 0.05,
        }
    }

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(-2.0, 2.0, n).unwrap())
    }

    #[test]
    fn constant_fraction_is_preserved() {
        let m = mesh(41);
        let u = interpolate(|x| 1.0 + 0.5 * (3.0 * x).cos(), &m).unwrap();
        let r = NodalField::constant(&m, 0.3).unwrap();
        let mut s = PbState::new(u, r.clone()).unwrap();
        for form in [TransportForm::Chi, TransportForm::GradChi] {
            for _ in 0..5 {
                s = pb_step(&s, &params(0.01), &LotkaVolterraParams::zero(), &DriftField::zero(), form)
                    .unwrap()
                    .0;
            }
            assert!(s.r.max_abs_diff(&r).unwrap() < 1e-12);
        }
    }

    #[test]
    fn density_mass_is_conserved_without_reactions() {
        let m = mesh(41);
        let u = interpolate(|x| (1.5 - x * x).max(0.0), &m).unwrap();
        let r = interpolate(|x| if x > 0.1 { 1.0 } else { 0.0 }, &m).unwrap();
        let q = DriftField::new(|_, x| 0.3 * (4.0 - x * x));
        let mut s = PbState::new(u.clone(), r).unwrap();
        for _ in 0..20 {
            s = pb_step(&s, &params(0.01), &LotkaVolterraParams::zero(), &q, TransportForm::Chi)
                .unwrap()
                .0;
        }
        let (m0, m1) = (discrete_mass(&u), discrete_mass(&s.u));
        assert!((m1 - m0).abs() <= 1e-10 * m0);
    }

    #[test]
    fn pure_second_species_stays_pure() {
        let m = mesh(41);
        let lv = LotkaVolterraParams::differentiated([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let u = interpolate(|x| 0.45 + 0.1 * x.sin(), &m).unwrap();
        let traj = pb_run(
            (u, NodalField::zeros(&m)),
            &params(0.01),
            &lv,
            &DriftField::zero(),
            TransportForm::Chi,
            &RunOptions {
                snapshot_times: vec![0.05],
                ..Default::default()
            },
        )
        .unwrap();
        let last = traj.snapshots.last().unwrap();
        assert!(last.u1.values().iter().all(|&v| v.abs() < 1e-9));
        let (lo, hi) = traj.fraction_range.unwrap();
        // r = 0 is only preserved up to the eps-truncation of F_2.
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
    }

    #[test]
    fn unit_fraction_keeps_second_species_extinct() {
        let m = mesh(41);
        let lv = LotkaVolterraParams::differentiated([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]]).unwrap();
        let u = interpolate(|x| 0.45 + 0.1 * x.sin(), &m).unwrap();
        let traj = pb_run(
            (u, NodalField::constant(&m, 1.0).unwrap()),
            &params(0.01),
            &lv,
            &DriftField::zero(),
            TransportForm::Chi,
            &RunOptions {
                snapshot_times: vec![0.0, 0.025, 0.05],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.snapshots.len(), 3);
        for s in &traj.snapshots {
            assert!(s.u2.values().iter().all(|&v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn reconstruction_sums_to_total() {
        let m = mesh(11);
        let u = interpolate(|x| 2.0 + x, &m).unwrap();
        let r = interpolate(|x| 0.5 + 0.2 * x, &m).unwrap();
        let (a, b) = reconstruct(&u, &r).unwrap();
        for i in 0..m.node_count() {
            assert_eq!(a.values()[i] + b.values()[i], u.values()[i]);
        }
    }

    proptest! {
        #[test]
        fn split_is_exact(u in -1e-6f64..20.0, r in -1.0f64..2.0) {
            let (a, b) = split_exact(u, r);
            prop_assert_eq!(a + b, u);
            prop_assert!((a - r * u).abs() <= 1e-14 * (1.0 + u.abs()));
        }

        #[test]
        fn split_far_outside_band(u in 1e-3f64..20.0, r in 2.0f64..50.0) {
            let (a, b) = split_exact(u, r);
            prop_assert!((a + b - u).abs() <= 2.0 * f64::EPSILON * u * r);
        }
    }

    #[test]
    fn band_violation_fails_the_run() {
        let m = mesh(11);
        let u = NodalField::constant(&m, 1.0).unwrap();
        let r = NodalField::constant(&m, 1.5).unwrap();
        let err = pb_run(
            (u, r),
            &params(0.01),
            &LotkaVolterraParams::zero(),
            &DriftField::zero(),
            TransportForm::Chi,
            &RunOptions {
                fraction_band: Some(1e-2),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::FractionOutOfBand { .. }));
    }
}
