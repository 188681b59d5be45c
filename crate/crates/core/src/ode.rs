//! Space-independent splitting models: logistic growth before the split and
//! a two-species Lotka-Volterra system after it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetics::{KineticsMode, LotkaVolterraParams, Species};

pub const DEFAULT_DT: f64 = 1e-3;

/// One classical fourth-order Runge-Kutta step for an autonomous system.
fn rk4_step<const N: usize>(f: &impl Fn([f64; N]) -> [f64; N], y: [f64; N], dt: f64) -> [f64; N] {
    let axpy = |a: [f64; N], s: f64, b: [f64; N]| std::array::from_fn(|i| a[i] + s * b[i]);
    let k1 = f(y);
    let k2 = f(axpy(y, 0.5 * dt, k1));
    let k3 = f(axpy(y, 0.5 * dt, k2));
    let k4 = f(axpy(y, dt, k3));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrates from `t0` to `t1` with steps of `dt`, shortening the last one
/// so the series ends exactly at `t1`.
fn integrate<const N: usize>(
    f: impl Fn([f64; N]) -> [f64; N],
    y0: [f64; N],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<(f64, [f64; N])>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!(
            "end time {t1} precedes start time {t0}"
        )));
    }
    let span = t1 - t0;
    let steps = ((span / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push((t0, y));
    for n in 1..=steps {
        let t_prev = t0 + (n - 1) as f64 * dt;
        let t = if n == steps { t1 } else { t0 + n as f64 * dt };
        y = rk4_step(&f, y, t - t_prev);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp(t));
        }
        out.push((t, y));
    }
    Ok(out)
}

/// Samples of a scalar trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.t.last()?, *self.values.last()?))
    }
}

/// `U' = U (alpha - beta U)` from `U(0) = u0` up to `t_end`.
pub fn simulate_logistic(alpha: f64, beta: f64, u0: f64, t_end: f64, dt: f64) -> Result<TimeSeries> {
    if !(u0 > 0.0) {
        return Err(Error::InvalidParameter(format!("U0 must be positive, got {u0}")));
    }
    let rows = integrate(|[u]| [u * (alpha - beta * u)], [u0], 0.0, t_end, dt)?;
    Ok(TimeSeries {
        t: rows.iter().map(|r| r.0).collect(),
        values: rows.iter().map(|r| r.1[0]).collect(),
    })
}

/// A single population growing logistically until `t_star`, then splitting
/// into fractions `theta` and `1 - theta` that evolve under `post`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitScenario {
    pub alpha_pre: f64,
    pub beta_pre: f64,
    pub u0: f64,
    pub t_star: f64,
    pub theta: f64,
    pub post: LotkaVolterraParams,
    pub t_end: f64,
}

impl SplitScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0) {
            return Err(Error::InvalidParameter("U0 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!(
                "split fraction must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.t_star >= 0.0 && self.t_star < self.t_end) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= t* < T, got t* = {}, T = {}",
                self.t_star, self.t_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitTrajectory {
    /// Single-population phase on `[0, t*]`.
    pub pre: TimeSeries,
    /// Times of the two-species phase on `[t*, T]`.
    pub t: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

pub fn simulate_split(scenario: &SplitScenario, dt: f64) -> Result<SplitTrajectory> {
    scenario.validate()?;
    let pre = simulate_logistic(
        scenario.alpha_pre,
        scenario.beta_pre,
        scenario.u0,
        scenario.t_star,
        dt,
    )?;
    let (_, u_split) = pre.last().expect("logistic series is never empty");
    let y0 = [scenario.theta * u_split, (1.0 - scenario.theta) * u_split];
    let lv = scenario.post;
    let rows = integrate(
        |[a, b]| {
            [
                lv.rate(Species::First, a, b),
                lv.rate(Species::Second, a, b),
            ]
        },
        y0,
        scenario.t_star,
        scenario.t_end,
        dt,
    )?;
    Ok(SplitTrajectory {
        pre,
        t: rows.iter().map(|r| r.0).collect(),
        u1: rows.iter().map(|r| r.1[0]).collect(),
        u2: rows.iter().map(|r| r.1[1]).collect(),
    })
}

/// The set `{a U1 + b U2 = c, U1 >= 0, U2 >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EquilibriumLine {
    pub fn contains(&self, u1: f64, u2: f64, tol: f64) -> bool {
        u1 >= -tol && u2 >= -tol && (self.a * u1 + self.b * u2 - self.c).abs() <= tol
    }
}

/// Nonnegative equilibria of the post-split system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibria {
    /// Isolated equilibria.
    pub points: Vec<(f64, f64)>,
    /// Continua of equilibria.
    pub lines: Vec<EquilibriumLine>,
    /// `det beta = 0`: the interaction matrix cannot select a unique
    /// coexistence state.
    pub singular_interaction: bool,
}

pub fn equilibria(p: &LotkaVolterraParams) -> Equilibria {
    let alpha = p.alpha();
    let beta = p.beta();
    let det = beta[0][0] * beta[1][1] - beta[0][1] * beta[1][0];
    let singular_interaction = det == 0.0;

    if p.mode() == KineticsMode::NonDifferentiated && beta[0][0] != 0.0 {
        let capacity = alpha[0] / beta[0][0];
        return Equilibria {
            points: vec![(0.0, 0.0)],
            lines: if capacity >= 0.0 {
                vec![EquilibriumLine {
                    a: 1.0,
                    b: 1.0,
                    c: capacity,
                }]
            } else {
                Vec::new()
            },
            singular_interaction,
        };
    }

    let mut points = vec![(0.0, 0.0)];
    let mut lines = Vec::new();
    let push = |u1: f64, u2: f64, points: &mut Vec<(f64, f64)>| {
        if u1 >= 0.0 && u2 >= 0.0 && !points.contains(&(u1, u2)) {
            points.push((u1, u2));
        }
    };

    // Single-species states: U2 = 0 with alpha_1 = beta_11 U1, and vice versa.
    for (i, axis_point) in [(0usize, true), (1, false)] {
        let (a, b) = (alpha[i], beta[i][i]);
        if b != 0.0 {
            let v = a / b;
            if axis_point {
                push(v, 0.0, &mut points);
            } else {
                push(0.0, v, &mut points);
            }
        } else if a == 0.0 {
            // The whole half-axis is stationary.
            lines.push(if axis_point {
                EquilibriumLine { a: 0.0, b: 1.0, c: 0.0 }
            } else {
                EquilibriumLine { a: 1.0, b: 0.0, c: 0.0 }
            });
        }
    }

    // Coexistence states.
    if !singular_interaction {
        let u1 = (alpha[0] * beta[1][1] - beta[0][1] * alpha[1]) / det;
        let u2 = (beta[0][0] * alpha[1] - alpha[0] * beta[1][0]) / det;
        if u1 > 0.0 && u2 > 0.0 {
            push(u1, u2, &mut points);
        }
    } else {
        // Rows proportional: either inconsistent (no interior point) or one
        // shared line of equilibria.
        let consistent = alpha[0] * beta[1][0] == alpha[1] * beta[0][0]
            && alpha[0] * beta[1][1] == alpha[1] * beta[0][1];
        let row = if beta[0] != [0.0, 0.0] { 0 } else { 1 };
        if consistent && beta[row] != [0.0, 0.0] {
            lines.push(EquilibriumLine {
                a: beta[row][0],
                b: beta[row][1],
                c: alpha[row],
            });
        }
    }

    Equilibria {
        points,
        lines,
        singular_interaction,
    }
}
