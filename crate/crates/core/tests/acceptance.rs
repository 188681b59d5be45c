//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use crossdiff::diagnostics::time_average;
use crossdiff::exact::{barenblatt, experiment1_initial, BarenblattParams};
use crossdiff::experiment::{simulate, ExperimentConfig, RunOutput, Scheme};
use crossdiff::ode::{equilibria, simulate_logistic, simulate_split, SplitScenario};
use crossdiff::pdelta::pdelta_run;
use crossdiff::{
    DriftField, Epsilon, LotkaVolterraParams, Mesh, RunOptions, SchemeParams, Trajectory,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn report(id: usize, title: &str, verdicts: Vec<Verdict>, elapsed: f64) -> bool {
    let pass = verdicts.iter().all(|v| v.pass);
    println!(
        "criterion {id} {}: {title} ({elapsed:.2} s)",
        if pass { "PASS" } else { "FAIL" }
    );
    for v in verdicts {
        println!("    [{}] {}", if v.pass { "ok" } else { "FAIL" }, v.detail);
    }
    pass
}

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> f64 {
    let h = (b - a) / (points - 1) as f64;
    let inner: f64 = (1..points - 1).map(|k| f(a + k as f64 * h)).sum();
    h * (inner + 0.5 * (f(a) + f(b)))
}

fn barenblatt_oracle() -> Vec<Verdict> {
    let p = BarenblattParams::default();
    let exact_mass = 8.0 / 3.0 * 12f64.sqrt();
    let mut out = Vec::new();
    for t in [0.0, 0.05, 0.10, 0.15] {
        let m = trapezoid(|x| barenblatt(t, x, &p), -2.0, 2.0, 10_000);
        let rel = (m - exact_mass).abs() / exact_mass;
        out.push(Verdict::new(
            rel <= 1e-4,
            format!("mass at t={t}: {m:.8} vs {exact_mass:.8}, relative {rel:.2e} <= 1e-4"),
        ));
    }
    // u_t - (u u_x)_x by central differences inside the support.
    let (dt, dx) = (1e-6, 1e-4);
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.05, 0.10, 0.15] {
        let rho = p.support_radius(t);
        for k in 0..=200 {
            let x = -0.95 * rho + 1.9 * rho * k as f64 / 200.0;
            let u = |t: f64, x: f64| barenblatt(t, x, &p);
            let ut = (u(t + dt, x) - u(t - dt, x)) / (2.0 * dt);
            let flux = |y: f64| 0.5 * (u(t, y + 0.5 * dx) + u(t, y - 0.5 * dx)) * (u(t, y + 0.5 * dx) - u(t, y - 0.5 * dx)) / dx;
            let div = (flux(x + 0.5 * dx) - flux(x - 0.5 * dx)) / dx;
            worst = worst.max((ut - div).abs());
        }
    }
    out.push(Verdict::new(
        worst <= 1e-4,
        format!("max interior PDE residual {worst:.2e} <= 1e-4"),
    ));
    out
}

fn find(runs: &[RunOutput], scheme: Scheme, nodes: usize) -> &RunOutput {
    runs.iter()
        .find(|r| r.scheme == scheme && r.nodes == nodes)
        .expect("run requested")
}

fn name(s: Scheme) -> &'static str {
    match s {
        Scheme::Pdelta => "P_delta",
        Scheme::Pb => "P_B",
    }
}

fn mesh_convergence(runs: &[RunOutput]) -> Vec<Verdict> {
    let mut out = Vec::new();
    for scheme in [Scheme::Pdelta, Scheme::Pb] {
        let errs: Vec<Option<f64>> = [101, 301, 501]
            .iter()
            .map(|&n| {
                let r = find(runs, scheme, n);
                r.error.is_none().then(|| r.trajectory.final_record().rel_l2_err).flatten()
            })
            .collect();
        let pass = match errs[..] {
            [Some(a), Some(b), Some(c)] => a > b && b > c,
            _ => false,
        };
        out.push(Verdict::new(
            pass,
            format!(
                "{} final relative L2 error 101/301/501: {}",
                name(scheme),
                errs.iter()
                    .map(|e| e.map_or("failed".to_string(), |e| format!("{e:.4e}")))
                    .collect::<Vec<_>>()
                    .join(" > ")
            ),
        ));
    }
    out
}

fn osc_average(t: &Trajectory) -> f64 {
    let times: Vec<f64> = t.diagnostics.iter().map(|d| d.time).collect();
    let values: Vec<f64> = t.diagnostics.iter().map(|d| d.osc_u).collect();
    time_average(&times, &values)
}

fn osc_near(t: &Trajectory, time: f64) -> f64 {
    t.diagnostics
        .iter()
        .min_by(|a, b| (a.time - time).abs().total_cmp(&(b.time - time).abs()))
        .expect("non-empty")
        .osc_u
}

fn oscillation_ordering(label: &str, runs: &[RunOutput], t_end: f64) -> Vec<Verdict> {
    let pd = find(runs, Scheme::Pdelta, 101);
    let pb = find(runs, Scheme::Pb, 101);
    let (a_pd, a_pb) = (osc_average(&pd.trajectory), osc_average(&pb.trajectory));
    let complete = pd.succeeded() && pb.succeeded();
    let (end, early) = (osc_near(&pd.trajectory, t_end), osc_near(&pd.trajectory, t_end / 10.0));
    vec![
        Verdict::new(
            complete && a_pb > a_pd,
            format!("{label}: time-averaged osc P_B {a_pb:.6} > P_delta {a_pd:.6}"),
        ),
        Verdict::new(
            pd.succeeded() && end <= early,
            format!("{label}: P_delta osc(T) {end:.4} <= osc(T/10) {early:.4}"),
        ),
    ]
}

fn fixed_point(label: &str, runs: &[RunOutput]) -> Vec<Verdict> {
    runs.iter()
        .map(|r| {
            let iters = r.trajectory.max_inner_iterations();
            Verdict::new(
                r.succeeded() && iters < 10,
                format!(
                    "{label} {} n={}: max inner iterations {iters} < 10{}",
                    name(r.scheme),
                    r.nodes,
                    r.error.as_ref().map_or(String::new(), |e| format!(" (run failed: {e})"))
                ),
            )
        })
        .collect()
}

fn relative_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().expect("non-empty");
    values.map(|m| (m - first).abs()).fold(0.0, f64::max) / first.abs().max(f64::MIN_POSITIVE)
}

fn conservation(barenblatt_runs: &[RunOutput]) -> Vec<Verdict> {
    let mut out = Vec::new();
    for r in barenblatt_runs {
        let d = &r.trajectory.diagnostics;
        match r.scheme {
            Scheme::Pdelta => {
                let d1 = relative_drift(d.iter().map(|x| x.mass_u1));
                let d2 = relative_drift(d.iter().map(|x| x.mass_u2));
                out.push(Verdict::new(
                    r.succeeded() && d1 <= 1e-8 && d2 <= 1e-8,
                    format!("P_delta n={}: species mass drift {d1:.2e}, {d2:.2e} <= 1e-8", r.nodes),
                ));
            }
            Scheme::Pb => {
                let dt = relative_drift(d.iter().map(|x| x.mass_u1 + x.mass_u2));
                out.push(Verdict::new(
                    r.succeeded() && dt <= 1e-8,
                    format!("P_B n={}: total mass drift {dt:.2e} <= 1e-8", r.nodes),
                ));
            }
        }
    }
    // Invasion data with the reactions switched off.
    let mesh = Arc::new(Mesh::uniform(-2.0, 2.0, 101).expect("valid mesh"));
    let (u1, u2) = experiment1_initial(&mesh).expect("valid data");
    let p = SchemeParams {
        tau: 1e-3,
        delta: 0.04 * 0.04,
        eps: Epsilon::new(1e-10).expect("valid"),
        tol: 1e-8,
        max_inner: 100,
        t_end: 1.0,
    };
    let traj = pdelta_run(
        (u1, u2),
        &p,
        &LotkaVolterraParams::zero(),
        &DriftField::zero(),
        &RunOptions::default(),
    );
    match traj {
        Ok(t) => {
            let d1 = relative_drift(t.diagnostics.iter().map(|x| x.mass_u1));
            let d2 = relative_drift(t.diagnostics.iter().map(|x| x.mass_u2));
            out.push(Verdict::new(
                d1 <= 1e-8 && d2 <= 1e-8,
                format!("P_delta invasion data, no reactions: drift {d1:.2e}, {d2:.2e} <= 1e-8"),
            ));
        }
        Err(e) => out.push(Verdict::new(false, format!("P_delta invasion data failed: {e}"))),
    }
    out
}

fn positivity(label: &str, runs: &[RunOutput]) -> Vec<Verdict> {
    runs.iter()
        .map(|r| {
            let m = r.trajectory.min_density();
            let what = match r.scheme {
                Scheme::Pdelta => "min(u1, u2)",
                Scheme::Pb => "min u",
            };
            Verdict::new(
                r.succeeded() && m >= -1e-6,
                format!("{label} {} n={}: {what} = {m:.3e} >= -1e-6", name(r.scheme), r.nodes),
            )
        })
        .collect()
}

fn invasion_bounds(runs: &[RunOutput], t_end: f64) -> Vec<Verdict> {
    let (lo, hi) = (0.449 * (-t_end).exp(), 0.451 * t_end.exp());
    runs.iter()
        .map(|r| {
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for s in &r.trajectory.snapshots {
                min = min.min(s.u.min());
                max = max.max(s.u.max());
            }
            Verdict::new(
                r.succeeded() && min >= lo && max <= hi,
                format!(
                    "invasion {} n={}: total density in [{min:.4}, {max:.4}] within [{lo:.4}, {hi:.4}]",
                    name(r.scheme),
                    r.nodes
                ),
            )
        })
        .collect()
}

fn ode_suite() -> Vec<Verdict> {
    let mut out = Vec::new();
    let (alpha, beta, u0) = (1.0, 2.0, 0.1);
    let closed = |t: f64| alpha * u0 * (alpha * t).exp() / (alpha + beta * u0 * ((alpha * t).exp() - 1.0));
    match simulate_logistic(alpha, beta, u0, 1.0, 1e-3) {
        Ok(s) => {
            let (t, u) = s.last().expect("non-empty");
            let err = (u - closed(t)).abs();
            out.push(Verdict::new(
                t == 1.0 && err <= 1e-8,
                format!("logistic at t=1: |U - closed form| = {err:.2e} <= 1e-8"),
            ));
        }
        Err(e) => out.push(Verdict::new(false, format!("logistic failed: {e}"))),
    }

    let post = LotkaVolterraParams::non_differentiated(1.5, 2.0).expect("valid");
    let scenario = SplitScenario {
        alpha_pre: 1.0,
        beta_pre: 1.0,
        u0: 0.1,
        t_star: 1.0,
        theta: 0.3,
        post,
        t_end: 5.0,
    };
    match simulate_split(&scenario, 1e-3) {
        Ok(tr) => {
            let u_split = tr.u1[0] + tr.u2[0];
            let worst = tr
                .t
                .iter()
                .zip(tr.u1.iter().zip(&tr.u2))
                .map(|(&t, (a, b))| {
                    let s = t - scenario.t_star;
                    let e = (1.5 * s).exp();
                    let logistic = 1.5 * u_split * e / (1.5 + 2.0 * u_split * (e - 1.0));
                    (a + b - logistic).abs()
                })
                .fold(0.0, f64::max);
            out.push(Verdict::new(
                worst <= 1e-6,
                format!("ND split: max |U1 + U2 - logistic continuation| = {worst:.2e} <= 1e-6"),
            ));
        }
        Err(e) => out.push(Verdict::new(false, format!("split failed: {e}"))),
    }

    let lv = LotkaVolterraParams::differentiated([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]]).expect("valid");
    let eq = equilibria(&lv);
    let mut points = eq.points.clone();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let expected = vec![(0.0, 0.0), (0.0, 0.5), (1.0, 0.0)];
    out.push(Verdict::new(
        points == expected && eq.lines.is_empty(),
        format!("equilibria {points:?} == {expected:?}"),
    ));
    out
}

fn scheme_identities(barenblatt_runs: &[RunOutput]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for r in barenblatt_runs.iter().filter(|r| r.scheme == Scheme::Pb) {
        for s in &r.trajectory.snapshots {
            for i in 0..s.u.len() {
                checked += 1;
                if s.u1.values()[i] + s.u2.values()[i] != s.u.values()[i] {
                    mismatches += 1;
                }
            }
        }
    }
    out.push(Verdict::new(
        checked > 0 && mismatches == 0,
        format!("P_B reconstruction u1 + u2 == u: {mismatches} mismatches in {checked} nodal values"),
    ));

    let mut worst: f64 = 0.0;
    let mut steps = 0usize;
    for r in barenblatt_runs.iter().filter(|r| r.scheme == Scheme::Pdelta) {
        for s in &r.trajectory.steps {
            steps += 1;
            worst = worst.max(s.summed_residual.unwrap_or(f64::INFINITY));
        }
    }
    // Non-differentiated kinetics with nonzero rates on the invasion data.
    let mesh = Arc::new(Mesh::uniform(-2.0, 2.0, 101).expect("valid mesh"));
    let (u1, u2) = experiment1_initial(&mesh).expect("valid data");
    let lv = LotkaVolterraParams::non_differentiated(1.0, 1.0).expect("valid");
    let p = SchemeParams {
        tau: 1e-3,
        delta: 0.04 * 0.04,
        eps: Epsilon::new(1e-10).expect("valid"),
        tol: 1e-8,
        max_inner: 100,
        t_end: 2.0,
    };
    match pdelta_run((u1, u2), &p, &lv, &DriftField::zero(), &RunOptions::default()) {
        Ok(t) => {
            for s in &t.steps {
                steps += 1;
                worst = worst.max(s.summed_residual.unwrap_or(f64::INFINITY));
            }
        }
        Err(e) => out.push(Verdict::new(false, format!("ND invasion run failed: {e}"))),
    }
    out.push(Verdict::new(
        steps > 0 && worst <= 1e-10,
        format!("P_delta ND summed-system residual over {steps} steps: max {worst:.2e} <= 1e-10"),
    ));
    out
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let mut all = true;

    let (v, s) = timed(barenblatt_oracle);
    all &= report(1, "Barenblatt oracle", v, s);

    let bar_cfg = ExperimentConfig::barenblatt();
    let mut inv_cfg = ExperimentConfig::invasion();
    // Every step is kept so the total-density bound sees the whole run.
    let (steps, tau) = inv_cfg.scheme_params(Scheme::Pdelta, 0.04).time_grid();
    inv_cfg.snapshot_times = Some((0..=steps).map(|k| k as f64 * tau).collect());
    let (bar, bar_time) = timed(|| simulate(&bar_cfg).expect("valid config"));
    let (inv, inv_time) = timed(|| simulate(&inv_cfg).expect("valid config"));

    all &= report(2, "mesh convergence on the Barenblatt experiment", mesh_convergence(&bar), bar_time);

    let mut v = oscillation_ordering("barenblatt", &bar, bar_cfg.t_end);
    v.extend(oscillation_ordering("invasion", &inv, inv_cfg.t_end));
    all &= report(3, "oscillation ordering on 101 nodes", v, 0.0);

    let mut v = fixed_point("barenblatt", &bar);
    v.extend(fixed_point("invasion", &inv));
    all &= report(4, "fixed-point iterations below ten", v, bar_time + inv_time);

    let (v, s) = timed(|| conservation(&bar));
    all &= report(5, "mass conservation without reactions", v, s);

    let mut v = positivity("barenblatt", &bar);
    v.extend(positivity("invasion", &inv));
    v.extend(invasion_bounds(&inv, inv_cfg.t_end));
    all &= report(6, "positivity and invasion density bounds", v, 0.0);

    let (v, s) = timed(ode_suite);
    all &= report(7, "ODE suite", v, s);

    let (v, s) = timed(|| scheme_identities(&bar));
    all &= report(8, "scheme identities", v, s);

    if all {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria FAIL");
        ExitCode::FAILURE
    }
}
