//! Batch runner for the reference experiments: builds meshes and initial
//! data, runs both schemes over a sweep of meshes and writes snapshot and
//! diagnostics CSV files plus a JSON manifest per run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::exact::{barenblatt, experiment1_initial, experiment2_initial, BarenblattParams};
use crate::kinetics::{DriftField, LotkaVolterraParams};
use crate::mesh::{Mesh, NodalField};
use crate::pb::{pb_run_partial, TransportForm};
use crate::pdelta::pdelta_run_partial;
use crate::regularization::Epsilon;
use crate::scheme::{ExactTotal, RunOptions, SchemeParams, Trajectory, DEFAULT_MAX_INNER};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Suggested half-width for [`ExperimentConfig::fraction_band`]. The band is
/// off by default: the lagged central transport overshoots by about a third
/// at the Barenblatt contact point.
pub const FRACTION_BAND: f64 = 1e-2;

/// Final time of the invasion experiment.
pub const INVASION_T_END: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Invasion,
    Barenblatt,
    Custom,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Invasion => "invasion",
            ExperimentKind::Barenblatt => "barenblatt",
            ExperimentKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Two-species viscosity scheme.
    Pdelta,
    /// Total-density / fraction scheme.
    Pb,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pdelta => "pdelta",
            Scheme::Pb => "pb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Pdelta,
    Pb,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Pdelta => vec![Scheme::Pdelta],
            SchemeChoice::Pb => vec![Scheme::Pb],
            SchemeChoice::Both => vec![Scheme::Pdelta, Scheme::Pb],
        }
    }
}

/// Initial data on an arbitrary uniform node set, for custom runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomSetup {
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub kinetics: LotkaVolterraParams,
}

impl CustomSetup {
    /// Parses a CSV with header `x,u1,u2`.
    pub fn from_csv(text: &str, kinetics: LotkaVolterraParams) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or_default();
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["x", "u1", "u2"] {
            return Err(Error::InvalidParameter(format!(
                "custom initial data needs header x,u1,u2, got {header:?}"
            )));
        }
        let mut setup = CustomSetup {
            x: Vec::new(),
            u1: Vec::new(),
            u2: Vec::new(),
            kinetics,
        };
        for (k, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", k + 2)))?;
            if vals.len() != 3 {
                return Err(Error::InvalidParameter(format!(
                    "line {}: expected 3 columns",
                    k + 2
                )));
            }
            setup.x.push(vals[0]);
            setup.u1.push(vals[1]);
            setup.u2.push(vals[2]);
        }
        Ok(setup)
    }
}

/// Fully resolved description of a batch of runs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub scheme: SchemeChoice,
    pub mesh_nodes: Vec<usize>,
    pub tau: f64,
    pub t_end: f64,
    /// Explicit viscosity for the two-species scheme; `h^2` when unset.
    pub delta: Option<f64>,
    /// Explicit fraction diffusion; `2 h^2` when unset.
    pub delta_b: Option<f64>,
    pub eps: f64,
    pub tol: f64,
    pub max_inner: usize,
    /// Defaults to `{0, T/4, T/2, 3T/4, T}`.
    pub snapshot_times: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    pub transport_form: TransportForm,
    /// Fraction-scheme runs fail once `r` leaves `[-band, 1 + band]`;
    /// `None` only records the range.
    pub fraction_band: Option<f64>,
    pub barenblatt: BarenblattParams,
    pub custom: Option<CustomSetup>,
}

impl ExperimentConfig {
    fn base(experiment: ExperimentKind, tau: f64, t_end: f64) -> Self {
        Self {
            experiment,
            scheme: SchemeChoice::Both,
            mesh_nodes: vec![101, 301, 501],
            tau,
            t_end,
            delta: None,
            delta_b: None,
            eps: 1e-10,
            tol: 1e-8,
            max_inner: DEFAULT_MAX_INNER,
            snapshot_times: None,
            output_dir: PathBuf::from("out"),
            transport_form: TransportForm::Chi,
            fraction_band: None,
            barenblatt: BarenblattParams::default(),
            custom: None,
        }
    }

    /// Gaussian invasion on `(-2, 2)` with `alpha_i = 1`, `beta_ij = i`.
    pub fn invasion() -> Self {
        Self::base(ExperimentKind::Invasion, 1e-3, INVASION_T_END)
    }

    /// Segregated Barenblatt data with `t* = 0.01`, `x0 = -0.25`, `L = 2`.
    pub fn barenblatt() -> Self {
        Self::base(ExperimentKind::Barenblatt, 1e-4, 0.15)
    }

    pub fn custom(setup: CustomSetup, tau: f64, t_end: f64) -> Self {
        let mut c = Self::base(ExperimentKind::Custom, tau, t_end);
        c.mesh_nodes = vec![setup.x.len()];
        c.custom = Some(setup);
        c
    }

    pub fn preset(kind: ExperimentKind) -> Option<Self> {
        match kind {
            ExperimentKind::Invasion => Some(Self::invasion()),
            ExperimentKind::Barenblatt => Some(Self::barenblatt()),
            ExperimentKind::Custom => None,
        }
    }

    pub fn resolved_snapshot_times(&self) -> Vec<f64> {
        match &self.snapshot_times {
            Some(t) => t.clone(),
            None => [0.0, 0.25, 0.5, 0.75, 1.0]
                .iter()
                .map(|f| f * self.t_end)
                .collect(),
        }
    }

    pub fn kinetics(&self) -> LotkaVolterraParams {
        match self.experiment {
            ExperimentKind::Invasion => {
                LotkaVolterraParams::differentiated([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]])
                    .expect("finite coefficients")
            }
            ExperimentKind::Barenblatt => LotkaVolterraParams::zero(),
            ExperimentKind::Custom => self
                .custom
                .as_ref()
                .map_or_else(LotkaVolterraParams::zero, |c| c.kinetics),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_nodes.is_empty() {
            return Err(Error::InvalidParameter("no meshes requested".into()));
        }
        if let Some(&n) = self.mesh_nodes.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidParameter(format!(
                "meshes need at least 3 nodes, got {n}"
            )));
        }
        Epsilon::new(self.eps)?;
        for v in [self.delta, self.delta_b].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid viscosity {v}")));
            }
        }
        for &t in &self.resolved_snapshot_times() {
            if !(t >= 0.0 && t <= self.t_end) {
                return Err(Error::InvalidParameter(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.t_end
                )));
            }
        }
        match self.experiment {
            ExperimentKind::Barenblatt => self.barenblatt.check_horizon(self.t_end)?,
            ExperimentKind::Custom => {
                let c = self.custom.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("custom experiment needs initial data".into())
                })?;
                if self.mesh_nodes != [c.x.len()] {
                    return Err(Error::InvalidParameter(
                        "custom runs use the node set of their initial data".into(),
                    ));
                }
            }
            ExperimentKind::Invasion => {}
        }
        self.scheme_params(Scheme::Pdelta, 0.1).validate()
    }

    fn domain(&self) -> (f64, f64) {
        match self.experiment {
            ExperimentKind::Barenblatt => {
                let l = self.barenblatt.half_length();
                (-l, l)
            }
            _ => (-2.0, 2.0),
        }
    }

    pub fn mesh(&self, nodes: usize) -> Result<Arc<Mesh>> {
        let mesh = match &self.custom {
            Some(c) if self.experiment == ExperimentKind::Custom => Mesh::from_nodes(c.x.clone())?,
            _ => {
                let (a, b) = self.domain();
                Mesh::uniform(a, b, nodes)?
            }
        };
        mesh.uniform_spacing()?;
        Ok(Arc::new(mesh))
    }

    /// Scheme parameters on a mesh of spacing `h`.
    pub fn scheme_params(&self, scheme: Scheme, h: f64) -> SchemeParams {
        let delta = match scheme {
            Scheme::Pdelta => self.delta.unwrap_or(h * h),
            Scheme::Pb => self.delta_b.unwrap_or(2.0 * h * h),
        };
        SchemeParams {
            tau: self.tau,
            delta,
            eps: Epsilon::new(self.eps).unwrap_or(Epsilon::new(1e-10).expect("valid")),
            tol: self.tol,
            max_inner: self.max_inner,
            t_end: self.t_end,
        }
    }

    /// Species initial data and the fraction used by the `(u, r)` scheme.
    pub fn initial_data(&self, mesh: &Arc<Mesh>) -> Result<(NodalField, NodalField, NodalField)> {
        match self.experiment {
            ExperimentKind::Invasion => {
                let (u1, u2) = experiment1_initial(mesh)?;
                let r = fraction_of(&u1, &u2)?;
                Ok((u1, u2, r))
            }
            ExperimentKind::Barenblatt => experiment2_initial(mesh, &self.barenblatt),
            ExperimentKind::Custom => {
                let c = self.custom.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("custom experiment needs initial data".into())
                })?;
                let u1 = NodalField::new(mesh, c.u1.clone())?;
                let u2 = NodalField::new(mesh, c.u2.clone())?;
                let r = fraction_of(&u1, &u2)?;
                Ok((u1, u2, r))
            }
        }
    }

    fn exact_total(&self) -> Option<ExactTotal> {
        match self.experiment {
            ExperimentKind::Barenblatt => {
                let p = self.barenblatt;
                Some(Arc::new(move |t, x| barenblatt(t, x, &p)))
            }
            _ => None,
        }
    }
}

/// `u1 / (u1 + u2)` where the total is positive; empty nodes copy the
/// fraction of the nearest occupied node.
pub fn fraction_of(u1: &NodalField, u2: &NodalField) -> Result<NodalField> {
    let total = u1.zip_with(u2, |a, b| a + b)?;
    let occupied: Vec<usize> = (0..total.len()).filter(|&i| total.values()[i] > 0.0).collect();
    if occupied.is_empty() {
        return NodalField::constant(u1.mesh(), 0.5);
    }
    let r = (0..total.len())
        .map(|i| {
            let k = *occupied
                .iter()
                .min_by_key(|&&k| k.abs_diff(i))
                .expect("non-empty");
            u1.values()[k] / total.values()[k]
        })
        .collect();
    NodalField::new(u1.mesh(), r)
}

/// Result of one `(scheme, mesh)` run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scheme: Scheme,
    pub nodes: usize,
    pub params: SchemeParams,
    pub trajectory: Trajectory,
    pub error: Option<Error>,
}

impl RunOutput {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Runs one scheme on one mesh, keeping whatever was computed before a
/// failure.
pub fn run_single(config: &ExperimentConfig, scheme: Scheme, nodes: usize) -> Result<RunOutput> {
    config.validate()?;
    let mesh = config.mesh(nodes)?;
    let h = mesh.uniform_spacing()?;
    let params = config.scheme_params(scheme, h);
    let (u1, u2, r) = config.initial_data(&mesh)?;
    let lv = config.kinetics();
    let q = DriftField::zero();
    let mut options = RunOptions {
        snapshot_times: config.resolved_snapshot_times(),
        exact_total: config.exact_total(),
        fraction_band: None,
    };
    let (trajectory, error) = match scheme {
        Scheme::Pdelta => pdelta_run_partial((u1, u2), &params, &lv, &q, &options)?,
        Scheme::Pb => {
            options.fraction_band = config.fraction_band;
            let u = u1.zip_with(&u2, |a, b| a + b)?;
            pb_run_partial((u, r), &params, &lv, &q, config.transport_form, &options)?
        }
    };
    let (_, tau) = params.time_grid();
    Ok(RunOutput {
        scheme,
        nodes: mesh.node_count(),
        params: SchemeParams { tau, ..params },
        trajectory,
        error,
    })
}

/// Runs every `(scheme, mesh)` pair of the config; pairs are independent and
/// run in parallel.
pub fn simulate(config: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    config.validate()?;
    let pairs: Vec<(Scheme, usize)> = config
        .scheme
        .schemes()
        .into_iter()
        .flat_map(|s| config.mesh_nodes.iter().map(move |&n| (s, n)))
        .collect();
    pairs
        .par_iter()
        .map(|&(s, n)| run_single(config, s, n))
        .collect()
}

/// Seventeen significant digits: exact round trip for `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshots_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,x,u1,u2,u,r\n");
    for snap in &out.trajectory.snapshots {
        let nodes = snap.u.mesh().nodes();
        for (i, &x) in nodes.iter().enumerate() {
            let r = snap
                .r
                .as_ref()
                .map(|r| fmt_f64(r.values()[i]))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_f64(snap.time),
                fmt_f64(x),
                fmt_f64(snap.u1.values()[i]),
                fmt_f64(snap.u2.values()[i]),
                fmt_f64(snap.u.values()[i]),
                r
            );
        }
    }
    s
}

pub fn diagnostics_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,osc_u,mass_u1,mass_u2,min_u,max_u,rel_l2_err,inner_iters\n");
    for d in &out.trajectory.diagnostics {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(d.time),
            fmt_f64(d.osc_u),
            fmt_f64(d.mass_u1),
            fmt_f64(d.mass_u2),
            fmt_f64(d.min_u),
            fmt_f64(d.max_u),
            d.rel_l2_err.map(fmt_f64).unwrap_or_default(),
            d.inner_iters
        );
    }
    s
}

/// Flat JSON object with every parameter that affects the output.
pub fn manifest(config: &ExperimentConfig, out: &RunOutput, files: &[String]) -> Value {
    let lv = config.kinetics();
    let p = &out.params;
    let (steps, _) = p.time_grid();
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    put("version", json!(VERSION));
    put("experiment", json!(config.experiment.name()));
    put("scheme", json!(out.scheme.name()));
    put("nodes", json!(out.nodes));
    let (a, b) = config.domain();
    let (a, b) = match &config.custom {
        Some(c) if config.experiment == ExperimentKind::Custom => {
            (c.x[0], c.x[c.x.len() - 1])
        }
        _ => (a, b),
    };
    put("domain_left", json!(a));
    put("domain_right", json!(b));
    put("h", json!((b - a) / (out.nodes - 1) as f64));
    put("tau_requested", json!(config.tau));
    put("tau", json!(p.tau));
    put("steps", json!(steps));
    put("T", json!(p.t_end));
    let viscosity_key = match out.scheme {
        Scheme::Pdelta => "delta",
        Scheme::Pb => "delta_b",
    };
    put(viscosity_key, json!(p.delta));
    put("eps", json!(p.eps.value()));
    put("tol", json!(p.tol));
    put("max_inner", json!(p.max_inner));
    if out.scheme == Scheme::Pb {
        put("transport_form", json!(config.transport_form));
        put("fraction_band", json!(config.fraction_band));
    }
    put("snapshot_times", json!(config.resolved_snapshot_times()));
    put("kinetics_mode", json!(lv.mode()));
    put("alpha1", json!(lv.alpha()[0]));
    put("alpha2", json!(lv.alpha()[1]));
    put("beta11", json!(lv.beta()[0][0]));
    put("beta12", json!(lv.beta()[0][1]));
    put("beta21", json!(lv.beta()[1][0]));
    put("beta22", json!(lv.beta()[1][1]));
    put("drift", json!("zero"));
    if config.experiment == ExperimentKind::Barenblatt {
        put("t_star", json!(config.barenblatt.t_star()));
        put("x0", json!(config.barenblatt.x0()));
        put("L", json!(config.barenblatt.half_length()));
    }
    put("status", json!(if out.succeeded() { "ok" } else { "failed" }));
    put(
        "error",
        out.error.as_ref().map_or(Value::Null, |e| json!(e.to_string())),
    );
    put("completed_steps", json!(out.trajectory.steps.len()));
    put("max_inner_iterations", json!(out.trajectory.max_inner_iterations()));
    if let Some((lo, hi)) = out.trajectory.fraction_range {
        put("fraction_min", json!(lo));
        put("fraction_max", json!(hi));
    }
    put("files", json!(files));
    Value::Object(m)
}

/// File stem shared by the three outputs of a run.
pub fn run_stem(config: &ExperimentConfig, out: &RunOutput) -> String {
    format!(
        "{}_{}_n{}",
        config.experiment.name(),
        out.scheme.name(),
        out.nodes
    )
}

pub fn write_run(config: &ExperimentConfig, out: &RunOutput, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let stem = run_stem(config, out);
    let snap = format!("{stem}_snapshots.csv");
    let diag = format!("{stem}_diagnostics.csv");
    let man = format!("{stem}_manifest.json");
    fs::write(dir.join(&snap), snapshots_csv(out))?;
    fs::write(dir.join(&diag), diagnostics_csv(out))?;
    let manifest = manifest(config, out, &[snap.clone(), diag.clone()]);
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    fs::write(dir.join(&man), text + "\n")?;
    Ok(vec![dir.join(snap), dir.join(diag), dir.join(man)])
}

/// Summary of a finished batch.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub runs: Vec<RunOutput>,
    pub files: Vec<PathBuf>,
}

impl BatchReport {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(RunOutput::succeeded)
    }
}

/// Runs the whole batch and writes its outputs under `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> std::result::Result<BatchReport, RunnerError> {
    let runs = simulate(config)?;
    fs::create_dir_all(&config.output_dir)?;
    let mut files = Vec::new();
    for out in &runs {
        files.extend(write_run(config, out, &config.output_dir)?);
    }
    Ok(BatchReport { runs, files })
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
