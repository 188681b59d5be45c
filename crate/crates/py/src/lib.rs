//! Python bindings. Fields are exchanged as plain lists of floats; run
//! results come back as dictionaries.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use crossdiff::diagnostics;
use crossdiff::exact;
use crossdiff::experiment::{self, ExperimentConfig, ExperimentKind, RunOutput, SchemeChoice};
use crossdiff::ode;
use crossdiff::pb::reconstruct;
use crossdiff::{
    DriftField, Epsilon, KineticsMode, LotkaVolterraParams, NodalField, RunOptions, SchemeParams,
    TransportForm, Trajectory,
};

fn err(e: crossdiff::Error) -> PyErr {
    match e {
        crossdiff::Error::NotConverged { .. }
        | crossdiff::Error::Singular { .. }
        | crossdiff::Error::BlowUp(_)
        | crossdiff::Error::FractionOutOfBand { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// One-dimensional node set.
#[pyclass(name = "Mesh", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: Arc<crossdiff::Mesh>,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(nodes: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(crossdiff::Mesh::from_nodes(nodes).map_err(err)?),
        })
    }

    #[staticmethod]
    fn uniform(left: f64, right: f64, nodes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(crossdiff::Mesh::uniform(left, right, nodes).map_err(err)?),
        })
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    #[getter]
    fn element_sizes(&self) -> Vec<f64> {
        self.inner.element_sizes().to_vec()
    }

    #[getter]
    fn lumped_weights(&self) -> Vec<f64> {
        self.inner.lumped_weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(nodes={}, left={}, right={})",
            self.inner.node_count(),
            self.inner.left(),
            self.inner.right()
        )
    }
}

impl PyMesh {
    fn field(&self, values: Vec<f64>) -> PyResult<NodalField> {
        NodalField::new(&self.inner, values).map_err(err)
    }
}

fn kinetics(alpha: Vec<f64>, beta: Vec<f64>, mode: &str) -> PyResult<LotkaVolterraParams> {
    let alpha = match alpha[..] {
        [a] => [a; 2],
        [a, b] => [a, b],
        _ => return Err(PyValueError::new_err("alpha takes one or two values")),
    };
    let beta = match beta[..] {
        [b] => [[b; 2]; 2],
        [a, b, c, d] => [[a, b], [c, d]],
        _ => return Err(PyValueError::new_err("beta takes one or four values")),
    };
    let mode = match mode {
        "nd" => KineticsMode::NonDifferentiated,
        "d" => KineticsMode::Differentiated,
        other => return Err(PyValueError::new_err(format!("unknown kinetics mode {other:?}"))),
    };
    LotkaVolterraParams::new(alpha, beta, mode).map_err(err)
}

/// Lotka-Volterra coefficients; `mode` is "d" or "nd".
#[pyclass(name = "LotkaVolterra", frozen)]
struct PyLotkaVolterra {
    inner: LotkaVolterraParams,
}

#[pymethods]
impl PyLotkaVolterra {
    #[new]
    #[pyo3(signature = (alpha, beta, mode = "d"))]
    fn new(alpha: Vec<f64>, beta: Vec<f64>, mode: &str) -> PyResult<Self> {
        Ok(Self {
            inner: kinetics(alpha, beta, mode)?,
        })
    }

    /// `(f_1, f_2)` at `(u1, u2)`.
    fn rates(&self, u1: f64, u2: f64) -> (f64, f64) {
        use crossdiff::Species;
        (
            self.inner.rate(Species::First, u1, u2),
            self.inner.rate(Species::Second, u1, u2),
        )
    }

    /// `(F_1, F_2)` of the total-density / fraction form.
    fn ratio_rates(&self, u: f64, r: f64) -> PyResult<(f64, f64)> {
        self.inner.ratio_rates(u, r).map_err(err)
    }

    /// Isolated nonnegative equilibria and lines `a U1 + b U2 = c`.
    fn equilibria<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let eq = ode::equilibria(&self.inner);
        let d = PyDict::new(py);
        d.set_item("points", eq.points)?;
        d.set_item(
            "lines",
            eq.lines.iter().map(|l| (l.a, l.b, l.c)).collect::<Vec<_>>(),
        )?;
        d.set_item("singular_interaction", eq.singular_interaction)?;
        Ok(d)
    }
}

#[pyfunction]
fn lambda_eps(s: f64, eps: f64) -> PyResult<f64> {
    Ok(crossdiff::lambda_eps(s, Epsilon::new(eps).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (t, x, t_star = 0.01, x0 = -0.25, half_length = 2.0))]
fn barenblatt(t: f64, x: f64, t_star: f64, x0: f64, half_length: f64) -> PyResult<f64> {
    let p = exact::BarenblattParams::new(t_star, x0, half_length).map_err(err)?;
    Ok(exact::barenblatt(t, x, &p))
}

#[pyfunction]
#[pyo3(signature = (t, t_star = 0.01, x0 = -0.25, half_length = 2.0))]
fn contact_point(t: f64, t_star: f64, x0: f64, half_length: f64) -> PyResult<f64> {
    let p = exact::BarenblattParams::new(t_star, x0, half_length).map_err(err)?;
    Ok(exact::eta(t, &p))
}

#[pyfunction]
fn barenblatt_mass() -> f64 {
    exact::BarenblattParams::mass()
}

#[pyfunction]
fn osc(mesh: &PyMesh, values: Vec<f64>) -> PyResult<f64> {
    diagnostics::osc(&mesh.field(values)?).map_err(err)
}

#[pyfunction]
fn discrete_mass(mesh: &PyMesh, values: Vec<f64>) -> PyResult<f64> {
    Ok(diagnostics::discrete_mass(&mesh.field(values)?))
}

#[pyfunction]
#[pyo3(signature = (alpha, beta, u0, t_end, dt = ode::DEFAULT_DT))]
fn simulate_logistic(alpha: f64, beta: f64, u0: f64, t_end: f64, dt: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = ode::simulate_logistic(alpha, beta, u0, t_end, dt).map_err(err)?;
    Ok((s.t, s.values))
}

#[pyfunction]
#[pyo3(signature = (alpha_pre, beta_pre, u0, t_star, theta, post, t_end, dt = ode::DEFAULT_DT))]
#[allow(clippy::too_many_arguments)]
fn simulate_split<'py>(
    py: Python<'py>,
    alpha_pre: f64,
    beta_pre: f64,
    u0: f64,
    t_star: f64,
    theta: f64,
    post: &PyLotkaVolterra,
    t_end: f64,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let scenario = ode::SplitScenario {
        alpha_pre,
        beta_pre,
        u0,
        t_star,
        theta,
        post: post.inner,
        t_end,
    };
    let tr = ode::simulate_split(&scenario, dt).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t_pre", tr.pre.t)?;
    d.set_item("u_pre", tr.pre.values)?;
    d.set_item("t", tr.t)?;
    d.set_item("u1", tr.u1)?;
    d.set_item("u2", tr.u2)?;
    Ok(d)
}

fn trajectory_dict<'py>(py: Python<'py>, t: &Trajectory) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let diag = PyList::empty(py);
    for r in &t.diagnostics {
        let row = PyDict::new(py);
        row.set_item("t", r.time)?;
        row.set_item("osc_u", r.osc_u)?;
        row.set_item("mass_u1", r.mass_u1)?;
        row.set_item("mass_u2", r.mass_u2)?;
        row.set_item("min_u", r.min_u)?;
        row.set_item("max_u", r.max_u)?;
        row.set_item("rel_l2_err", r.rel_l2_err)?;
        row.set_item("inner_iters", r.inner_iters)?;
        diag.append(row)?;
    }
    d.set_item("diagnostics", diag)?;
    let snaps = PyList::empty(py);
    for s in &t.snapshots {
        let row = PyDict::new(py);
        row.set_item("t", s.time)?;
        row.set_item("u1", s.u1.values())?;
        row.set_item("u2", s.u2.values())?;
        row.set_item("u", s.u.values())?;
        row.set_item("r", s.r.as_ref().map(|r| r.values().to_vec()))?;
        snaps.append(row)?;
    }
    d.set_item("snapshots", snaps)?;
    d.set_item(
        "summed_residuals",
        t.steps.iter().map(|s| s.summed_residual).collect::<Vec<_>>(),
    )?;
    d.set_item("max_inner_iterations", t.max_inner_iterations())?;
    d.set_item("fraction_range", t.fraction_range)?;
    Ok(d)
}

fn scheme_params(tau: f64, t_end: f64, delta: f64, eps: f64, tol: f64, max_inner: usize) -> PyResult<SchemeParams> {
    Ok(SchemeParams {
        tau,
        delta,
        eps: Epsilon::new(eps).map_err(err)?,
        tol,
        max_inner,
        t_end,
    })
}

fn run_options(snapshot_times: Option<Vec<f64>>, t_end: f64) -> RunOptions {
    RunOptions {
        snapshot_times: snapshot_times.unwrap_or_else(|| vec![0.0, t_end]),
        ..RunOptions::default()
    }
}

/// Two-species viscosity scheme from `(u1, u2)`; `delta` defaults to `h^2`.
#[pyfunction]
#[pyo3(signature = (
    mesh, u1, u2, tau, t_end, kinetics = None, delta = None, eps = 1e-10, tol = 1e-8,
    max_inner = 100, snapshot_times = None
))]
#[allow(clippy::too_many_arguments)]
fn run_pdelta<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    u1: Vec<f64>,
    u2: Vec<f64>,
    tau: f64,
    t_end: f64,
    kinetics: Option<&PyLotkaVolterra>,
    delta: Option<f64>,
    eps: f64,
    tol: f64,
    max_inner: usize,
    snapshot_times: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let h = mesh.inner.uniform_spacing().map_err(err)?;
    let p = scheme_params(tau, t_end, delta.unwrap_or(h * h), eps, tol, max_inner)?;
    let lv = kinetics.map_or_else(LotkaVolterraParams::zero, |k| k.inner);
    let initial = (mesh.field(u1)?, mesh.field(u2)?);
    let options = run_options(snapshot_times, t_end);
    let t = py
        .detach(|| crossdiff::pdelta_run(initial, &p, &lv, &DriftField::zero(), &options))
        .map_err(err)?;
    trajectory_dict(py, &t)
}

/// Total-density / fraction scheme from `(u, r)`; `delta_b` defaults to `2 h^2`.
#[pyfunction]
#[pyo3(signature = (
    mesh, u, r, tau, t_end, kinetics = None, delta_b = None, eps = 1e-10, tol = 1e-8,
    max_inner = 100, snapshot_times = None, transport_form = "chi", fraction_band = None
))]
#[allow(clippy::too_many_arguments)]
fn run_pb<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    u: Vec<f64>,
    r: Vec<f64>,
    tau: f64,
    t_end: f64,
    kinetics: Option<&PyLotkaVolterra>,
    delta_b: Option<f64>,
    eps: f64,
    tol: f64,
    max_inner: usize,
    snapshot_times: Option<Vec<f64>>,
    transport_form: &str,
    fraction_band: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let h = mesh.inner.uniform_spacing().map_err(err)?;
    let p = scheme_params(tau, t_end, delta_b.unwrap_or(2.0 * h * h), eps, tol, max_inner)?;
    let lv = kinetics.map_or_else(LotkaVolterraParams::zero, |k| k.inner);
    let form = match transport_form {
        "chi" => TransportForm::Chi,
        "grad-chi" => TransportForm::GradChi,
        other => return Err(PyValueError::new_err(format!("unknown transport form {other:?}"))),
    };
    let initial = (mesh.field(u)?, mesh.field(r)?);
    let options = RunOptions {
        fraction_band,
        ..run_options(snapshot_times, t_end)
    };
    let t = py
        .detach(|| crossdiff::pb_run(initial, &p, &lv, &DriftField::zero(), form, &options))
        .map_err(err)?;
    trajectory_dict(py, &t)
}

/// `(u1, u2)` with `u1 + u2 == u` at every node.
#[pyfunction]
fn reconstruct_species(mesh: &PyMesh, u: Vec<f64>, r: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let (a, b) = reconstruct(&mesh.field(u)?, &mesh.field(r)?).map_err(err)?;
    Ok((a.into_values(), b.into_values()))
}

fn run_dict<'py>(py: Python<'py>, out: &RunOutput) -> PyResult<Bound<'py, PyDict>> {
    let d = trajectory_dict(py, &out.trajectory)?;
    d.set_item("scheme", out.scheme.name())?;
    d.set_item("nodes", out.nodes)?;
    d.set_item("tau", out.params.tau)?;
    d.set_item("delta", out.params.delta)?;
    d.set_item("error", out.error.as_ref().map(ToString::to_string))?;
    Ok(d)
}

/// Runs a reference experiment ("invasion" or "barenblatt") with the
/// published parameters unless overridden. Writes CSV and JSON files when
/// `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (
    experiment = "barenblatt", scheme = "both", nodes = None, tau = None, t_end = None,
    snapshot_times = None, out_dir = None
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    experiment: &str,
    scheme: &str,
    nodes: Option<Vec<usize>>,
    tau: Option<f64>,
    t_end: Option<f64>,
    snapshot_times: Option<Vec<f64>>,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyList>> {
    let kind = match experiment {
        "invasion" => ExperimentKind::Invasion,
        "barenblatt" => ExperimentKind::Barenblatt,
        other => return Err(PyValueError::new_err(format!("unknown experiment {other:?}"))),
    };
    let mut config = ExperimentConfig::preset(kind).expect("preset exists");
    config.scheme = match scheme {
        "pdelta" => SchemeChoice::Pdelta,
        "pb" => SchemeChoice::Pb,
        "both" => SchemeChoice::Both,
        other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
    };
    if let Some(n) = nodes {
        config.mesh_nodes = n;
    }
    config.tau = tau.unwrap_or(config.tau);
    config.t_end = t_end.unwrap_or(config.t_end);
    config.snapshot_times = snapshot_times;
    let runs = match out_dir {
        Some(dir) => {
            config.output_dir = dir;
            py.detach(|| experiment::run_experiment(&config))
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))?
                .runs
        }
        None => py.detach(|| experiment::simulate(&config)).map_err(err)?,
    };
    let list = PyList::empty(py);
    for r in &runs {
        list.append(run_dict(py, r)?)?;
    }
    Ok(list)
}

#[pymodule]
fn crossdiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", experiment::VERSION)?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyLotkaVolterra>()?;
    m.add_function(wrap_pyfunction!(lambda_eps, m)?)?;
    m.add_function(wrap_pyfunction!(barenblatt, m)?)?;
    m.add_function(wrap_pyfunction!(contact_point, m)?)?;
    m.add_function(wrap_pyfunction!(barenblatt_mass, m)?)?;
    m.add_function(wrap_pyfunction!(osc, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_mass, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_logistic, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_split, m)?)?;
    m.add_function(wrap_pyfunction!(run_pdelta, m)?)?;
    m.add_function(wrap_pyfunction!(run_pb, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_species, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
