//! Python bindings: scenarios, time evolution, two-photon matrices,
//! concurrence, pulse optimization and config-driven experiment runs.

use nalgebra::Matrix4;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cascade::correlations::{two_photon_matrix, CorrelationGrid};
use cascade::dynamics::{evolve as evolve_rs, TimeGrid};
use cascade::entanglement::{concurrence as concurrence_rs, TwoPhotonMatrix};
use cascade::experiments::{execute, initial_density, ExperimentConfig, GridScale, InitialState};
use cascade::hilbert::{DotLevel, Mode, Truncation};
use cascade::model::Scenario;
use cascade::optimizer::{self, SearchSpec};
use cascade::ode::Tolerance;
use cascade::CascadeError;

fn py_err(e: CascadeError) -> PyErr {
    match e {
        CascadeError::InvalidParameter { .. } | CascadeError::Config(_) | CascadeError::SpaceMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_initial(name: &str) -> PyResult<InitialState> {
    match name {
        "ground" => Ok(InitialState::Ground),
        "biexciton" => Ok(InitialState::Biexciton),
        _ => Err(PyValueError::new_err(format!("unknown initial state `{name}`"))),
    }
}

/// Physical configuration of one run.
#[pyclass(name = "Scenario", module = "cascade_py", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner: Scenario = toml::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(py_err)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (with_cavity = true))]
    fn table1_super(with_cavity: bool) -> Self {
        PyScenario {
            inner: Scenario::table1_super(with_cavity),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (alpha_pi, with_cavity = true))]
    fn table1_tpe(alpha_pi: f64, with_cavity: bool) -> Self {
        PyScenario {
            inner: Scenario::table1_tpe(alpha_pi, with_cavity),
        }
    }

    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// `"reduced18"`, `"dot_only"` or `"full"` with `max_photons`.
    #[pyo3(signature = (name, max_photons = None))]
    fn with_truncation(&self, name: &str, max_photons: Option<u8>) -> PyResult<Self> {
        let truncation = match (name, max_photons) {
            ("reduced18", None) => Truncation::Reduced18,
            ("dot_only", None) => Truncation::DotOnly,
            ("full", Some(n)) => Truncation::Full(n),
            _ => return Err(PyValueError::new_err("expected reduced18, dot_only or full with max_photons")),
        };
        let mut inner = self.inner.clone();
        inner.truncation = truncation;
        inner.space().map_err(py_err)?;
        Ok(PyScenario { inner })
    }

    fn with_coupling(&self, g_mev: f64) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        let cav = inner
            .cavity
            .as_mut()
            .ok_or_else(|| PyValueError::new_err("scenario has no cavity"))?;
        cav.g_mev = g_mev;
        inner.validate().map_err(py_err)?;
        Ok(PyScenario { inner })
    }

    #[getter]
    fn dim(&self) -> PyResult<usize> {
        Ok(self.inner.space().map_err(py_err)?.dim())
    }

    #[getter]
    fn truncation(&self) -> String {
        self.inner.effective_truncation().to_string()
    }

    #[getter]
    fn has_cavity(&self) -> bool {
        self.inner.cavity.is_some()
    }

    #[getter]
    fn pulse_areas(&self) -> Vec<f64> {
        self.inner.pulses.iter().map(|p| p.alpha_pi).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(truncation={}, cavity={}, pulses={})",
            self.inner.effective_truncation(),
            self.inner.cavity.is_some(),
            self.inner.pulses.len()
        )
    }
}

/// Occupations and photon numbers on a uniform output grid.
#[pyfunction]
#[pyo3(signature = (scenario, t_end, dt = 0.5, initial = "ground"))]
fn evolve<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    t_end: f64,
    dt: f64,
    initial: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let sc = scenario.inner.clone();
    let state = parse_initial(initial)?;
    let traj = py
        .detach(move || {
            let grid = TimeGrid::new(sc.default_start(), t_end, dt);
            evolve_rs(&initial_density(&sc, state)?, &sc, &grid)
        })
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("t_ps", traj.times.clone())?;
    for (name, level) in [("occ_G", DotLevel::G), ("occ_X", DotLevel::X), ("occ_Y", DotLevel::Y), ("occ_B", DotLevel::B)] {
        out.set_item(name, traj.series(|o| o.occupation(level)))?;
    }
    out.set_item("N_X", traj.series(|o| o.photon_number(Mode::X)))?;
    out.set_item("N_Y", traj.series(|o| o.photon_number(Mode::Y)))?;
    Ok(out)
}

/// Two-photon matrix, concurrence and (with a cavity) pair counts.
#[pyfunction]
#[pyo3(signature = (scenario, initial = "ground", window_ps = None, dt = None, dtau = None))]
fn two_photon<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    initial: &str,
    window_ps: Option<f64>,
    dt: Option<f64>,
    dtau: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let sc = scenario.inner.clone();
    let state = parse_initial(initial)?;
    let (res, c) = py
        .detach(move || {
            let mut grid = CorrelationGrid::for_scenario(&sc);
            if let Some(w) = window_ps {
                grid.t_end = grid.t_start + w;
                grid.tau_end = w;
            }
            grid.dt = dt.unwrap_or(grid.dt);
            grid.dtau = dtau.unwrap_or(grid.dtau);
            let res = two_photon_matrix(&sc, &initial_density(&sc, state)?, &grid)?;
            let c = concurrence_rs(&res.matrix)?;
            Ok::<_, CascadeError>((res, c))
        })
        .map_err(py_err)?;
    let out = PyDict::new(py);
    let rows: Vec<Vec<Complex64>> = (0..4).map(|i| (0..4).map(|j| res.matrix.rho[(i, j)]).collect()).collect();
    out.set_item("matrix", rows)?;
    out.set_item("concurrence", c.value)?;
    out.set_item("sqrt_lambdas", c.sqrt_lambdas.to_vec())?;
    out.set_item("fidelity_phi_plus", res.matrix.fidelity_phi_plus())?;
    out.set_item("hermiticity_defect", res.hermiticity_defect)?;
    out.set_item("residual_excitation", res.residual_excitation)?;
    match res.pair_counts {
        Some(p) => {
            let d = PyDict::new(py);
            d.set_item("xx", p.xx)?;
            d.set_item("xy", p.xy)?;
            d.set_item("yx", p.yx)?;
            d.set_item("yy", p.yy)?;
            out.set_item("pair_counts", d)?;
        }
        None => out.set_item("pair_counts", py.None())?,
    }
    Ok(out)
}

/// Wootters concurrence of a 4×4 matrix over (XX, XY, YX, YY).
#[pyfunction]
fn concurrence(matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
    if matrix.len() != 4 || matrix.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("expected a 4x4 matrix"));
    }
    let m = Matrix4::from_fn(|i, j| matrix[i][j]);
    Ok(concurrence_rs(&TwoPhotonMatrix::new(m)).map_err(py_err)?.value)
}

/// Final biexciton population of the bare dot for a given second pulse.
#[pyfunction]
#[pyo3(signature = (alpha2_pi, delta2_mev, delta1_mev = -5.0, alpha1_pi = 32.0, delta_b_mev = 1.0))]
fn objective(alpha2_pi: f64, delta2_mev: f64, delta1_mev: f64, alpha1_pi: f64, delta_b_mev: f64) -> PyResult<f64> {
    let spec = SearchSpec::new(delta1_mev, alpha1_pi, delta_b_mev);
    optimizer::objective(alpha2_pi, delta2_mev, &spec).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (delta1_mev = -5.0, alpha1_pi = 32.0, delta_b_mev = 1.0, grid = (36, 31), seeds = 5))]
fn optimize_second_pulse<'py>(
    py: Python<'py>,
    delta1_mev: f64,
    alpha1_pi: f64,
    delta_b_mev: f64,
    grid: (usize, usize),
    seeds: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = SearchSpec {
        grid,
        seeds,
        ..SearchSpec::new(delta1_mev, alpha1_pi, delta_b_mev)
    };
    let r = py.detach(move || optimizer::optimize_second_pulse(&spec)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("alpha2_pi", r.alpha2_pi)?;
    out.set_item("delta2_mev", r.delta2_mev)?;
    out.set_item("b_final", r.b_final)?;
    out.set_item("evaluations", r.evaluations)?;
    out.set_item("seed_b_final", r.seed_best.b_final)?;
    Ok(out)
}

/// `(alpha_pi, b_final)` at the first maximum of the two-photon-resonant pulse.
#[pyfunction]
#[pyo3(signature = (delta_b_mev = 1.0, sigma_ps = 2.7, t0_ps = 10.0))]
fn optimize_tpe_area(py: Python<'_>, delta_b_mev: f64, sigma_ps: f64, t0_ps: f64) -> PyResult<(f64, f64)> {
    let dot = cascade::model::DotParams {
        delta_b_mev,
        delta_0_mev: 0.0,
    };
    let r = py
        .detach(move || optimizer::optimize_tpe_area(&dot, sigma_ps, t0_ps, Tolerance::default()))
        .map_err(py_err)?;
    Ok((r.alpha_pi, r.b_final))
}

/// Runs an experiment config and returns the manifest as JSON text.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir, grid_scale = "coarse"))]
fn run_experiment(py: Python<'_>, config_text: &str, out_dir: &str, grid_scale: &str) -> PyResult<String> {
    let scale = match grid_scale {
        "coarse" => GridScale::Coarse,
        "paper" => GridScale::Paper,
        _ => return Err(PyValueError::new_err("grid_scale must be coarse or paper")),
    };
    let cfg = ExperimentConfig::from_toml(config_text).map_err(py_err)?;
    let text = config_text.to_string();
    let dir = std::path::PathBuf::from(out_dir);
    let manifest = py.detach(move || execute(&cfg, &text, scale, &dir)).map_err(py_err)?;
    serde_json::to_string(&manifest).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn cascade_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(two_photon, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_second_pulse, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_tpe_area, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("HBAR_MEV_PS", cascade::model::HBAR_MEV_PS)?;
    Ok(())
}
