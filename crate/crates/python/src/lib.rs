//! Python bindings: `import qubit_thermo_py`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qubit_thermo::ensemble::{run_transition_ensemble, unitary_transitions};
use qubit_thermo::experiment::{run_experiment as run, ExperimentConfig, Preset, RunOptions};
use qubit_thermo::feedback::{reference_trajectory, FeedbackController, FeedbackParams};
use qubit_thermo::noise::NoiseProcess;
use qubit_thermo::qubit;
use qubit_thermo::sme::{self, Controller, Scheme};

fn err(e: qubit_thermo::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(err)
}

#[pyclass(name = "DensityMatrix", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDensityMatrix(qubit::DensityMatrix);

#[pymethods]
impl PyDensityMatrix {
    #[new]
    #[pyo3(signature = (rho11, rho12 = Complex64::new(0.0, 0.0)))]
    fn new(rho11: f64, rho12: Complex64) -> PyResult<Self> {
        qubit::DensityMatrix::new(rho11, rho12).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_bloch(x: f64, y: f64, z: f64) -> PyResult<Self> {
        qubit::DensityMatrix::from_bloch(x, y, z).map(Self).map_err(err)
    }

    #[getter]
    fn rho11(&self) -> f64 {
        self.0.rho11()
    }

    #[getter]
    fn rho12(&self) -> Complex64 {
        self.0.rho12()
    }

    fn bloch(&self) -> (f64, f64, f64) {
        qubit::bloch_coordinates(&self.0)
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn entropy(&self) -> f64 {
        qubit::von_neumann_entropy(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(rho11={}, rho12={})", self.0.rho11(), self.0.rho12())
    }
}

#[pyclass(name = "DriveProtocol", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDriveProtocol(qubit::DriveProtocol);

#[pymethods]
impl PyDriveProtocol {
    #[new]
    #[pyo3(signature = (g = 0.625, nu = 8.0, tau = 30.0, epsilon = 0.1))]
    fn new(g: f64, nu: f64, tau: f64, epsilon: f64) -> PyResult<Self> {
        qubit::DriveProtocol::new(g, nu, tau, epsilon).map(Self).map_err(err)
    }

    fn drive_amplitude(&self, t: f64) -> PyResult<f64> {
        qubit::drive_amplitude(t, &self.0).map_err(err)
    }

    /// Pauli coefficients `(c0, cx, cy, cz)` of `H_t`.
    fn hamiltonian(&self, t: f64) -> PyResult<(f64, f64, f64, f64)> {
        let h = qubit::hamiltonian_at(t, &self.0).map_err(err)?;
        Ok((h.c0, h.cx, h.cy, h.cz))
    }

    fn free_energy_difference(&self, beta: f64) -> PyResult<f64> {
        let spec = qubit::ThermalSpec::new(beta).map_err(err)?;
        qubit::free_energy_difference(&spec, &self.0.initial_hamiltonian(), &self.0.final_hamiltonian()).map_err(err)
    }

    /// Eigenstate `level` (0 = lower) of `H_0`.
    fn initial_eigenstate(&self, level: usize) -> PyResult<PyDensityMatrix> {
        if level > 1 {
            return Err(PyValueError::new_err("level must be 0 or 1"));
        }
        Ok(PyDensityMatrix(qubit::eigendecompose(&self.0.initial_hamiltonian()).eigenstate(level)))
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }
}

#[pyclass(name = "DetectorModel", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDetectorModel(sme::DetectorModel);

#[pymethods]
impl PyDetectorModel {
    #[new]
    #[pyo3(signature = (delta_i = 1.0, s0 = 2500.0, i0 = 0.0))]
    fn new(delta_i: f64, s0: f64, i0: f64) -> PyResult<Self> {
        sme::DetectorModel::new(delta_i, s0, i0).map(Self).map_err(err)
    }

    fn dephasing_rate(&self) -> f64 {
        self.0.dephasing_rate()
    }

    fn measurement_time(&self) -> f64 {
        self.0.measurement_time()
    }
}

/// Integrates one trajectory and returns its series as lists.
#[pyfunction]
#[pyo3(signature = (init, protocol, detector, steps, seed, stream = 0, scheme = "bayesian", feedback_f = None))]
#[allow(clippy::too_many_arguments)]
fn integrate_trajectory<'py>(
    py: Python<'py>,
    init: PyDensityMatrix,
    protocol: PyDriveProtocol,
    detector: PyDetectorModel,
    steps: usize,
    seed: u64,
    stream: u64,
    scheme: &str,
    feedback_f: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = self::scheme(scheme)?;
    let dt = protocol.0.tau / steps.max(1) as f64;
    let noise = NoiseProcess::new(seed, stream, detector.0.s0, dt);
    let reference = match feedback_f {
        Some(_) => Some(reference_trajectory(&init.0, &protocol.0, steps).map_err(err)?),
        None => None,
    };
    let mut ctl = match (feedback_f, reference.as_ref()) {
        (Some(f), Some(r)) => Some(FeedbackController::new(FeedbackParams::new(f, true).map_err(err)?, r)),
        _ => None,
    };
    let rec = sme::integrate_trajectory(
        &init.0,
        &protocol.0,
        &detector.0,
        &noise,
        scheme,
        steps,
        ctl.as_mut().map(|c| c as &mut dyn Controller),
    )
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t", rec.times.clone())?;
    d.set_item("rho11", rec.states.iter().map(|s| s.rho11()).collect::<Vec<_>>())?;
    d.set_item("rho12", rec.states.iter().map(|s| s.rho12()).collect::<Vec<_>>())?;
    d.set_item("xi", rec.decompositions.iter().map(|s| s.xi).collect::<Vec<_>>())?;
    d.set_item("current", rec.currents.clone())?;
    d.set_item("gain", rec.gains.clone())?;
    d.set_item("dW", rec.thermo.iter().map(|s| s.dw).collect::<Vec<_>>())?;
    d.set_item("dQ", rec.thermo.iter().map(|s| s.dq).collect::<Vec<_>>())?;
    d.set_item("dU", rec.thermo.iter().map(|s| s.du).collect::<Vec<_>>())?;
    d.set_item("work", rec.ledger.w_cum)?;
    d.set_item("heat", rec.ledger.q_cum)?;
    d.set_item("delta_u", rec.ledger.delta_u())?;
    d.set_item("max_residual", rec.ledger.max_residual)?;
    d.set_item("clamp_events", rec.clamp_events)?;
    Ok(d)
}

/// Averaged transition probabilities with work and heat parts, indexed
/// `[m][n]` (final, initial level).
#[pyfunction]
#[pyo3(signature = (protocol, detector, steps, n_traj, seed, scheme = "bayesian", feedback_f = None, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn transition_decomposition<'py>(
    py: Python<'py>,
    protocol: PyDriveProtocol,
    detector: PyDetectorModel,
    steps: usize,
    n_traj: usize,
    seed: u64,
    scheme: &str,
    feedback_f: Option<f64>,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let fb = match feedback_f {
        Some(f) => FeedbackParams::new(f, true).map_err(err)?,
        None => FeedbackParams::off(),
    };
    let run = py
        .detach(|| {
            run_transition_ensemble(n_traj, seed, self::scheme(scheme)?, steps, steps, &protocol.0, &detector.0, &fb, workers)
                .map_err(err)
        })?;
    let t = &run.decomposition;
    let d = PyDict::new(py);
    d.set_item("p0", t.p0)?;
    d.set_item("p_tau", t.p_tau)?;
    d.set_item("dp_w", t.dp_w)?;
    d.set_item("dp_q", t.dp_q)?;
    d.set_item("p_tau_stderr", t.p_tau_stderr)?;
    d.set_item("dp_q_stderr", t.dp_q_stderr)?;
    d.set_item("max_trajectory_gap", run.max_trajectory_gap)?;
    Ok(d)
}

/// Transition matrix of the unmonitored evolution.
#[pyfunction]
fn unitary_transition_matrix(protocol: PyDriveProtocol, steps: usize) -> PyResult<[[f64; 2]; 2]> {
    unitary_transitions(&protocol.0, steps).map_err(err)
}

/// Runs a preset (`fig1`, `fig2`, `fig3a`, `fig3b`, `jarzynski`) or a
/// config file and returns the written paths.
#[pyfunction]
#[pyo3(signature = (out_dir, preset = None, config = None, n_traj = None, seed = None, workers = 0))]
fn run_experiment(
    py: Python<'_>,
    out_dir: PathBuf,
    preset: Option<&str>,
    config: Option<PathBuf>,
    n_traj: Option<usize>,
    seed: Option<u64>,
    workers: usize,
) -> PyResult<Vec<PathBuf>> {
    let mut cfg = match (preset, config) {
        (Some(p), None) => ExperimentConfig::preset(p.parse::<Preset>().map_err(err)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)?;
            ExperimentConfig::from_toml_str(&text).map_err(err)?
        }
        _ => return Err(PyValueError::new_err("pass exactly one of preset or config")),
    };
    if let Some(n) = n_traj {
        cfg.n_traj = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let opts = RunOptions { out_dir, workers };
    let art = py.detach(|| run(&cfg, &opts)).map_err(err)?;
    Ok(art.files)
}

#[pymodule]
fn qubit_thermo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyDriveProtocol>()?;
    m.add_class::<PyDetectorModel>()?;
    m.add_function(wrap_pyfunction!(integrate_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(transition_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(unitary_transition_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
