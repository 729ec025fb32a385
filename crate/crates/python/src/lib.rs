//! Python bindings for `swapnet`.
//!
//! Density matrices cross the boundary as nested lists of complex numbers.

use std::f64::consts::PI;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use swapnet::evolution::NoiseKind;
use swapnet::harness::{cmd_oracle_check, evaluate_cell};
use swapnet::rng::{derive_seed, rng_from_seed};
use swapnet::states::{SampleMode, TrainingSetManifest};
use swapnet::training::TrainingConfig;
use swapnet::{CrossPairCoupling, EvolutionConfig, NoiseConfig, QubitPair, ReplicationSpec};

type Matrix = Vec<Vec<Complex64>>;
type EpochRow = (usize, f64, f64, bool);

fn err(e: swapnet::Error) -> PyErr {
    match e {
        swapnet::Error::DegenerateTrace { .. } | swapnet::Error::SingularNormalMatrix => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: Matrix) -> PyResult<swapnet::ComplexMatrix> {
    let dim = rows.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("density matrix must be square"));
    }
    swapnet::ComplexMatrix::from_row_major(rows.into_iter().flatten().collect()).map_err(err)
}

fn from_matrix(m: &swapnet::ComplexMatrix) -> Matrix {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

fn evolution(t_final: f64, n_steps: usize) -> PyResult<EvolutionConfig> {
    EvolutionConfig::new(t_final, n_steps).map_err(err)
}

fn test_samples(n_qubits: usize, n_random: usize, seed: u64) -> PyResult<Vec<swapnet::TrainingSample>> {
    TrainingSetManifest::new(n_qubits, n_random, seed, SampleMode::Joint)
        .and_then(|m| m.build())
        .map_err(err)
}

/// Fourier-parameterized control coefficients.
#[pyclass(name = "ControlParameters", module = "pyswapnet", skip_from_py_object)]
#[derive(Clone)]
struct PyControlParameters {
    inner: swapnet::ControlParameters,
}

#[pymethods]
impl PyControlParameters {
    /// Uniform random coefficients in `±half_width` on every pair.
    #[staticmethod]
    #[pyo3(signature = (n_qubits, harmonics, seed, half_width=0.5, t_final=1.0))]
    fn random(n_qubits: usize, harmonics: usize, seed: u64, half_width: f64, t_final: f64) -> PyResult<Self> {
        let mut rng = rng_from_seed(seed);
        let inner = swapnet::ControlParameters::random(
            n_qubits,
            harmonics,
            2.0 * PI / t_final,
            &QubitPair::all(n_qubits),
            half_width,
            &mut rng,
        )
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn harmonics(&self) -> usize {
        self.inner.harmonics()
    }

    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients()
    }

    fn set_coefficients(&mut self, values: Vec<f64>) -> PyResult<()> {
        self.inner.set_coefficients(&values).map_err(err)
    }

    /// Hamiltonian at time `t` as a dense matrix.
    fn hamiltonian(&self, t: f64) -> Matrix {
        from_matrix(&swapnet::build_hamiltonian(&self.inner, t))
    }

    fn __repr__(&self) -> String {
        format!(
            "ControlParameters(n_qubits={}, harmonics={}, coefficients={})",
            self.inner.n_qubits(),
            self.inner.harmonics(),
            self.inner.coefficient_count()
        )
    }
}

/// Copies a two-qubit controller onto `n_pairs` pairs.
#[pyfunction]
#[pyo3(signature = (params, n_pairs, cross_pair_coupling="zero"))]
fn replicate(params: &PyControlParameters, n_pairs: usize, cross_pair_coupling: &str) -> PyResult<PyControlParameters> {
    let cross: CrossPairCoupling = cross_pair_coupling.parse().map_err(err)?;
    let spec = ReplicationSpec {
        source: params.inner.clone(),
        n_pairs,
        cross_pair_coupling: cross,
    };
    Ok(PyControlParameters {
        inner: swapnet::replicate(&spec).map_err(err)?,
    })
}

/// Evolves `rho` and returns the final density matrix.
#[pyfunction]
#[pyo3(signature = (params, rho, t_final=1.0, n_steps=1000, noise_kind="none", rnp=0.0, seed=0))]
fn evolve(
    params: &PyControlParameters,
    rho: Matrix,
    t_final: f64,
    n_steps: usize,
    noise_kind: &str,
    rnp: f64,
    seed: u64,
) -> PyResult<Matrix> {
    let kind: NoiseKind = noise_kind.parse().map_err(err)?;
    let noise = NoiseConfig::new(kind, rnp, seed).map_err(err)?;
    let rho = to_matrix(rho)?;
    let mut rng = noise.rng();
    let out = swapnet::evolve(&params.inner, &rho, &evolution(t_final, n_steps)?, &noise, &mut rng).map_err(err)?;
    Ok(from_matrix(&out.final_state))
}

/// Charge basis plus `n_random` Haar-random states as
/// `(label, initial, target)` triples.
#[pyfunction]
#[pyo3(signature = (n_qubits, n_random, seed))]
fn training_set(n_qubits: usize, n_random: usize, seed: u64) -> PyResult<Vec<(String, Matrix, Matrix)>> {
    Ok(test_samples(n_qubits, n_random, seed)?
        .into_iter()
        .map(|s| (s.label, from_matrix(&s.initial), from_matrix(&s.target)))
        .collect())
}

/// Trains `params` on the charge basis plus `n_random` random states and
/// returns the fitted parameters with `(epoch, rms, lambda, accepted)` per epoch.
#[pyfunction]
#[pyo3(signature = (params, n_random=12, seed=0, max_epochs=500, target_rms=1e-6, t_final=1.0, n_steps=1000))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    params: &PyControlParameters,
    n_random: usize,
    seed: u64,
    max_epochs: usize,
    target_rms: f64,
    t_final: f64,
    n_steps: usize,
) -> PyResult<(PyControlParameters, Vec<EpochRow>)> {
    let samples = test_samples(params.inner.n_qubits(), n_random, seed)?;
    let evo = evolution(t_final, n_steps)?;
    let cfg = TrainingConfig {
        max_epochs,
        target_rms,
        ..TrainingConfig::default()
    };
    let p0 = params.inner.clone();
    let (p, history) = py
        .detach(|| swapnet::train(&p0, &samples, &evo, &cfg, &NoiseConfig::none()))
        .map_err(err)?;
    Ok((
        PyControlParameters { inner: p },
        history.records.iter().map(|r| (r.epoch, r.rms, r.lambda, r.accepted)).collect(),
    ))
}

/// Mean and standard deviation over noise draws of the test-set RMS.
#[pyfunction]
#[pyo3(signature = (params, n_random=70, seed=0, noise_kind="none", rnp=0.0, n_draws=1, t_final=1.0, n_steps=1000))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    params: &PyControlParameters,
    n_random: usize,
    seed: u64,
    noise_kind: &str,
    rnp: f64,
    n_draws: usize,
    t_final: f64,
    n_steps: usize,
) -> PyResult<(f64, f64)> {
    let kind: NoiseKind = noise_kind.parse().map_err(err)?;
    let samples = test_samples(params.inner.n_qubits(), n_random, seed)?;
    let evo = evolution(t_final, n_steps)?;
    let p = params.inner.clone();
    let cell = py
        .detach(|| evaluate_cell(&p, &samples, &evo, kind, rnp, n_draws, derive_seed(seed, &[kind.tag()])))
        .map_err(err)?;
    Ok((cell.mean(), cell.std()))
}

/// RK4 orders at one and two qubits and the worst Jacobian error.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn oracle_check(py: Python<'_>, seed: u64) -> PyResult<(Vec<f64>, f64, bool)> {
    let report = py.detach(|| cmd_oracle_check(seed, false)).map_err(err)?;
    Ok((
        report.orders.iter().map(|s| s.order).collect(),
        report.jacobian_max_rel_error,
        report.passed(),
    ))
}

#[pymodule]
fn pyswapnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyControlParameters>()?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(training_set, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add("MAX_QUBITS", swapnet::MAX_QUBITS)?;
    Ok(())
}
