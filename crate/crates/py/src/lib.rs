//! Python bindings for the qamg simulator.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qamg_core::amplification::{self, amplify_mw, Prob};
use qamg_core::circuit::{self, apply_circuit, StateVector};
use qamg_core::exact::ExactScalar;
use qamg_core::harness::{self, exit_code, ExperimentConfig, GenParams, Kind, Mode};
use qamg_core::linalg::CMatrix;
use qamg_core::qam::optimal_qam_value;
use qamg_core::qmam::{self as core_qmam, build_qmam, SeesawOptions};
use qamg_core::spectra::{acceptance_spectrum, DensityMatrix};
use qamg_core::Error;

fn py_err(e: Error) -> PyErr {
    match exit_code(&e) {
        3 => PyOSError::new_err(e.to_string()),
        4 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for qamg_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn prob(s: Option<&str>) -> PyResult<Option<Prob>> {
    s.map(|s| s.parse().py()).transpose()
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    CMatrix::from_rows(&rows).py()
}

/// Gate list over `width` qubits in the text format `qubits N / H q / S q / T a b c`.
#[pyclass(name = "Circuit", module = "qamg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCircuit(circuit::Circuit);

#[pymethods]
impl PyCircuit {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        circuit::parse_circuit(text).py().map(Self)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn hadamard_count(&self) -> usize {
        self.0.hadamard_count()
    }

    fn dagger(&self) -> Self {
        Self(self.0.dagger())
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    /// Applies the circuit to a float state vector.
    fn apply(&self, amplitudes: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        let s = StateVector::from_amplitudes(amplitudes).py()?;
        Ok(apply_circuit(&s, &self.0).py()?.into_amplitudes())
    }

    /// Exact output amplitudes from basis state `index`, as `(x.re,x.im;y.re,y.im)/2^e` strings for `(x + y√2)/2^e`.
    fn apply_exact(&self, index: usize) -> PyResult<Vec<String>> {
        let s = StateVector::<ExactScalar>::basis(self.0.width(), index).py()?;
        let out = apply_circuit(&s, &self.0).py()?;
        Ok(out.amplitudes().iter().map(ToString::to_string).collect())
    }

    fn unitary(&self) -> PyResult<Vec<Vec<Complex64>>> {
        circuit::unitary_matrix::<Complex64>(&self.0).py()
    }

    fn __repr__(&self) -> String {
        format!("Circuit(width={}, gates={})", self.0.width(), self.0.len())
    }
}

/// A one-, two- or three-message game instance.
#[pyclass(name = "Instance", module = "qamg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance(harness::Instance);

#[pymethods]
impl PyInstance {
    /// Seeded instance of a generator kind such as `qma-pair` or `qip-no`.
    /// Probabilities are fraction strings like `"3/4"`.
    #[staticmethod]
    #[pyo3(signature = (kind, seed, *, m=None, k=None, s=None, gates=None, target=None, spectrum=None,
                        error=None, epsilon=None, label=None, a=None, b=None))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        kind: &str,
        seed: u64,
        m: Option<usize>,
        k: Option<usize>,
        s: Option<usize>,
        gates: Option<usize>,
        target: Option<&str>,
        spectrum: Option<(String, String)>,
        error: Option<&str>,
        epsilon: Option<&str>,
        label: Option<&str>,
        a: Option<&str>,
        b: Option<&str>,
    ) -> PyResult<Self> {
        let kind: Kind = kind.parse().py()?;
        let spectrum = match spectrum {
            Some((p0, p1)) => Some((p0.parse().py()?, p1.parse().py()?)),
            None => None,
        };
        let label = match label {
            None => None,
            Some("yes") => Some(amplification::Label::Yes),
            Some("no") => Some(amplification::Label::No),
            Some(other) => return Err(PyValueError::new_err(format!("label must be yes or no, got {other}"))),
        };
        let params = GenParams {
            m,
            k,
            s,
            gates,
            target: prob(target)?,
            spectrum,
            error: prob(error)?,
            epsilon: prob(epsilon)?,
            label,
            a: prob(a)?,
            b: prob(b)?,
        };
        harness::generate_instance(kind, seed, &params).py().map(Self)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        harness::Instance::from_json(text).py().map(Self)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        harness::Instance::load(&path).py().map(Self)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().py()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).py()
    }

    #[getter]
    fn protocol(&self) -> String {
        self.0.protocol().to_string()
    }

    #[getter]
    fn label(&self) -> Option<&'static str> {
        self.0.label().map(|l| match l {
            amplification::Label::Yes => "yes",
            amplification::Label::No => "no",
        })
    }

    /// Descending spectrum of the acceptance operator (one-message games).
    #[pyo3(signature = (exact=false))]
    fn spectrum(&self, exact: bool) -> PyResult<Vec<f64>> {
        let q = self.qma()?.acceptance_operator(exact).py()?;
        Ok(acceptance_spectrum(&q).py()?.eigenvalues)
    }

    /// Acceptance probability of a witness state (one-message games).
    fn acceptance(&self, witness: Vec<Complex64>) -> PyResult<f64> {
        let inst = self.qma()?;
        let q = inst.acceptance_operator(false).py()?;
        let w = StateVector::from_amplitudes(witness).py()?;
        w.check_normalized(1e-9).py()?;
        Ok(q.expectation(w.amplitudes()))
    }

    /// `(q, N, threshold)` of the repeated-measurement amplification to error `2^-r`.
    fn amplification(&self, r: u32) -> PyResult<(u64, usize, usize)> {
        let mw = amplify_mw(self.qma()?, r).py()?;
        Ok((mw.q, mw.n, mw.threshold))
    }

    /// Optimal prover value: top eigenvalue, average over coins, or see-saw optimum.
    #[pyo3(signature = (restarts=16, seed=0))]
    fn optimal_value(&self, restarts: usize, seed: u64) -> PyResult<f64> {
        match &self.0 {
            harness::Instance::Qma { inst, .. } => {
                Ok(acceptance_spectrum(&inst.acceptance_operator(false).py()?).py()?.eigenvalues[0])
            }
            harness::Instance::Qam(q) => optimal_qam_value(q).py(),
            harness::Instance::Qmam(base) => {
                let opts = SeesawOptions {
                    restarts,
                    seed,
                    ..Default::default()
                };
                Ok(core_qmam::optimize_cheating(&build_qmam(base), &opts).py()?.best.value)
            }
        }
    }

    fn __repr__(&self) -> String {
        format!("Instance(protocol={}, label={:?})", self.0.protocol(), self.label())
    }
}

impl PyInstance {
    fn qma(&self) -> PyResult<&amplification::QmaInstance> {
        match &self.0 {
            harness::Instance::Qma { inst, .. } => Ok(inst),
            other => Err(PyValueError::new_err(format!("expected a qma instance, got {}", other.protocol()))),
        }
    }
}

/// Outcome of one experiment.
#[pyclass(name = "Report", module = "qamg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyReport(harness::Report);

#[pymethods]
impl PyReport {
    #[getter]
    fn passed(&self) -> bool {
        self.0.passed
    }

    #[getter]
    fn values(&self) -> BTreeMap<String, f64> {
        self.0.values.iter().map(|(k, q)| (k.clone(), q.value)).collect()
    }

    /// `(name, value, reference, pass)` per check.
    #[getter]
    fn checks(&self) -> Vec<(String, f64, f64, bool)> {
        self.0.checks.iter().map(|c| (c.name.clone(), c.value, c.reference, c.pass)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().py()
    }

    fn __repr__(&self) -> String {
        format!("Report(protocol={}, mode={}, passed={})", self.0.protocol, self.0.mode, self.0.passed)
    }
}

/// Runs one experiment in memory.
#[pyfunction]
#[pyo3(signature = (instance, mode, *, reps=None, copies=None, restarts=None, samples=None, seed=None, exact=false))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    instance: &PyInstance,
    mode: &str,
    reps: Option<usize>,
    copies: Option<usize>,
    restarts: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    exact: bool,
) -> PyResult<PyReport> {
    let mode: Mode = mode.parse().py()?;
    let cfg = ExperimentConfig {
        reps,
        copies,
        restarts,
        samples,
        seed,
        exact,
        ..ExperimentConfig::new("<memory>", mode)
    };
    let inst = instance.0.clone();
    py.detach(|| harness::run_instance(&inst, &cfg)).py().map(PyReport)
}

/// CSV table over reports of one protocol and mode.
#[pyfunction]
fn emit_tables(reports: Vec<PyRef<'_, PyReport>>) -> PyResult<String> {
    let rs: Vec<harness::Report> = reports.iter().map(|r| r.0.clone()).collect();
    harness::emit_tables(&rs).py()
}

/// `P[Bin(n, p) ≥ threshold]`.
#[pyfunction]
fn binomial_tail(p: f64, n: usize, threshold: usize) -> f64 {
    amplification::binomial_tail(&p, n, threshold)
}

/// Fidelity of two density matrices given as nested lists.
#[pyfunction]
fn fidelity(rho: Vec<Vec<Complex64>>, xi: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let rho = DensityMatrix::new(matrix(rho)?).py()?;
    let xi = DensityMatrix::new(matrix(xi)?).py()?;
    core_qmam::fidelity(&rho, &xi).py()
}

/// Normalized random state on `n` qubits from a seed.
#[pyfunction]
fn random_state(n: usize, seed: u64) -> Vec<Complex64> {
    qamg_core::rng::random_unit_vector(1 << n, &mut qamg_core::rng::seeded(seed))
}

#[pymodule]
fn qamg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(emit_tables, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_tail, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(random_state, m)?)?;
    Ok(())
}
