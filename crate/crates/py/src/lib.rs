//! Python bindings for `dormant_core`.
//!
//! Qubits are 1-based as in the Rust crate. Results that are records rather
//! than objects (CHSH results, correlation reports, activation tables) come
//! back as plain dicts.

use std::collections::BTreeMap;

use dormant_core::chsh::{evaluate_with, ChshSetting};
use dormant_core::{self as core, BellState, Error, PatternSet, PermutationMap};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

create_exception!(dormant_py, ProtocolError, PyException, "Channel protocol violation.");

fn err(e: Error) -> PyErr {
    match e {
        Error::Input(m) => PyValueError::new_err(m),
        Error::Protocol(m) => ProtocolError::new_err(m),
        Error::Internal(m) => PyRuntimeError::new_err(m),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py_any(py),
        },
        Value::String(s) => s.into_py_any(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_py_any(py)
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_py_any(py)
        }
    }
}

fn json_of<T: serde::Serialize>(py: Python<'_>, t: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(t).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Single-qubit basis `[[a1, conj(a2) e^{i phase}], [a2, -conj(a1) e^{i phase}]]`.
#[pyclass(name = "Unitary1Q", frozen, from_py_object)]
#[derive(Clone)]
struct PyUnitary(core::Unitary1Q);

#[pymethods]
impl PyUnitary {
    #[new]
    fn new(a1: Complex64, a2: Complex64, phase: f64) -> PyResult<Self> {
        core::Unitary1Q::new(a1, a2, phase).py().map(Self)
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(core::Unitary1Q::identity())
    }

    #[staticmethod]
    fn hadamard() -> Self {
        Self(core::Unitary1Q::hadamard())
    }

    #[staticmethod]
    fn pauli_x() -> Self {
        Self(core::Unitary1Q::pauli_x())
    }

    #[staticmethod]
    fn pauli_z() -> Self {
        Self(core::Unitary1Q::pauli_z())
    }

    /// `comp`, `hadamard`, or `u:a1re,a1im,a2re,a2im,alpha`.
    #[staticmethod]
    fn parse(spec: &str) -> PyResult<Self> {
        spec.parse().py().map(Self)
    }

    #[staticmethod]
    fn random(seed: u64) -> Self {
        Self(core::Unitary1Q::random(&mut ChaCha8Rng::seed_from_u64(seed)))
    }

    #[getter]
    fn a1(&self) -> Complex64 {
        self.0.a1()
    }

    #[getter]
    fn a2(&self) -> Complex64 {
        self.0.a2()
    }

    #[getter]
    fn phase(&self) -> f64 {
        self.0.phase()
    }

    fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.0.matrix()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Unitary1Q('{}')", self.0)
    }
}

#[pyclass(name = "StateVector", frozen, from_py_object)]
#[derive(Clone)]
struct PyState(core::StateVector);

#[pymethods]
impl PyState {
    /// Computational basis state, e.g. `StateVector.basis(3, "011")`.
    #[staticmethod]
    fn basis(n: usize, bits: &str) -> PyResult<Self> {
        core::StateVector::new_basis_state(n, bits).py().map(Self)
    }

    #[staticmethod]
    fn from_amplitudes(amps: Vec<Complex64>) -> PyResult<Self> {
        core::StateVector::from_amplitudes(amps).py().map(Self)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn amplitude(&self, bits: &str) -> PyResult<Complex64> {
        self.0.amplitude(bits).py()
    }

    fn apply_1q(&self, gate: &PyUnitary, target: usize) -> PyResult<Self> {
        self.0.apply_1q(&gate.0, target).py().map(Self)
    }

    fn apply_cx(&self, control: usize, target: usize) -> PyResult<Self> {
        self.0.apply_cx(control, target).py().map(Self)
    }

    /// `mapping[i]` is the new position of qubit `i + 1`.
    fn apply_permutation(&self, mapping: Vec<usize>) -> PyResult<Self> {
        let p = PermutationMap::new(mapping).py()?;
        self.0.apply_permutation(&p).py().map(Self)
    }

    fn tensor(&self, other: &PyState) -> PyResult<Self> {
        self.0.tensor(&other.0).py().map(Self)
    }

    fn outcome_probability(&self, qubit: usize, basis: &PyUnitary, outcome: u8) -> PyResult<f64> {
        self.0.outcome_probability(qubit, &basis.0, outcome).py()
    }

    /// Returns `(outcome, probability, collapsed_state)`.
    fn measure(&self, qubit: usize, basis: &PyUnitary, seed: u64) -> PyResult<(u8, f64, PyState)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rec, s) = self.0.measure(qubit, &basis.0, &mut rng).py()?;
        Ok((rec.outcome, rec.probability, PyState(s)))
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        self.0.fidelity(&other.0).py()
    }

    fn concurrence(&self) -> PyResult<f64> {
        self.0.concurrence().py()
    }

    /// Reduced density matrix on `keep`, as a list of rows.
    fn reduced_density(&self, keep: Vec<usize>) -> PyResult<Vec<Vec<Complex64>>> {
        let rho = self.0.reduced_density(&keep).py()?;
        Ok(rho.entries().chunks(rho.dim()).map(<[_]>::to_vec).collect())
    }

    /// Minimum eigenvalue of the partial transpose of the reduced state on `pair`.
    fn ppt_min_eigenvalue(&self, pair: (usize, usize)) -> PyResult<f64> {
        let rho = self.0.reduced_density(&[pair.0, pair.1]).py()?;
        core::ppt_min_eigenvalue(&rho).py()
    }

    fn dump(&self) -> String {
        self.0.dump()
    }

    fn __repr__(&self) -> String {
        format!("StateVector(n_qubits={})", self.0.n_qubits())
    }
}

#[pyfunction]
fn build_psi3() -> PyState {
    PyState(core::build_psi3().state)
}

#[pyfunction]
fn build_psi_n(n: usize) -> PyResult<PyState> {
    Ok(PyState(core::build_psi_n(n).py()?.state))
}

/// Register order `(q1, q2, q3, qL)`.
#[pyfunction]
fn build_psi3l() -> PyState {
    PyState(core::build_psi3l().state)
}

/// Bell state `k` in 1..=4: `00+11`, `01+10`, `01-10`, `00-11`.
#[pyfunction]
fn bell(k: usize) -> PyResult<PyState> {
    let b = BellState::ALL
        .get(k.wrapping_sub(1))
        .ok_or_else(|| PyValueError::new_err(format!("Bell index must be 1..=4, got {k}")))?;
    Ok(PyState(b.state()))
}

#[pyfunction]
#[pyo3(signature = (state, endpoints, bases))]
fn activation_table(
    py: Python<'_>,
    state: &PyState,
    endpoints: (usize, usize),
    bases: BTreeMap<usize, PyUnitary>,
) -> PyResult<Py<PyAny>> {
    let bases = bases.into_iter().map(|(q, u)| (q, u.0)).collect();
    let table = core::dormant::state_activation_table(&state.0, endpoints, &bases).py()?;
    to_py(py, &table.to_json())
}

#[pyfunction]
#[pyo3(signature = (state, pair=(1, 2), u=None, v=None, all_patterns=false))]
fn chsh(
    py: Python<'_>,
    state: &PyState,
    pair: (usize, usize),
    u: Option<PyUnitary>,
    v: Option<PyUnitary>,
    all_patterns: bool,
) -> PyResult<Py<PyAny>> {
    let id = core::Unitary1Q::identity();
    let setting = ChshSetting::rotated(u.map_or(id, |x| x.0), v.map_or(id, |x| x.0));
    let patterns = if all_patterns {
        PatternSet::All
    } else {
        PatternSet::Admissible
    };
    let r = evaluate_with(&state.0, pair, &setting, patterns).py()?;
    to_py(py, &r.to_json())
}

#[pyfunction]
#[pyo3(signature = (state, pair=(1, 2), trials=1000, seed=0))]
fn rotation_sweep(
    py: Python<'_>,
    state: &PyState,
    pair: (usize, usize),
    trials: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = core::rotation_sweep(&state.0, pair, trials, &mut rng, PatternSet::Admissible).py()?;
    json_of(py, &s)
}

#[pyfunction]
#[pyo3(signature = (state, pair=(1, 2)))]
fn classify(state: &PyState, pair: (usize, usize)) -> PyResult<String> {
    Ok(format!("{:?}", core::classify(&state.0, pair).py()?))
}

#[pyfunction]
fn conditional_report(
    py: Python<'_>,
    state: &PyState,
    measured: usize,
    measured_basis: &PyUnitary,
    target: usize,
    target_basis: &PyUnitary,
) -> PyResult<Py<PyAny>> {
    let r = core::conditional_report(&state.0, measured, &measured_basis.0, target, &target_basis.0).py()?;
    json_of(py, &r)
}

#[pyfunction]
fn lockless_deviation(u1: &PyUnitary, u2: &PyUnitary) -> f64 {
    core::lockless_deviation(&u1.0, &u2.0)
}

#[pyfunction]
fn plan_resources(py: Python<'_>, n: usize, k: usize) -> PyResult<Py<PyAny>> {
    json_of(py, &core::plan_resources(n, k).py()?)
}

/// One collective channel session over `psiN(n)`.
#[pyclass(name = "ChannelSession")]
struct PySession {
    inner: core::ChannelSession,
    rng: ChaCha8Rng,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (n, endpoints=(1, 2), seed=0))]
    fn new(n: usize, endpoints: (usize, usize), seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: core::ChannelSession::setup(n, endpoints).py()?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn controllers(&self) -> Vec<usize> {
        self.inner.controllers()
    }

    #[getter]
    fn status(&self) -> String {
        match self.inner.status() {
            core::SessionStatus::Activated(b) => format!("activated:{}", b.name()),
            s => s.name().to_string(),
        }
    }

    #[getter]
    fn concurrence(&self) -> Option<f64> {
        self.inner.concurrence()
    }

    /// Measures controller `id`; returns the (undelivered) message.
    fn measure(&mut self, py: Python<'_>, id: usize, basis: &PyUnitary) -> PyResult<Py<PyAny>> {
        let msg = self.inner.controller_measure(id, &basis.0, &mut self.rng).py()?;
        json_of(py, &msg)
    }

    fn lose_message(&mut self, id: usize) -> PyResult<()> {
        self.inner.lose_message(id).py()
    }

    fn deliver_and_resolve(&mut self) -> PyResult<String> {
        self.inner.deliver_and_resolve().py()?;
        Ok(self.status())
    }

    /// Reduced state of the endpoints given what they have been told so far.
    fn endpoint_view(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let rho = self.inner.endpoint_view().py()?;
        Ok(rho.entries().chunks(rho.dim()).map(<[_]>::to_vec).collect())
    }

    fn teleport(&mut self, payload: &PyState) -> PyResult<f64> {
        self.inner.teleport_over(&payload.0, &mut self.rng).py()
    }

    fn transcript_jsonl(&self) -> String {
        self.inner.transcript_jsonl()
    }
}

#[pymodule]
fn dormant_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUnitary>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PySession>()?;
    m.add("ProtocolError", m.py().get_type::<ProtocolError>())?;
    m.add_function(wrap_pyfunction!(build_psi3, m)?)?;
    m.add_function(wrap_pyfunction!(build_psi_n, m)?)?;
    m.add_function(wrap_pyfunction!(build_psi3l, m)?)?;
    m.add_function(wrap_pyfunction!(bell, m)?)?;
    m.add_function(wrap_pyfunction!(activation_table, m)?)?;
    m.add_function(wrap_pyfunction!(chsh, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_report, m)?)?;
    m.add_function(wrap_pyfunction!(lockless_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(plan_resources, m)?)?;
    Ok(())
}
