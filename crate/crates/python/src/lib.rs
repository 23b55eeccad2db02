//! Python bindings. Matrices are passed as lists of rows of Python complex
//! numbers; domain errors raise `MajorreachError` with the error name first.

use majorreach::controllability::{hamiltonian_generators, lie_closure_dim, LIE_TOL};
use majorreach::io::{to_canonical_string, ScheduleFile};
use majorreach::lindblad::{
    apply_noise, make_noise, propagate, trotter_noise, ControlSystem, NoiseOperator,
};
use majorreach::majorization::{self, DensityMatrix, EigenvalueSequence, DEFAULT_TOL};
use majorreach::synthesis::{self, Mode, Schedule};
use majorreach::{crange, ComplexMatrix, Error};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(pymajorreach, MajorreachError, PyException);

type Rows = Vec<Vec<Complex64>>;

fn domain(e: Error) -> PyErr {
    MajorreachError::new_err(format!("{}: {e}", e.name()))
}

fn matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    Ok(ComplexMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows(m: &ComplexMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn state(r: &Rows) -> PyResult<DensityMatrix> {
    DensityMatrix::new(matrix(r)?).map_err(domain)
}

fn sequence(x: Vec<f64>) -> PyResult<EigenvalueSequence> {
    EigenvalueSequence::new(x).map_err(domain)
}

#[pyclass(
    name = "NoiseOperator",
    module = "pymajorreach",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PyNoise {
    inner: NoiseOperator,
}

#[pymethods]
impl PyNoise {
    #[new]
    fn new(v: Rows) -> PyResult<Self> {
        Ok(PyNoise {
            inner: make_noise(&matrix(&v)?).map_err(domain)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eigenvalues(&self) -> Vec<Complex64> {
        self.inner.eigvals().to_vec()
    }

    fn eigenvectors(&self) -> Rows {
        rows(self.inner.eigvecs())
    }

    fn mu(&self) -> Rows {
        rows(self.inner.mu())
    }

    /// `e^{−tΓ_V}(x)`.
    fn apply(&self, x: Rows, t: f64) -> PyResult<Rows> {
        if t < 0.0 {
            return Err(PyValueError::new_err("time must be nonnegative"));
        }
        let x = matrix(&x)?;
        if x.nrows() != self.inner.dim() || x.ncols() != self.inner.dim() {
            return Err(domain(Error::DimensionMismatch {
                expected: self.inner.dim(),
                found: x.nrows(),
            }));
        }
        Ok(rows(&apply_noise(&x, &self.inner, t)))
    }
}

#[pyclass(
    name = "ControlSystem",
    module = "pymajorreach",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PySystem {
    inner: ControlSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(h0: Rows, controls: Vec<Rows>, v: Rows) -> PyResult<Self> {
        let controls = controls.iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        let noise = make_noise(&matrix(&v)?).map_err(domain)?;
        Ok(PySystem {
            inner: ControlSystem::new(matrix(&h0)?, controls, noise).map_err(domain)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn noise(&self) -> PyNoise {
        PyNoise {
            inner: self.inner.noise.clone(),
        }
    }

    /// Evolves `rho` for time `t` under constant controls `u`, with the noise
    /// switched on when `gamma` is true.
    fn propagate(&self, rho: Rows, u: Vec<f64>, gamma: bool, t: f64) -> PyResult<Rows> {
        let out = propagate(&state(&rho)?, &self.inner, &u, gamma, t).map_err(domain)?;
        Ok(rows(out.matrix()))
    }

    /// Trotterized noise and its trace-norm deviation from the exact semigroup.
    fn trotter_noise(&self, rho: Rows, t: f64, slices: u64) -> PyResult<(Rows, f64)> {
        let (out, deviation) =
            trotter_noise(&state(&rho)?, &self.inner, t, slices).map_err(domain)?;
        Ok((rows(out.matrix()), deviation))
    }

    /// `(dimension, target dimension, controllable)` of the Lie closure.
    fn lie_rank(&self) -> PyResult<(usize, usize, bool)> {
        let n = self.inner.dim();
        let generators = hamiltonian_generators(&self.inner.h0, &self.inner.controls);
        let r = lie_closure_dim(&generators, LIE_TOL, n * n).map_err(domain)?;
        Ok((r.dimension, r.target_dimension, r.controllable))
    }
}

#[pyclass(
    name = "Schedule",
    module = "pymajorreach",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PySchedule {
    inner: Schedule,
}

#[pymethods]
impl PySchedule {
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn block_size(&self) -> usize {
        self.inner.block_size
    }

    #[getter]
    fn padded(&self) -> bool {
        self.inner.padded
    }

    #[getter]
    fn budget_total(&self) -> f64 {
        self.inner.budget_total()
    }

    #[getter]
    fn total_noise_time(&self) -> f64 {
        self.inner.total_noise_time()
    }

    fn step_labels(&self) -> Vec<String> {
        self.inner.steps.iter().map(|s| s.label.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.steps.len()
    }

    fn to_json(&self) -> String {
        to_canonical_string(&ScheduleFile::new(self.inner.clone()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ScheduleFile::parse(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySchedule {
            inner: file.schedule,
        })
    }
}

/// `x ≺ y` by partial sums.
#[pyfunction]
#[pyo3(signature = (x, y, tol = DEFAULT_TOL))]
fn majorizes(x: Vec<f64>, y: Vec<f64>, tol: f64) -> PyResult<bool> {
    Ok(majorization::majorizes(&sequence(x)?, &sequence(y)?, tol))
}

/// `ρ ≺ ω` on spectra.
#[pyfunction]
#[pyo3(signature = (rho, omega, tol = DEFAULT_TOL))]
fn state_majorizes(rho: Rows, omega: Rows, tol: f64) -> PyResult<bool> {
    Ok(majorization::state_majorizes(
        &state(&rho)?,
        &state(&omega)?,
        tol,
    ))
}

/// `ρ ≺ ω` through suprema of `tr(ρ U† P U)` over rank-`k` projections.
#[pyfunction]
#[pyo3(signature = (rho, omega, tol = DEFAULT_TOL))]
fn ando_majorization_test(rho: Rows, omega: Rows, tol: f64) -> PyResult<bool> {
    Ok(crange::ando_majorization_test(
        &state(&rho)?,
        &state(&omega)?,
        tol,
    ))
}

/// Unitary `U` with `diag(U diag(y) U†) = x` for sorted `x ≺ y`.
#[pyfunction]
fn schur_horn_unitary(x: Vec<f64>, y: Vec<f64>) -> PyResult<Rows> {
    let u = majorization::schur_horn_unitary(&sequence(x)?, &sequence(y)?).map_err(domain)?;
    Ok(rows(&u))
}

#[pyfunction]
fn random_majorized_state(omega: Rows, steps: usize, seed: u64) -> PyResult<Rows> {
    Ok(rows(
        majorization::random_majorized_state(&state(&omega)?, steps, seed).matrix(),
    ))
}

/// Supremum of `Re tr(C U† T U)` over unitaries.
#[pyfunction]
fn k_c(c: Rows, t: Rows) -> PyResult<f64> {
    crange::k_c(&matrix(&c)?, &matrix(&t)?).map_err(domain)
}

#[pyfunction]
fn k_c_bruteforce(c: Rows, t: Rows) -> PyResult<f64> {
    crange::k_c_bruteforce(&matrix(&c)?, &matrix(&t)?).map_err(domain)
}

/// Seeded samples of `tr(C U† T U)`.
#[pyfunction]
fn sample_c_numerical_range(
    c: Rows,
    t: Rows,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<Complex64>> {
    let s = crange::sample_c_numerical_range(&matrix(&c)?, &matrix(&t)?, samples, seed)
        .map_err(domain)?;
    Ok(s.values.points)
}

#[pyfunction]
#[pyo3(signature = (rho0, target, system, epsilon, mode = "exact"))]
fn synthesize(
    rho0: Rows,
    target: Rows,
    system: &PySystem,
    epsilon: f64,
    mode: &str,
) -> PyResult<PySchedule> {
    let mode: Mode = mode
        .parse()
        .map_err(|e: Error| PyValueError::new_err(e.to_string()))?;
    let schedule = synthesis::synthesize(
        &state(&rho0)?,
        &state(&target)?,
        &system.inner,
        epsilon,
        mode,
    )
    .map_err(domain)?;
    Ok(PySchedule { inner: schedule })
}

#[pyfunction]
fn execute(schedule: &PySchedule, rho0: Rows, system: &PySystem) -> PyResult<Rows> {
    let out = synthesis::execute(&schedule.inner, &state(&rho0)?, &system.inner).map_err(domain)?;
    Ok(rows(out.matrix()))
}

/// Verification report as canonical JSON text.
#[pyfunction]
fn verify(schedule: &PySchedule, rho0: Rows, target: Rows, system: &PySystem) -> PyResult<String> {
    let report = synthesis::verify(
        &schedule.inner,
        &state(&rho0)?,
        &state(&target)?,
        &system.inner,
    )
    .map_err(domain)?;
    Ok(to_canonical_string(&report))
}

#[pymodule]
fn pymajorreach(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MajorreachError", m.py().get_type::<MajorreachError>())?;
    m.add_class::<PyNoise>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(majorizes, m)?)?;
    m.add_function(wrap_pyfunction!(state_majorizes, m)?)?;
    m.add_function(wrap_pyfunction!(ando_majorization_test, m)?)?;
    m.add_function(wrap_pyfunction!(schur_horn_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(random_majorized_state, m)?)?;
    m.add_function(wrap_pyfunction!(k_c, m)?)?;
    m.add_function(wrap_pyfunction!(k_c_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(sample_c_numerical_range, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
