//! Python bindings. Matrices cross the boundary as nested lists of complex numbers;
//! reports come back as plain dicts.

use phasespace::foundation::axioms::{verify_with_mode, VerifyMode};
use phasespace::foundation::operator::{check_density, random_density};
use phasespace::foundation::quadrature::{sphere_quadrature, SphereGrid};
use phasespace::hw::FockSpace;
use phasespace::moyal::{self, snapshot, GridFunction, PhaseGrid, Poly, Provenance};
use phasespace::states::NamedState;
use phasespace::su2::{self, SpinSystem as CoreSpin};
use phasespace::{metrics, tomography, wootters, KernelSpec, LatticePoint, Operator, PsError, C64};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

create_exception!(phasespace_py, PhaseSpaceError, PyValueError);

fn err(e: PsError) -> PyErr {
    PhaseSpaceError::new_err(e.to_string())
}

type Matrix = Vec<Vec<C64>>;

fn to_op(m: &Matrix) -> PyResult<Operator> {
    let d = m.len();
    if m.iter().any(|r| r.len() != d) {
        return Err(PhaseSpaceError::new_err("matrix must be square"));
    }
    Ok(Operator::from_fn(d, d, |i, k| m[i][k]))
}

fn from_op(a: &Operator) -> Matrix {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|k| a[(i, k)]).collect()).collect()
}

fn density(m: &Matrix) -> PyResult<Operator> {
    let rho = to_op(m)?;
    check_density(&rho).map_err(err)?;
    Ok(rho)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report<'py>(py: Python<'py>, r: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(r).map_err(|e| PhaseSpaceError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Built-in state from a JSON description such as `{"kind": "ghz", "params": {"n": 3}}`.
#[pyfunction]
fn named_state(spec: &str) -> PyResult<Matrix> {
    let named: NamedState = serde_json::from_str(spec).map_err(|e| PhaseSpaceError::new_err(e.to_string()))?;
    Ok(from_op(&named.build().map_err(err)?))
}

/// Random density matrix of dimension `dim`.
#[pyfunction]
fn random_state(dim: usize, seed: u64) -> Matrix {
    from_op(&random_density(dim, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Kernel family descriptor.
#[pyclass(name = "KernelSpec", frozen)]
struct PyKernelSpec {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernelSpec {
    #[staticmethod]
    #[pyo3(signature = (j, s = 0.0))]
    fn su2(j: f64, s: f64) -> PyResult<Self> {
        Ok(Self { inner: KernelSpec::su2(j, s).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n_max, s = 0.0))]
    fn hw(n_max: usize, s: f64) -> PyResult<Self> {
        Ok(Self { inner: KernelSpec::hw(n_max, s).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (s = 0.0))]
    fn wootters(s: f64) -> PyResult<Self> {
        Ok(Self { inner: KernelSpec::wootters(s).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, s = 0.0))]
    fn sun(n: usize, s: f64) -> PyResult<Self> {
        Ok(Self { inner: KernelSpec::sun(n, s).map_err(err)? })
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Stratonovich-Weyl axiom residuals; `samples` switches SU(N) to Monte Carlo.
    #[pyo3(signature = (trials = 6, seed = 1, samples = None))]
    fn verify<'py>(&self, py: Python<'py>, trials: usize, seed: u64, samples: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        let mode = match samples {
            Some(samples) => VerifyMode::MonteCarlo { samples },
            None => VerifyMode::Auto,
        };
        let r = verify_with_mode(&self.inner, trials, seed, mode).map_err(err)?;
        report(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("KernelSpec({:?}, s={})", self.inner.family, self.inner.s)
    }
}

/// Spin-j system with the Stratonovich kernel.
#[pyclass(name = "SpinSystem", frozen)]
struct PySpinSystem {
    inner: CoreSpin,
}

impl PySpinSystem {
    fn grid(&self) -> SphereGrid {
        sphere_quadrature(2 * self.inner.dim())
    }
}

#[pymethods]
impl PySpinSystem {
    #[new]
    fn new(j: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreSpin::new(j).map_err(err)? })
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.j()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn parity_diagonal(&self, s: f64) -> PyResult<Vec<f64>> {
        self.inner.parity_diagonal(s).map_err(err)
    }

    fn kernel(&self, s: f64, theta: f64, phi: f64) -> PyResult<Matrix> {
        Ok(from_op(&self.inner.kernel_at(s, phasespace::EulerPoint::sphere(theta, phi)).map_err(err)?))
    }

    /// W^(s) at one point.
    #[pyo3(signature = (rho, theta, phi, s = 0.0))]
    fn value(&self, rho: Matrix, theta: f64, phi: f64, s: f64) -> PyResult<f64> {
        Ok(su2::evaluate_point(&self.inner, &density(&rho)?, s, theta, phi).map_err(err)?.re)
    }

    /// (theta, phi, value) rows on the tomography net.
    #[pyo3(signature = (rho, s = 0.0))]
    fn sample_net(&self, rho: Matrix, s: f64) -> PyResult<Vec<(f64, f64, f64)>> {
        tomography::sample_on_net(&density(&rho)?, s).map_err(err)
    }

    /// State and report from (theta, phi, value) samples.
    #[pyo3(signature = (samples, s = 0.0))]
    fn reconstruct<'py>(&self, py: Python<'py>, samples: Vec<(f64, f64, f64)>, s: f64) -> PyResult<(Matrix, Bound<'py, PyAny>)> {
        let (r, rho) = tomography::reconstruct_from_grid(self.inner.dim() as u32 - 1, &samples, s).map_err(err)?;
        Ok((from_op(&rho), report(py, &r)?))
    }

    fn purity(&self, rho: Matrix) -> PyResult<f64> {
        let f = su2::evaluate(&self.inner, &density(&rho)?, 0.0, &self.grid()).map_err(err)?;
        metrics::purity(&f).map_err(err)
    }

    fn negativity(&self, rho: Matrix) -> PyResult<f64> {
        let f = su2::evaluate(&self.inner, &density(&rho)?, 0.0, &self.grid()).map_err(err)?;
        Ok(metrics::negativity_volume(&f).map_err(err)?.value)
    }

    fn wehrl(&self, rho: Matrix) -> PyResult<f64> {
        let q = su2::q_function(&self.inner, &density(&rho)?, &self.grid()).map_err(err)?;
        Ok(metrics::wehrl_entropy(&q).map_err(err)?.value)
    }

    /// <J_axis> from the first moments of the Wigner function; axis is "x", "y" or "z".
    fn expectation(&self, rho: Matrix, axis: &str) -> PyResult<f64> {
        let which = match axis {
            "x" => metrics::JAxis::Jx,
            "y" => metrics::JAxis::Jy,
            "z" => metrics::JAxis::Jz,
            _ => return Err(PhaseSpaceError::new_err("axis must be x, y or z")),
        };
        let f = su2::evaluate(&self.inner, &density(&rho)?, 0.0, &self.grid()).map_err(err)?;
        metrics::expectation_from_moments(&f, which).map_err(err)
    }
}

/// Discrete qubit function in the order (0,0), (0,1), (1,0), (1,1) of (z, x).
#[pyfunction]
#[pyo3(signature = (rho, s = 0.0))]
fn wootters_wigner(rho: Matrix, s: f64) -> PyResult<Vec<f64>> {
    let f = wootters::wigner(&density(&rho)?, s).map_err(err)?;
    Ok(LatticePoint::all().iter().map(|p| f.get(*p).re).collect())
}

#[pyfunction]
fn feynman_probabilities(rho: Matrix) -> PyResult<[f64; 4]> {
    wootters::feynman_probabilities(&density(&rho)?).map_err(err)
}

/// W^(s) of a truncated oscillator state at complex amplitudes alpha.
#[pyfunction]
#[pyo3(signature = (rho, alphas, s = 0.0))]
fn hw_wigner(rho: Matrix, alphas: Vec<C64>, s: f64) -> PyResult<Vec<f64>> {
    let rho = density(&rho)?;
    let space = FockSpace::new(rho.nrows() - 1).map_err(err)?;
    Ok(phasespace::hw::evaluate(&space, &rho, s, &alphas).map_err(err)?.real_values())
}

/// Direct fidelity estimate of `actual` against a pure `target`.
#[pyfunction]
fn dfe<'py>(py: Python<'py>, target: Matrix, actual: Matrix, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = metrics::dfe_sample("target", &to_op(&target)?, &density(&actual)?, samples, Some(seed)).map_err(err)?;
    report(py, &r)
}

/// Wigner function sampled on a square (q, p) grid, evolved under the Moyal bracket.
#[pyclass(name = "GridFunction")]
struct PyGridFunction {
    inner: GridFunction,
}

fn hamiltonian(name: &str) -> PyResult<Poly> {
    match name {
        "harmonic" => Ok(Poly::harmonic()),
        "linear" => Ok(Poly::q()),
        "quartic" => Ok(Poly::quartic()),
        _ => Err(PhaseSpaceError::new_err(format!("unknown Hamiltonian `{name}`"))),
    }
}

#[pymethods]
impl PyGridFunction {
    #[staticmethod]
    #[pyo3(signature = (extent, n, q0, p0, hbar = 1.0))]
    fn coherent(extent: f64, n: usize, q0: f64, p0: f64, hbar: f64) -> PyResult<Self> {
        let g = PhaseGrid::symmetric(extent, n, hbar).map_err(err)?;
        Ok(Self { inner: GridFunction::coherent(&g, q0, p0) })
    }

    /// Values are q-major: index i * n + k holds (q_i, p_k).
    #[staticmethod]
    #[pyo3(signature = (extent, n, values, hbar = 1.0))]
    fn from_values(extent: f64, n: usize, values: Vec<f64>, hbar: f64) -> PyResult<Self> {
        let g = PhaseGrid::symmetric(extent, n, hbar).map_err(err)?;
        Ok(Self { inner: GridFunction::from_real(g, values, Provenance::State).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: snapshot::read(std::path::Path::new(path)).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        snapshot::write(std::path::Path::new(path), &self.inner).map_err(err)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.real_values()
    }

    fn mass(&self) -> f64 {
        self.inner.mass().re
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn step_limit(&self, hamiltonian_name: &str) -> PyResult<f64> {
        Ok(moyal::step_limit(&hamiltonian(hamiltonian_name)?, &self.inner.grid))
    }

    /// Returns the evolved function and a dict with drift diagnostics.
    fn evolve<'py>(&self, py: Python<'py>, hamiltonian_name: &str, dt: f64, steps: usize) -> PyResult<(PyGridFunction, Bound<'py, PyAny>)> {
        let h = GridFunction::hamiltonian(&self.inner.grid, hamiltonian(hamiltonian_name)?);
        let ev = moyal::evolve(&self.inner, &h, dt, steps).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("time", ev.time)?;
        d.set_item("steps", ev.steps)?;
        d.set_item("step_limit", ev.step_limit)?;
        d.set_item("mass_drift", ev.mass_drift)?;
        d.set_item("purity_drift", ev.purity_drift)?;
        d.set_item("padding_fraction", ev.padding_fraction)?;
        d.set_item("warnings", ev.warnings)?;
        Ok((PyGridFunction { inner: ev.function }, d.into_any()))
    }

    fn star(&self, other: &PyGridFunction) -> PyResult<Vec<C64>> {
        Ok(moyal::star_product(&self.inner, &other.inner).map_err(err)?.values)
    }

    fn bracket(&self, other: &PyGridFunction) -> PyResult<Vec<C64>> {
        Ok(moyal::moyal_bracket(&self.inner, &other.inner).map_err(err)?.values)
    }

    fn sup_distance(&self, other: &PyGridFunction) -> f64 {
        self.inner.sup_distance(&other.inner)
    }
}

#[pymodule]
fn phasespace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PhaseSpaceError", m.py().get_type::<PhaseSpaceError>())?;
    m.add_class::<PyKernelSpec>()?;
    m.add_class::<PySpinSystem>()?;
    m.add_class::<PyGridFunction>()?;
    m.add_function(wrap_pyfunction!(named_state, m)?)?;
    m.add_function(wrap_pyfunction!(random_state, m)?)?;
    m.add_function(wrap_pyfunction!(wootters_wigner, m)?)?;
    m.add_function(wrap_pyfunction!(feynman_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(hw_wigner, m)?)?;
    m.add_function(wrap_pyfunction!(dfe, m)?)?;
    Ok(())
}
