//! Python bindings: config-driven runs plus direct access to the map,
//! its preimages and the expansion quantities.

// pyo3 0.22 macros trip this lint on `PyResult` returns.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nuhcert::cli::{run_verb, Verb};
use nuhcert::config::{Auto, RunConfig};
use nuhcert::endo::ComposedEndo;
use nuhcert::lab::{cone_census, i_n_direct, i_n_recursive, lyapunov_seeded};
use nuhcert::lattice::{elementary_divisors as divisors, normalize_coordinates, IntMatrix};
use nuhcert::pipeline::build;
use nuhcert::report::RunReport;
use nuhcert::torus::TorusPoint;

fn py_err(e: nuhcert::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(m: [i64; 4]) -> IntMatrix {
    IntMatrix::new(m[0], m[1], m[2], m[3])
}

fn point(x1: f64, x2: f64) -> PyResult<TorusPoint> {
    TorusPoint::new(x1, x2).map_err(py_err)
}

fn verb(name: &str) -> PyResult<Verb> {
    Ok(match name {
        "certify" => Verb::Certify,
        "verify" => Verb::Verify,
        "scan" => Verb::Scan,
        "census" => Verb::Census,
        "lyapunov" => Verb::Lyapunov,
        "validate-profile" => Verb::ValidateProfile,
        "normalize" => Verb::Normalize,
        other => return Err(PyValueError::new_err(format!("unknown verb {other:?}"))),
    })
}

/// Run configuration in the `key = value` text format.
#[pyclass(name = "Config")]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => RunConfig::parse(t).map_err(py_err)?,
            None => RunConfig::default(),
        };
        Ok(PyConfig { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn matrix(&self) -> [i64; 4] {
        self.inner.matrix
    }

    #[setter]
    fn set_matrix(&mut self, m: [i64; 4]) {
        self.inner.matrix = m;
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[setter]
    fn set_t(&mut self, t: f64) {
        self.inner.t = t;
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[setter]
    fn set_r(&mut self, r: f64) {
        self.inner.r = r;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, s: u64) {
        self.inner.seed = s;
    }

    #[setter]
    fn set_depth(&mut self, n: usize) {
        self.inner.depth = Auto::Value(n);
    }

    #[setter]
    fn set_grid(&mut self, g: (usize, usize, usize)) {
        self.inner.grid = g;
    }

    /// Run a CLI verb; returns `(exit_code, report_json)`.
    #[pyo3(signature = (verb_name, fixed_clock = true))]
    fn run(&self, verb_name: &str, fixed_clock: bool) -> PyResult<(i32, String)> {
        let (rep, code) = run_verb(verb(verb_name)?, &self.inner, fixed_clock);
        Ok((code, rep.to_json()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(matrix={:?}, t={}, r={})",
            self.inner.matrix, self.inner.t, self.inner.r
        )
    }
}

/// The composed map `f = E ∘ v ∘ h_t` built from a config.
#[pyclass(name = "Endo")]
struct PyEndo {
    inner: ComposedEndo,
}

#[pymethods]
impl PyEndo {
    #[new]
    #[pyo3(signature = (config = None))]
    fn new(config: Option<&PyConfig>) -> PyResult<Self> {
        let cfg = config.map_or_else(RunConfig::default, |c| c.inner.clone());
        let mut rep = RunReport::new("python", cfg.clone(), 0);
        let built = build(&cfg, &mut rep).map_err(py_err)?;
        Ok(PyEndo { inner: built.endo })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.cone().alpha
    }

    fn apply(&self, x1: f64, x2: f64) -> PyResult<(f64, f64)> {
        let y = self.inner.apply_f(point(x1, x2)?);
        Ok((y.x1, y.x2))
    }

    fn preimages(&self, x1: f64, x2: f64) -> PyResult<Vec<(f64, f64)>> {
        Ok(self
            .inner
            .preimages_f(point(x1, x2)?)
            .into_iter()
            .map(|r| (r.y.x1, r.y.x2))
            .collect())
    }

    /// `I(x, u; f^n)` by the preimage recursion; returns the per-level terms `J_i`.
    fn j_series(&self, x1: f64, x2: f64, u1: f64, u2: f64, n: usize) -> PyResult<Vec<f64>> {
        let s = i_n_recursive(&self.inner, point(x1, x2)?, [u1, u2], n).map_err(py_err)?;
        Ok(s.j)
    }

    /// `I(x, u; f^n)` from products of Jacobians.
    fn i_direct(&self, x1: f64, x2: f64, u1: f64, u2: f64, n: usize) -> PyResult<f64> {
        i_n_direct(&self.inner, point(x1, x2)?, [u1, u2], n).map_err(py_err)
    }

    /// Vertical-cone counts `g_i` and averages `a_i` for `i = 0..=n`, with recursion bounds.
    fn census(
        &self,
        x1: f64,
        x2: f64,
        u1: f64,
        u2: f64,
        n: usize,
    ) -> PyResult<(Vec<u64>, Vec<f64>, Vec<f64>)> {
        let c = cone_census(&self.inner, point(x1, x2)?, [u1, u2], n).map_err(py_err)?;
        Ok((c.g, c.a, c.bound))
    }

    /// `(lambda_plus, lambda_minus)` from one seeded start.
    #[pyo3(signature = (seed, steps = 100_000, burn_in = 1000))]
    fn lyapunov(&self, seed: u64, steps: usize, burn_in: usize) -> PyResult<(f64, f64)> {
        let e = lyapunov_seeded(&self.inner, seed, steps, burn_in).map_err(py_err)?;
        Ok((e.lambda_plus, e.lambda_minus))
    }
}

/// `(tau1, tau2)` for the integer matrix given row-major.
#[pyfunction]
fn elementary_divisors(m: [i64; 4]) -> PyResult<(u64, u64)> {
    let d = divisors(&matrix(m)).map_err(py_err)?;
    Ok((d.tau1, d.tau2))
}

/// `(P, G)` row-major with `G = P⁻¹ E P` normalized.
#[pyfunction]
fn normalize(m: [i64; 4]) -> PyResult<([i64; 4], [i64; 4])> {
    let cc = normalize_coordinates(&matrix(m)).map_err(py_err)?;
    let flat = |x: IntMatrix| [x.0[0][0], x.0[0][1], x.0[1][0], x.0[1][1]];
    Ok((flat(cc.p), flat(cc.g)))
}

/// `L(k)` as `(numerator, denominator)`.
#[pyfunction]
fn l_homothety(k: u32) -> PyResult<(i64, i64)> {
    let l = nuhcert::certificate::l_homothety(k).map_err(py_err)?;
    Ok((*l.numer(), *l.denom()))
}

/// `L(tau1, tau2)` as `(numerator, denominator)`.
#[pyfunction]
fn l_general(tau1: u32, tau2: u32) -> PyResult<(i64, i64)> {
    let l = nuhcert::certificate::l_general(tau1, tau2).map_err(py_err)?;
    Ok((*l.numer(), *l.denom()))
}

#[pymodule]
fn pynuhcert(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyEndo>()?;
    m.add_function(wrap_pyfunction!(elementary_divisors, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(l_homothety, m)?)?;
    m.add_function(wrap_pyfunction!(l_general, m)?)?;
    Ok(())
}
