//! Python bindings: `import ltlab`.

use ltlab::bloch::{lowest_bands, riesz_mean, PotentialField};
use ltlab::constants;
use ltlab::elliptic;
use ltlab::scf::{self, OptimizationResult, ScfConfig};
use ltlab::{Lattice, LatticeKind, LtError};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: LtError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind(name: &str) -> PyResult<LatticeKind> {
    name.parse().map_err(err)
}

#[pyfunction]
fn semiclassical_constant(gamma: f64, dim: usize) -> PyResult<f64> {
    constants::semiclassical_constant(gamma, dim).map_err(err)
}

#[pyfunction]
fn one_bound_state_constant(gamma: f64, dim: usize) -> PyResult<f64> {
    constants::one_bound_state_constant(gamma, dim).map_err(err)
}

#[pyfunction]
fn crossing_exponent(dim: usize) -> PyResult<f64> {
    constants::crossing_exponent(dim).map_err(err)
}

#[pyfunction]
fn complete_elliptic_k(k: f64) -> PyResult<f64> {
    elliptic::complete_elliptic_k(k).map_err(err)
}

#[pyfunction]
fn jacobi_sn(x: f64, k: f64) -> PyResult<f64> {
    elliptic::jacobi_sn(x, k).map_err(err)
}

#[pyfunction]
fn lame_potential(x: f64, k: f64) -> PyResult<f64> {
    elliptic::lame_potential(x, k).map_err(err)
}

/// Lamé validation row as a dict.
#[pyfunction]
fn lame_report<'py>(py: Python<'py>, k: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = elliptic::lame_report(k).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("k", r.k)?;
    d.set_item("period", r.period)?;
    d.set_item("c", r.c)?;
    d.set_item("band_edges", r.band_edges.to_vec())?;
    d.set_item("riesz_mean", r.riesz_mean)?;
    d.set_item("potential_mean", r.potential_mean)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("deviation", r.deviation)?;
    Ok(d)
}

/// Real potential sampled on the cell grid, row-major.
#[pyclass(name = "PotentialField", module = "ltlab")]
struct PyPotential {
    inner: PotentialField,
}

#[pymethods]
impl PyPotential {
    #[new]
    fn new(lattice: &str, n_c: usize, values: Vec<f64>) -> PyResult<Self> {
        let l = Lattice::new(kind(lattice)?);
        Ok(PyPotential { inner: PotentialField::new(&l, n_c, values).map_err(err)? })
    }

    #[staticmethod]
    fn constant(lattice: &str, n_c: usize, value: f64) -> PyResult<Self> {
        let l = Lattice::new(kind(lattice)?);
        Ok(PyPotential { inner: PotentialField::constant(&l, n_c, value).map_err(err)? })
    }

    /// Rescaled Lamé potential of modulus `k` on the unit line cell.
    #[staticmethod]
    fn lame(k: f64, n_c: usize) -> PyResult<Self> {
        let model = elliptic::LameModel::new(k).map_err(err)?;
        let l = Lattice::new(LatticeKind::Line);
        let inner = PotentialField::from_fn(&l, n_c, |y| model.rescaled_potential(y[0])).map_err(err)?;
        Ok(PyPotential { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPotential { inner: PotentialField::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn lattice(&self) -> &'static str {
        self.inner.lattice().kind().as_str()
    }

    #[getter]
    fn n_c(&self) -> usize {
        self.inner.n_c()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    /// `∫_C |V|^p` over the unit cell.
    fn lp_integral(&self, p: f64) -> f64 {
        ltlab::bloch::potential_lp_integral(&self.inner, p)
    }

    /// Lowest `count` Bloch bands on an `n_b^d` quasimomentum grid, one row per ξ.
    #[pyo3(signature = (count, n_b, ecut=None))]
    fn bands(&self, py: Python<'_>, count: usize, n_b: usize, ecut: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
        let v = &self.inner;
        let b = py.detach(|| lowest_bands(v, count, n_b, ecut, false)).map_err(err)?;
        Ok(b.energies().to_vec())
    }

    /// Riesz mean `(2π)^{-d} Σ_j ∫ ε_j(ξ)_-^γ dξ` over the lowest `count` bands.
    #[pyo3(signature = (gamma, count, n_b, ecut=None))]
    fn riesz_mean(&self, py: Python<'_>, gamma: f64, count: usize, n_b: usize, ecut: Option<f64>) -> PyResult<f64> {
        let v = &self.inner;
        let b = py.detach(|| lowest_bands(v, count, n_b, ecut, false)).map_err(err)?;
        Ok(riesz_mean(&b, gamma))
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        format!("PotentialField(lattice={:?}, n_c={})", self.lattice(), self.inner.n_c())
    }
}

/// Settings of one self-consistent optimization.
#[pyclass(name = "ScfConfig", module = "ltlab")]
struct PyConfig {
    inner: ScfConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (lattice, gamma, norm, *, bands=None, n_c=None, n_b=None, ecut=None, tol=None, max_iter=None, width=None, noise=None, mixing=None, seed=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        lattice: &str,
        gamma: f64,
        norm: f64,
        bands: Option<usize>,
        n_c: Option<usize>,
        n_b: Option<usize>,
        ecut: Option<f64>,
        tol: Option<f64>,
        max_iter: Option<usize>,
        width: Option<f64>,
        noise: Option<f64>,
        mixing: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let base = ScfConfig::new(kind(lattice)?, gamma, norm);
        let inner = ScfConfig {
            bands: bands.unwrap_or(base.bands),
            n_c: n_c.unwrap_or(base.n_c),
            n_b: n_b.unwrap_or(base.n_b),
            ecut: ecut.or(base.ecut),
            tol: tol.unwrap_or(base.tol),
            max_iter: max_iter.unwrap_or(base.max_iter),
            width: width.unwrap_or(base.width),
            noise: noise.unwrap_or(base.noise),
            mixing: mixing.or(base.mixing),
            seed: seed.unwrap_or(base.seed),
            ..base
        };
        inner.validate().map_err(err)?;
        Ok(PyConfig { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn norm(&self) -> f64 {
        self.inner.norm
    }

    #[getter]
    fn bands(&self) -> usize {
        self.inner.bands
    }

    fn canonical(&self) -> String {
        self.inner.canonical()
    }

    fn initial_potential(&self) -> PyResult<PyPotential> {
        Ok(PyPotential { inner: scf::init_potential(&self.inner).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("ScfConfig({})", self.inner.canonical())
    }
}

#[pyclass(name = "OptimizationResult", module = "ltlab", frozen)]
struct PyOptimization {
    inner: OptimizationResult,
}

#[pymethods]
impl PyOptimization {
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn ratio_sc(&self) -> f64 {
        self.inner.ratio_sc
    }

    #[getter]
    fn ratio_1bs(&self) -> f64 {
        self.inner.ratio_1bs
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn trace(&self) -> Vec<f64> {
        self.inner.trace.clone()
    }

    #[getter]
    fn negative_bands(&self) -> usize {
        self.inner.negative_bands
    }

    #[getter]
    fn gap(&self) -> Option<f64> {
        self.inner.gap
    }

    #[getter]
    fn potential(&self) -> PyPotential {
        PyPotential { inner: self.inner.potential.clone() }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn csv_row(&self) -> String {
        self.inner.csv_row()
    }

    fn __repr__(&self) -> String {
        format!(
            "OptimizationResult(ratio_sc={}, iterations={}, converged={})",
            self.inner.ratio_sc,
            self.inner.iterations,
            if self.inner.converged { "True" } else { "False" }
        )
    }
}

/// Runs the fixed-point iteration to convergence (or `max_iter`).
#[pyfunction]
#[pyo3(signature = (config, start=None))]
fn optimize(py: Python<'_>, config: PyRef<'_, PyConfig>, start: Option<PyRef<'_, PyPotential>>) -> PyResult<PyOptimization> {
    let cfg = config.inner.clone();
    let start = start.map(|s| s.inner.clone());
    let inner = py.detach(move || scf::optimize_from(&cfg, start.as_ref(), None)).map_err(err)?;
    Ok(PyOptimization { inner })
}

/// Optimizes at every constraint level in `norms`; failed points raise.
#[pyfunction]
#[pyo3(signature = (config, norms, warm_start=false))]
fn sweep(py: Python<'_>, config: PyRef<'_, PyConfig>, norms: Vec<f64>, warm_start: bool) -> PyResult<Vec<PyOptimization>> {
    let cfg = config.inner.clone();
    let out = py.detach(move || scf::sweep_norms(&cfg, &norms, warm_start));
    out.into_iter().map(|r| r.map(|inner| PyOptimization { inner }).map_err(err)).collect()
}

#[pymodule(name = "ltlab")]
fn ltlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyOptimization>()?;
    m.add_function(wrap_pyfunction!(semiclassical_constant, m)?)?;
    m.add_function(wrap_pyfunction!(one_bound_state_constant, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(complete_elliptic_k, m)?)?;
    m.add_function(wrap_pyfunction!(jacobi_sn, m)?)?;
    m.add_function(wrap_pyfunction!(lame_potential, m)?)?;
    m.add_function(wrap_pyfunction!(lame_report, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
