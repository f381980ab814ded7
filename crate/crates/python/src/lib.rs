use std::fs::File;
use std::io::BufWriter;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cipeem::edge_fem::EdgeSpace;
use cipeem::experiment::{self, CaseOutput, Config, ExperimentRecord, SlopeSummary, CSV_COLUMNS};
use cipeem::forms::Method;
use cipeem::mesh::{BoxDomain, Mesh};

fn err(e: cipeem::error::Error) -> PyErr {
    match e {
        cipeem::error::Error::Io(e) => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn io_err(e: std::io::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Build a config from keyword arguments; values go through the same parser
/// as config files.
fn config(command: &str, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Config> {
    let mut cfg = Config::for_command(command);
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            let value = match v.extract::<Vec<f64>>() {
                Ok(list) => list
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                Err(_) => v.str()?.to_string(),
            };
            cfg.set(&key, &value).map_err(err)?;
        }
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn record_dict<'py>(py: Python<'py>, r: &ExperimentRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let line = r.to_csv();
    for (name, value) in CSV_COLUMNS.iter().zip(line.split(',')) {
        match *name {
            "method" | "solver" => d.set_item(name, value)?,
            "n" | "dofs" | "iterations" => {
                d.set_item(name, value.parse::<usize>().unwrap_or_default())?
            }
            _ => d.set_item(name, value.parse::<f64>().unwrap_or(f64::NAN))?,
        }
    }
    Ok(d)
}

/// Structured cub6 mesh of a box.
#[pyclass(name = "Mesh", module = "cipeem")]
struct PyMesh {
    inner: Mesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    #[pyo3(signature = (n, lo = (1.0, 1.0, 1.0), hi = (2.0, 2.0, 2.0)))]
    fn new(n: usize, lo: (f64, f64, f64), hi: (f64, f64, f64)) -> PyResult<Self> {
        let domain = BoxDomain::new([lo.0, lo.1, lo.2], [hi.0, hi.1, hi.2]).map_err(err)?;
        Ok(Self {
            inner: Mesh::cub6(n, domain).map_err(err)?,
        })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_faces(&self) -> usize {
        self.inner.num_faces()
    }

    #[getter]
    fn num_tets(&self) -> usize {
        self.inner.num_tets()
    }

    #[getter]
    fn h0(&self) -> f64 {
        self.inner.h0
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    /// Two unknowns per edge.
    #[getter]
    fn num_dofs(&self) -> usize {
        2 * self.inner.num_edges()
    }

    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    fn vertices(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .vertices
            .iter()
            .map(|p| (p.x, p.y, p.z))
            .collect()
    }

    fn tets(&self) -> Vec<[usize; 4]> {
        self.inner.tets.clone()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats().map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("n", s.n)?;
        d.set_item("vertices", s.vertices)?;
        d.set_item("edges", s.edges)?;
        d.set_item("faces", s.faces)?;
        d.set_item("interior_faces", s.interior_faces)?;
        d.set_item("boundary_edges", s.boundary_edges)?;
        d.set_item("tets", s.tets)?;
        d.set_item("h0", s.h0)?;
        d.set_item("h", s.h)?;
        d.set_item("faces_per_class", s.faces_per_class.to_vec())?;
        Ok(d)
    }

    fn write_vtk(&self, path: &str) -> PyResult<()> {
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        cipeem::vtk::write_mesh_vtk(&mut w, &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(n={}, tets={}, h0={})",
            self.inner.n,
            self.inner.num_tets(),
            self.inner.h0
        )
    }
}

/// Result of one solve: the discrete field, its system and the error report.
#[pyclass(name = "Solution", module = "cipeem")]
struct PySolution {
    case: CaseOutput,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn method(&self) -> &'static str {
        self.case.record.method.name()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Complex64> {
        self.case.eh.coeffs.clone()
    }

    #[getter]
    fn rhs(&self) -> Vec<Complex64> {
        self.case.rhs.clone()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.case.solve.relative_residual
    }

    fn record<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        record_dict(py, &self.case.record)
    }

    /// Absolute and relative errors of `E_h` against the exact solution.
    fn errors<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let e = &self.case.errors;
        let d = PyDict::new(py);
        for (k, v) in [
            ("l2", e.l2),
            ("curl", e.curl),
            ("hcurl", e.hcurl),
            ("energy", e.energy),
            ("augmented", e.augmented),
            ("boundary", e.boundary),
            ("rel_l2", e.rel_l2),
            ("rel_curl", e.rel_curl),
            ("rel_hcurl", e.rel_hcurl),
            ("rel_energy", e.rel_energy),
            ("rel_augmented", e.rel_augmented),
            ("rel_boundary", e.rel_boundary),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn stability(&self) -> (f64, f64, f64) {
        let s = &self.case.stability;
        (s.lhs, s.rhs, s.ratio)
    }

    /// `(E_h, curl E_h)` at `x` evaluated on the tet containing it.
    fn evaluate(&self, x: (f64, f64, f64)) -> PyResult<([Complex64; 3], [Complex64; 3])> {
        let p = cipeem::geometry::Vec3::new(x.0, x.1, x.2);
        let space: &EdgeSpace = &self.case.space;
        let t = (0..space.mesh.num_tets())
            .find(|&t| {
                let g = cipeem::edge_fem::TetGeometry::new(space.mesh.tet_points(t));
                g.map(|g| g.barycentric(&p).iter().all(|&b| b >= -1e-12))
                    .unwrap_or(false)
            })
            .ok_or_else(|| PyValueError::new_err("point outside the mesh"))?;
        let (e, c) = space.evaluate(&self.case.eh, t, &p).map_err(err)?;
        Ok(([e.x, e.y, e.z], [c.x, c.y, c.z]))
    }

    fn write_vtk(&self, path: &str) -> PyResult<()> {
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        let title = format!(
            "E_h {} kappa={} n={}",
            self.method(),
            self.case.record.kappa,
            self.case.record.n
        );
        cipeem::vtk::write_field_vtk(&mut w, &self.case.space, &self.case.eh, &title).map_err(err)
    }

    fn write_matrix_market(&self, path: &str) -> PyResult<()> {
        let w = BufWriter::new(File::create(path).map_err(io_err)?);
        self.case.matrix.write_matrix_market(w).map_err(err)
    }

    fn __repr__(&self) -> String {
        let r = &self.case.record;
        format!(
            "Solution(method={}, kappa={}, n={}, rel_hcurl={:.4e})",
            r.method.name(),
            r.kappa,
            r.n,
            r.rel_hcurl
        )
    }
}

/// Solve one case. Keyword arguments are config keys (`kappa`, `n`, `method`,
/// `gamma`, `solution`, `solver`, `quad_degree`, ...).
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn solve(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PySolution> {
    let cfg = config("solve", kwargs)?;
    let method = cfg.methods[0];
    let case = experiment::run_case(&cfg, method, cfg.kappa, cfg.n).map_err(err)?;
    Ok(PySolution { case })
}

fn slopes_dict<'py>(py: Python<'py>, s: &SlopeSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", s.method.name())?;
    d.set_item("rel_l2", s.rel_l2)?;
    d.set_item("rel_hcurl", s.rel_hcurl)?;
    d.set_item("rel_energy", s.rel_energy)?;
    d.set_item("interp_rel_hcurl", s.interp_rel_hcurl)?;
    d.set_item("interp_rel_l2", s.interp_rel_l2)?;
    Ok(d)
}

/// Convergence table over `n_list`; returns `(records, slopes)`.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn convergence<'py>(
    py: Python<'py>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<Bound<'py, PyDict>>)> {
    let cfg = config("convergence", kwargs)?;
    let (records, slopes) = py
        .allow_threads(|| experiment::cmd_convergence(&cfg))
        .map_err(err)?;
    let r = records
        .iter()
        .map(|r| record_dict(py, r))
        .collect::<PyResult<_>>()?;
    let s = slopes
        .iter()
        .map(|s| slopes_dict(py, s))
        .collect::<PyResult<_>>()?;
    Ok((r, s))
}

/// Fixed `kappa_h0` sweep over `kappa_list`.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn ksweep<'py>(
    py: Python<'py>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config("ksweep", kwargs)?;
    let records = py
        .allow_threads(|| experiment::cmd_ksweep(&cfg))
        .map_err(err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

/// Property suite as `(name, status, detail)` triples.
#[pyfunction]
fn validate(py: Python<'_>) -> PyResult<Vec<(String, String, String)>> {
    let cfg = Config::for_command("validate");
    let checks = py.allow_threads(|| cipeem::validation::run_suite(&cfg));
    Ok(checks
        .into_iter()
        .map(|c| {
            let status = match (c.passed, c.soft) {
                (true, _) => "PASS",
                (false, true) => "WARN",
                (false, false) => "FAIL",
            };
            (c.name.to_string(), status.to_string(), c.detail)
        })
        .collect())
}

#[pyfunction]
fn paper_gamma() -> Vec<Complex64> {
    cipeem::forms::paper_gamma().to_vec()
}

/// Least-squares slope of `log err` against `log h`.
#[pyfunction]
fn fit_slope(h: Vec<f64>, err: Vec<f64>) -> PyResult<f64> {
    if h.len() != err.len() || h.len() < 2 {
        return Err(PyValueError::new_err("need two or more (h, err) pairs"));
    }
    Ok(experiment::fit_slope(&h, &err))
}

#[pyfunction]
fn method_names() -> Vec<&'static str> {
    [Method::Eem, Method::Cip]
        .iter()
        .map(|m| m.name())
        .collect()
}

#[pymodule]
#[pyo3(name = "cipeem")]
fn cipeem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(ksweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(paper_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(fit_slope, m)?)?;
    m.add_function(wrap_pyfunction!(method_names, m)?)?;
    m.add("CSV_COLUMNS", CSV_COLUMNS.to_vec())?;
    Ok(())
}
