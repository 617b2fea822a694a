//! Python bindings: fields, measures, ball catalogs, distances, experiments
//! and the oracle checks. Reports come back as plain dicts.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use liouville_core::catalog::{BallCatalog, CatalogOptions};
use liouville_core::config::{config_to_toml, parse_config};
use liouville_core::distance::{self, CrossingMode};
use liouville_core::experiments::{self as exp, ExperimentConfig};
use liouville_core::{field, measure, oracle, CellRect, FieldSample, GridSpec, MeasureGrid, Point};

create_exception!(liouville, LiouvilleError, PyException);

fn err(e: liouville_core::Error) -> PyErr {
    LiouvilleError::new_err(e.to_string())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| LiouvilleError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A discrete GFF sample on a padded box.
#[pyclass(frozen, name = "Field")]
struct PyField(FieldSample);

#[pymethods]
impl PyField {
    /// Padded-grid vertex values, row-major.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    /// `(rows, cols)` of the padded vertex grid.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.spec.vertex_rows(), self.0.spec.vertex_cols())
    }

    /// Vertex values inside the inner box.
    fn interior(&self) -> Vec<f64> {
        self.0.interior()
    }

    fn circle_average(&self, x: f64, y: f64, radius: f64) -> PyResult<f64> {
        field::circle_average(&self.0, Point::new(x, y), radius).map_err(err)
    }
}

/// Samples a field on a `width x height` box of cells.
#[pyfunction]
#[pyo3(signature = (width, height, seed, cell_size = 1.0, padding_factor = 2.0))]
fn sample_field(width: usize, height: usize, seed: u64, cell_size: f64, padding_factor: f64) -> PyResult<PyField> {
    let spec = GridSpec::with_padding(width, height, cell_size, padding_factor).map_err(err)?;
    field::sample_dgff(&spec, seed).map(PyField).map_err(err)
}

/// LQG cell masses of the inner box.
#[pyclass(frozen, name = "Measure")]
struct PyMeasure(MeasureGrid);

#[pymethods]
impl PyMeasure {
    #[getter]
    fn cell_mass(&self) -> Vec<f64> {
        self.0.cell_mass.clone()
    }

    /// `(width, height)` in cells.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.width(), self.0.height())
    }

    fn total_mass(&self) -> f64 {
        self.0.total_mass()
    }

    fn ball_mass(&self, x: f64, y: f64, radius: f64) -> f64 {
        self.0.ball_mass(Point::new(x, y), radius)
    }

    /// Mass of the cells `[x0, x0 + w) x [y0, y0 + h)`.
    fn box_mass(&self, x0: usize, y0: usize, w: usize, h: usize) -> f64 {
        self.0.box_mass(CellRect::new(x0, y0, w, h))
    }
}

#[pyfunction]
fn lqg_measure(field: &PyField, gamma: f64, epsilon: f64) -> PyResult<PyMeasure> {
    measure::cell_measures(&field.0, gamma, epsilon).map(PyMeasure).map_err(err)
}

/// Outcome of a distance query.
#[pyclass(frozen, get_all, name = "Distance")]
struct PyDistance {
    value: f64,
    count: usize,
    chain: Vec<u32>,
    reached: bool,
}

impl From<liouville_core::DistanceResult> for PyDistance {
    fn from(d: liouville_core::DistanceResult) -> Self {
        Self {
            value: d.value,
            count: d.count,
            chain: d.chain,
            reached: d.reached,
        }
    }
}

/// Admissible balls of a measure.
#[pyclass(frozen, name = "Catalog")]
struct PyCatalog(BallCatalog);

fn crossing_mode(name: &str) -> PyResult<CrossingMode> {
    match name {
        "hard" => Ok(CrossingMode::Hard),
        "easy" => Ok(CrossingMode::Easy),
        "left_right" => Ok(CrossingMode::LeftRight),
        "bottom_top" => Ok(CrossingMode::BottomTop),
        _ => Err(LiouvilleError::new_err(format!("unknown crossing mode `{name}`"))),
    }
}

#[pymethods]
impl PyCatalog {
    #[new]
    #[pyo3(signature = (measure, stride, r_cap, min_radius_cells = 2.0))]
    fn new(measure: &PyMeasure, stride: usize, r_cap: f64, min_radius_cells: f64) -> PyResult<Self> {
        let mut opts = CatalogOptions::new(stride, r_cap);
        opts.min_radius_cells = min_radius_cells;
        BallCatalog::new(&measure.0, &opts).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.0.radii.clone()
    }

    /// `(center_x, center_y, radius, mass)` of ball `i`.
    fn ball(&self, i: usize) -> PyResult<(f64, f64, f64, f64)> {
        if i >= self.0.len() {
            return Err(LiouvilleError::new_err(format!("ball {i} out of range")));
        }
        let b = self.0.ball(i);
        Ok((b.center.x, b.center.y, b.radius, b.mass))
    }

    fn count_distance(&self, delta: f64, x: (f64, f64), y: (f64, f64)) -> PyResult<PyDistance> {
        distance::count_distance(&self.0, delta, Point::new(x.0, x.1), Point::new(y.0, y.1))
            .map(Into::into)
            .map_err(err)
    }

    fn modified_distance(&self, delta: f64, r: f64, x: (f64, f64), y: (f64, f64)) -> PyResult<PyDistance> {
        distance::modified_distance(&self.0, delta, r, Point::new(x.0, x.1), Point::new(y.0, y.1))
            .map(Into::into)
            .map_err(err)
    }

    /// Crossing distance; `mode` is one of hard, easy, left_right, bottom_top.
    #[pyo3(signature = (delta, r, mode = "hard"))]
    fn crossing_distance(&self, delta: f64, r: f64, mode: &str) -> PyResult<PyDistance> {
        distance::crossing_distance(&self.0, delta, r, crossing_mode(mode)?)
            .map(Into::into)
            .map_err(err)
    }
}

/// The default config as a TOML document.
#[pyfunction]
fn default_config() -> String {
    config_to_toml(&ExperimentConfig::default())
}

fn run(cfg: &ExperimentConfig, name: &str) -> liouville_core::Result<serde_json::Value> {
    let json = |v: serde_json::Result<serde_json::Value>| v.map_err(|e| liouville_core::Error::Io(e.to_string()));
    let crossing = |f: &dyn Fn(&[exp::CrossingRecord]) -> liouville_core::Result<serde_json::Value>| {
        f(&exp::run_crossings(cfg)?)
    };
    match name {
        "quantiles" => crossing(&|r| json(serde_json::to_value(exp::QuantileTable::from_records(cfg, r)))),
        "q_delta" => crossing(&|r| json(serde_json::to_value(exp::q_delta_scan(cfg, r)?))),
        "rsw" => crossing(&|r| json(serde_json::to_value(exp::rsw_ratio(cfg, r)?))),
        "logvar" => crossing(&|r| json(serde_json::to_value(exp::logvar_scan(cfg, r)?))),
        "chi" => crossing(&|r| json(serde_json::to_value(exp::chi_estimate(cfg, r)?))),
        "diameter" => json(serde_json::to_value(exp::diameter_ratio(cfg)?)),
        "scaling" => json(serde_json::to_value(exp::scaling_covariance_test(cfg)?)),
        "efron_stein" => json(serde_json::to_value(exp::efron_stein_decomposition(cfg)?)),
        "efron_stein_linear" => json(serde_json::to_value(exp::efron_stein_linear(cfg)?)),
        "holder" => json(serde_json::to_value(exp::holder_scan(cfg)?)),
        _ => Err(liouville_core::Error::param("name", format!("unknown experiment `{name}`"))),
    }
}

/// Runs a named experiment with a TOML config (empty for defaults) and
/// returns its report.
#[pyfunction]
#[pyo3(signature = (name, config = ""))]
fn run_experiment(py: Python<'_>, name: &str, config: &str) -> PyResult<Py<PyAny>> {
    let cfg = parse_config(config).map_err(err)?;
    let report = py.detach(|| run(&cfg, name)).map_err(err)?;
    to_py(py, &report)
}

/// Exact oracle checks on `instances` random instances each.
#[pyfunction]
#[pyo3(signature = (instances = 20, seed = 0))]
fn oracle_check(py: Python<'_>, instances: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let report = py
        .detach(|| -> liouville_core::Result<_> {
            Ok(serde_json::json!({
                "equivalence": oracle::oracle_equivalence(instances, seed)?,
                "comparisons": oracle::comparison_suite(instances, seed)?,
                "count_vs_modified": oracle::count_vs_modified(instances, seed)?,
            }))
        })
        .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn liouville(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LiouvilleError", m.py().get_type::<LiouvilleError>())?;
    m.add_class::<PyField>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyDistance>()?;
    m.add_function(wrap_pyfunction!(sample_field, m)?)?;
    m.add_function(wrap_pyfunction!(lqg_measure, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}
