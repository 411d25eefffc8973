//! Python bindings: citizens, route catalogs, rating generation,
//! recommendations and the evaluation harness.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use healthroute::dataset_io::{self, RatingsFile};
use healthroute::eval::{self, Truth};
use healthroute::population::{self, PopulationConfig};
use healthroute::profiles;
use healthroute::rating_sim::{self, ModifierTable, NoiseConfig};
use healthroute::recommender::{CandidateMode, HealthFilterConfig, HealthGate, Metric, Recommender, SimilarityModel};
use healthroute::routes::{self, FeatureScores, GeoPoint};
use healthroute::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownUser(_) | Error::UnknownRoute(_) => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn model(metric: &str, k: usize, min_overlap: usize) -> PyResult<SimilarityModel> {
    Ok(SimilarityModel {
        metric: metric.parse::<Metric>().map_err(py_err)?,
        k_neighbors: k,
        min_overlap,
    })
}

#[pyclass(name = "Citizen", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCitizen {
    inner: healthroute::Citizen,
}

#[pymethods]
impl PyCitizen {
    #[new]
    #[pyo3(signature = (id, age, visual=0.0, respiratory=0.0, mobility=0.0, heart=0.0))]
    fn new(id: u32, age: u8, visual: f64, respiratory: f64, mobility: f64, heart: f64) -> PyResult<Self> {
        let s = |v: f64| healthroute::Severity::from_value(v).map_err(py_err);
        let health = healthroute::HealthConditions::new(s(visual)?, s(respiratory)?, s(mobility)?, s(heart)?);
        Ok(PyCitizen {
            inner: healthroute::Citizen::new(id, age, health).map_err(py_err)?,
        })
    }

    #[getter]
    fn id(&self) -> u32 {
        self.inner.id
    }

    #[getter]
    fn age(&self) -> u8 {
        self.inner.age
    }

    /// `(visual, respiratory, mobility, heart)` severities.
    #[getter]
    fn severities(&self) -> (f64, f64, f64, f64) {
        let [a, b, c, d] = self.inner.health.severities().map(|s| s.value());
        (a, b, c, d)
    }

    /// Packed profile id in `0..64`.
    fn profile(&self) -> u8 {
        profiles::classify(&self.inner).packed()
    }

    /// `(distance, elevation, pavement)` skill modifiers.
    fn modifiers(&self) -> (f64, f64, f64) {
        let m = rating_sim::citizen_modifiers(&self.inner, &ModifierTable::default());
        (m.distance, m.elevation, m.pavement)
    }

    /// Noiseless rating in `[0, 10]` for the given feature scores.
    fn rating(&self, scores: (f64, f64, f64)) -> f64 {
        let scores = FeatureScores::new(scores.0, scores.1, scores.2);
        rating_sim::deterministic_rating(&self.inner, &scores, &ModifierTable::default())
    }

    fn __repr__(&self) -> String {
        let (v, r, m, h) = self.severities();
        format!(
            "Citizen(id={}, age={}, visual={v}, respiratory={r}, mobility={m}, heart={h})",
            self.inner.id, self.inner.age
        )
    }
}

fn citizens_of(list: &[PyRef<'_, PyCitizen>]) -> Vec<healthroute::Citizen> {
    list.iter().map(|c| c.inner).collect()
}

/// Generates `n` citizens. `config` is optional TOML text.
#[pyfunction]
#[pyo3(signature = (n, seed, config=None))]
fn generate_population(n: usize, seed: u64, config: Option<&str>) -> PyResult<Vec<PyCitizen>> {
    let cfg = match config {
        Some(text) => PopulationConfig::from_toml(text).map_err(py_err)?,
        None => PopulationConfig::default(),
    };
    let pop = population::generate_population(n, &cfg, seed).map_err(py_err)?;
    Ok(pop.into_iter().map(|inner| PyCitizen { inner }).collect())
}

#[pyfunction]
fn read_citizens(path: PathBuf) -> PyResult<Vec<PyCitizen>> {
    let pop = dataset_io::read_citizens(&path).map_err(py_err)?;
    Ok(pop.into_iter().map(|inner| PyCitizen { inner }).collect())
}

#[pyfunction]
fn write_citizens(path: PathBuf, citizens: Vec<PyRef<'_, PyCitizen>>) -> PyResult<()> {
    dataset_io::write_citizens(&path, &citizens_of(&citizens)).map_err(py_err)
}

/// Profile id to citizen count.
#[pyfunction]
fn profile_census(citizens: Vec<PyRef<'_, PyCitizen>>) -> PyResult<BTreeMap<u8, usize>> {
    let census = profiles::profile_census(&citizens_of(&citizens)).map_err(py_err)?;
    Ok(census.counts.iter().map(|(k, v)| (k.packed(), *v)).collect())
}

/// One dict per condition with `target`, `empirical`, `bound` and `pass`,
/// using the default prevalences.
#[pyfunction]
fn prevalence_report(py: Python<'_>, citizens: Vec<PyRef<'_, PyCitizen>>) -> PyResult<Vec<Py<PyAny>>> {
    let report =
        eval::prevalence_report(&citizens_of(&citizens), &PopulationConfig::default().prevalence).map_err(py_err)?;
    report
        .checks
        .iter()
        .map(|c| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("condition", c.condition)?;
            d.set_item("target", c.target)?;
            d.set_item("empirical", c.empirical)?;
            d.set_item("bound", c.bound)?;
            d.set_item("pass", c.pass)?;
            Ok(d.into_any().unbind())
        })
        .collect()
}

/// Signed decimal degrees of a `41°4'44.54"N`-style coordinate.
#[pyfunction]
fn parse_dms(text: &str) -> PyResult<f64> {
    routes::parse_dms(text).map(|a| a.degrees).map_err(py_err)
}

#[pyfunction]
fn haversine_km(a: (f64, f64), b: (f64, f64)) -> PyResult<f64> {
    let a = GeoPoint::new(a.0, a.1).map_err(py_err)?;
    let b = GeoPoint::new(b.0, b.1).map_err(py_err)?;
    Ok(routes::haversine_km(&a, &b))
}

#[pyclass(name = "Catalog", frozen)]
struct PyCatalog {
    inner: healthroute::Catalog,
}

#[pymethods]
impl PyCatalog {
    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        let routes = dataset_io::read_routes(&path).map_err(py_err)?;
        Ok(PyCatalog {
            inner: healthroute::Catalog::new(routes).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.ids().map(str::to_string).collect()
    }

    /// Route id to `(distance, elevation, pavement)` scores in `[0, 5]`.
    fn scores(&self) -> BTreeMap<String, (f64, f64, f64)> {
        self.inner
            .routes()
            .iter()
            .zip(self.inner.scores())
            .map(|(r, s)| (r.id.clone(), (s.distance, s.elevation, s.pavement)))
            .collect()
    }
}

#[pyclass(name = "Ratings", frozen)]
struct PyRatings {
    inner: RatingsFile,
}

#[pymethods]
impl PyRatings {
    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(PyRatings {
            inner: dataset_io::read_ratings(&path).map_err(py_err)?,
        })
    }

    #[pyo3(signature = (path, with_oracle=false))]
    fn write_csv(&self, path: PathBuf, with_oracle: bool) -> PyResult<()> {
        dataset_io::write_ratings(&path, &self.inner, with_oracle).map_err(py_err)
    }

    /// `(n_users, m_routes)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.matrix.n_users(), self.inner.matrix.n_routes())
    }

    fn __len__(&self) -> usize {
        self.inner.matrix.n_ratings()
    }

    fn get(&self, user_id: u32, route_id: &str) -> PyResult<Option<f64>> {
        let m = &self.inner.matrix;
        let u = m.user_position(user_id).map_err(py_err)?;
        let r = m.route_position(route_id).map_err(py_err)?;
        Ok(m.get(u, r))
    }

    #[pyo3(signature = (user_id, route_id, metric="pearson", k=30, min_overlap=3))]
    fn predict(
        &self,
        user_id: u32,
        route_id: &str,
        metric: &str,
        k: usize,
        min_overlap: usize,
    ) -> PyResult<(f64, usize)> {
        let rec = Recommender::new(&self.inner.matrix, model(metric, k, min_overlap)?).map_err(py_err)?;
        let p = rec.predict(user_id, route_id).map_err(py_err)?;
        Ok((p.value, p.support))
    }

    /// Top-`n` `(route_id, predicted, support)` for a user. Passing both
    /// `citizen` and `catalog` enables the health filter.
    #[pyo3(signature = (user_id, n, metric="pearson", k=30, min_overlap=3, include_rated=false, citizen=None, catalog=None, threshold=3.0, strict=false))]
    #[allow(clippy::too_many_arguments)]
    fn top_n(
        &self,
        user_id: u32,
        n: usize,
        metric: &str,
        k: usize,
        min_overlap: usize,
        include_rated: bool,
        citizen: Option<PyRef<'_, PyCitizen>>,
        catalog: Option<PyRef<'_, PyCatalog>>,
        threshold: f64,
        strict: bool,
    ) -> PyResult<Vec<(String, f64, usize)>> {
        let rec = Recommender::new(&self.inner.matrix, model(metric, k, min_overlap)?).map_err(py_err)?;
        let table = ModifierTable::default();
        let gate = match (&citizen, &catalog) {
            (Some(c), Some(cat)) => Some(HealthGate {
                citizen: &c.inner,
                catalog: &cat.inner,
                table: &table,
                config: HealthFilterConfig { threshold, strict },
            }),
            (None, None) => None,
            _ => return Err(PyValueError::new_err("citizen and catalog must be given together")),
        };
        let mode = if include_rated {
            CandidateMode::All
        } else {
            CandidateMode::Unrated
        };
        let recs = rec.top_n(user_id, n, mode, gate.as_ref()).map_err(py_err)?;
        Ok(recs.into_iter().map(|r| (r.route_id, r.predicted, r.support)).collect())
    }

    /// Hold-out evaluation; returns a dict with `cf_mae`, `cf_rmse`,
    /// `oracle_mae`, `noise_floor`, `n_test` and `within_band`.
    #[pyo3(signature = (fraction=0.2, seed=0, metric="pearson", k=30, min_overlap=3, noise_std=1.5))]
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        py: Python<'_>,
        fraction: f64,
        seed: u64,
        metric: &str,
        k: usize,
        min_overlap: usize,
        noise_std: f64,
    ) -> PyResult<Py<PyAny>> {
        let truth = Truth {
            noisy: self.inner.noisy.as_deref(),
            deterministic: self.inner.deterministic.as_deref(),
        };
        let m = model(metric, k, min_overlap)?;
        let report = py
            .detach(|| eval::evaluate_holdout(&self.inner.matrix, truth, fraction, seed, &m, noise_std))
            .map_err(py_err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("n_test", report.n_test)?;
        d.set_item("cf_mae", report.cf.mae)?;
        d.set_item("cf_rmse", report.cf.rmse)?;
        d.set_item("oracle_mae", report.oracle.map(|o| o.mae))?;
        d.set_item("noise_floor", report.noise_floor)?;
        d.set_item("within_band", report.within_band)?;
        Ok(d.into_any().unbind())
    }
}

#[pyfunction]
#[pyo3(signature = (citizens, catalog, seed, noise_std=1.5, noise=true))]
fn generate_ratings(
    py: Python<'_>,
    citizens: Vec<PyRef<'_, PyCitizen>>,
    catalog: PyRef<'_, PyCatalog>,
    seed: u64,
    noise_std: f64,
    noise: bool,
) -> PyResult<PyRatings> {
    let pop = citizens_of(&citizens);
    let noise = NoiseConfig {
        std_dev: noise_std,
        enabled: noise,
        ..Default::default()
    };
    let cat = &catalog.inner;
    let generated = py
        .detach(|| rating_sim::generate_ratings(&pop, cat, &ModifierTable::default(), &noise, seed))
        .map_err(py_err)?;
    Ok(PyRatings {
        inner: generated.into(),
    })
}

#[pymodule]
#[pyo3(name = "healthroute")]
pub fn healthroute_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCitizen>()?;
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyRatings>()?;
    m.add_function(wrap_pyfunction!(generate_population, m)?)?;
    m.add_function(wrap_pyfunction!(read_citizens, m)?)?;
    m.add_function(wrap_pyfunction!(write_citizens, m)?)?;
    m.add_function(wrap_pyfunction!(profile_census, m)?)?;
    m.add_function(wrap_pyfunction!(prevalence_report, m)?)?;
    m.add_function(wrap_pyfunction!(parse_dms, m)?)?;
    m.add_function(wrap_pyfunction!(haversine_km, m)?)?;
    m.add_function(wrap_pyfunction!(generate_ratings, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
