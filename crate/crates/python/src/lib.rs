//! Python bindings for `backfire-core`.

use std::collections::HashMap;
use std::path::PathBuf;

use backfire_core as core;
use backfire_core::io::{self as cio, SyntheticSpec};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(err) => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

// ------------------------------------------------------------------ domain

#[pyfunction(name = "backfire")]
fn backfire_sloc(fp: f64, ratio: f64) -> PyResult<f64> {
    core::backfire(fp, ratio).py()
}

#[pyfunction]
fn reverse_backfire(sloc: f64, ratio: f64) -> PyResult<f64> {
    core::reverse_backfire(sloc, ratio).py()
}

#[pyclass(name = "ProgrammingTable", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProgrammingTable(core::ProgrammingTable);

#[pymethods]
impl PyProgrammingTable {
    /// The built-in table, or one loaded from a `name,level,low,mean,high` CSV.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<PathBuf>) -> PyResult<Self> {
        core::load_programming_table(path.as_deref()).py().map(Self)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        core::ProgrammingTable::from_csv(text.as_bytes()).py().map(Self)
    }

    fn level_for_language(&self, name: &str) -> PyResult<f64> {
        self.0.level_for_language(name).py()
    }

    fn names(&self) -> Vec<String> {
        self.0.entries().iter().map(|e| e.name.clone()).collect()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv_string()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "ProjectRecord", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyProjectRecord {
    id: String,
    language: String,
    ufp: f64,
    sloc: f64,
}

impl From<core::ProjectRecord> for PyProjectRecord {
    fn from(r: core::ProjectRecord) -> Self {
        Self { id: r.id, language: r.language, ufp: r.ufp, sloc: r.sloc }
    }
}

impl PyProjectRecord {
    fn inner(&self) -> core::ProjectRecord {
        core::ProjectRecord {
            id: self.id.clone(),
            language: self.language.clone(),
            ufp: self.ufp,
            sloc: self.sloc,
        }
    }
}

#[pymethods]
impl PyProjectRecord {
    #[new]
    fn new(id: String, language: String, ufp: f64, sloc: f64) -> PyResult<Self> {
        core::ProjectRecord::new(id, language, ufp, sloc).py().map(Self::from)
    }

    fn ratio(&self) -> f64 {
        self.sloc / self.ufp
    }

    fn __repr__(&self) -> String {
        format!(
            "ProjectRecord(id={:?}, language={:?}, ufp={}, sloc={})",
            self.id, self.language, self.ufp, self.sloc
        )
    }
}

fn records(projects: &[PyRef<'_, PyProjectRecord>]) -> Vec<core::ProjectRecord> {
    projects.iter().map(|p| p.inner()).collect()
}

#[pyfunction]
fn read_projects_csv(text: &str) -> PyResult<Vec<PyProjectRecord>> {
    let recs = cio::read_projects_csv(text.as_bytes()).py()?;
    Ok(recs.into_iter().map(Into::into).collect())
}

#[pyfunction]
fn write_projects_csv(projects: Vec<PyRef<'_, PyProjectRecord>>) -> String {
    cio::write_projects_csv(&records(&projects))
}

// ------------------------------------------------------------------- fuzzy

#[pyclass(name = "FuzzyLevelSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFuzzyLevelSet(core::FuzzyLevelSet);

#[pymethods]
impl PyFuzzyLevelSet {
    /// The built-in 19 levels, or a levels CSV whose missing clamp columns are
    /// filled in from `table`.
    #[new]
    #[pyo3(signature = (path=None, table=None))]
    fn new(path: Option<PathBuf>, table: Option<PyRef<'_, PyProgrammingTable>>) -> PyResult<Self> {
        match path {
            None => Ok(Self(core::FuzzyLevelSet::default())),
            Some(p) => {
                let table = table.map(|t| t.0.clone()).unwrap_or_default();
                core::FuzzyLevelSet::from_path(p, &table).py().map(Self)
            }
        }
    }

    fn assign(&self, language_level: f64) -> PyResult<usize> {
        self.0.assign(language_level).py()
    }

    fn fuzzify(&self, language_level: f64) -> PyResult<Vec<f64>> {
        self.0.fuzzify(language_level).py()
    }

    /// SLOC/FP at `language_level`, with the level averages or the given peaks.
    #[pyo3(signature = (language_level, peaks=None))]
    fn infer_ratio(&self, language_level: f64, peaks: Option<Vec<f64>>) -> PyResult<f64> {
        let peaks = peaks.unwrap_or_else(|| self.0.averages());
        core::infer_ratio(&self.0, &peaks, language_level).py()
    }

    fn calibrated(&self, weights: PyRef<'_, PyCalibratedWeights>) -> PyResult<Self> {
        core::calibrated_conversion_table(&self.0, &weights.0).py().map(Self)
    }

    fn averages(&self) -> Vec<f64> {
        self.0.averages()
    }

    fn anchors(&self) -> Vec<f64> {
        self.0.anchors()
    }

    fn coverage(&self) -> (f64, f64) {
        self.0.coverage()
    }

    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv_string()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

// ------------------------------------------------------------- calibration

#[pyclass(name = "TrainingConfig", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyTrainingConfig {
    learning_rate: f64,
    max_epochs: usize,
    error_goal: f64,
    rng_seed: u64,
    shuffle_each_epoch: bool,
    scale_update_by_ufp: bool,
}

impl From<core::TrainingConfig> for PyTrainingConfig {
    fn from(c: core::TrainingConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            max_epochs: c.max_epochs,
            error_goal: c.error_goal,
            rng_seed: c.rng_seed,
            shuffle_each_epoch: c.shuffle_each_epoch,
            scale_update_by_ufp: c.scale_update_by_ufp,
        }
    }
}

impl PyTrainingConfig {
    fn inner(&self) -> PyResult<core::TrainingConfig> {
        let c = core::TrainingConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            error_goal: self.error_goal,
            rng_seed: self.rng_seed,
            shuffle_each_epoch: self.shuffle_each_epoch,
            scale_update_by_ufp: self.scale_update_by_ufp,
        };
        c.validate().py()?;
        Ok(c)
    }
}

#[pymethods]
impl PyTrainingConfig {
    #[new]
    #[pyo3(signature = (
        learning_rate=1e-4, max_epochs=1000, error_goal=1e-6, rng_seed=0,
        shuffle_each_epoch=true, scale_update_by_ufp=false,
    ))]
    fn new(
        learning_rate: f64,
        max_epochs: usize,
        error_goal: f64,
        rng_seed: u64,
        shuffle_each_epoch: bool,
        scale_update_by_ufp: bool,
    ) -> PyResult<Self> {
        let cfg = Self {
            learning_rate,
            max_epochs,
            error_goal,
            rng_seed,
            shuffle_each_epoch,
            scale_update_by_ufp,
        };
        cfg.inner()?;
        Ok(cfg)
    }
}

#[pyclass(name = "CalibratedWeights", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCalibratedWeights(core::CalibratedWeights);

#[pymethods]
impl PyCalibratedWeights {
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights.clone()
    }

    #[getter]
    fn epochs_run(&self) -> usize {
        self.0.epochs_run
    }

    #[getter]
    fn final_epoch_error(&self) -> f64 {
        self.0.final_epoch_error
    }

    #[getter]
    fn levels_fingerprint(&self) -> String {
        self.0.levels_fingerprint.clone()
    }

    #[getter]
    fn config(&self) -> PyTrainingConfig {
        self.0.config.clone().into()
    }

    fn predict(&self, level_index: usize, ufp: f64) -> PyResult<f64> {
        self.0.predict(level_index, ufp).py()
    }

    fn to_csv(&self, levels: PyRef<'_, PyFuzzyLevelSet>) -> PyResult<String> {
        cio::write_weights_csv(&self.0, &levels.0).py()
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        cio::read_weights_csv(text.as_bytes()).py().map(Self)
    }
}

struct Context {
    table: core::ProgrammingTable,
    levels: core::FuzzyLevelSet,
    config: core::TrainingConfig,
}

impl Context {
    fn new(
        table: Option<PyRef<'_, PyProgrammingTable>>,
        levels: Option<PyRef<'_, PyFuzzyLevelSet>>,
        config: Option<PyRef<'_, PyTrainingConfig>>,
    ) -> PyResult<Self> {
        Ok(Self {
            table: table.map(|t| t.0.clone()).unwrap_or_default(),
            levels: levels.map(|l| l.0.clone()).unwrap_or_default(),
            config: match config {
                Some(c) => c.inner()?,
                None => core::TrainingConfig::default(),
            },
        })
    }

    fn label(&self, projects: &[PyRef<'_, PyProjectRecord>]) -> PyResult<Vec<core::LabeledProject>> {
        core::label_projects(&records(projects), &self.table, &self.levels).py()
    }
}

/// Calibrates per-level ratios on `projects`.
#[pyfunction]
#[pyo3(signature = (projects, levels=None, config=None, table=None))]
fn train(
    py: Python<'_>,
    projects: Vec<PyRef<'_, PyProjectRecord>>,
    levels: Option<PyRef<'_, PyFuzzyLevelSet>>,
    config: Option<PyRef<'_, PyTrainingConfig>>,
    table: Option<PyRef<'_, PyProgrammingTable>>,
) -> PyResult<PyCalibratedWeights> {
    let ctx = Context::new(table, levels, config)?;
    let recs: Vec<_> = ctx.label(&projects)?.iter().map(|p| p.training_record()).collect();
    py.detach(|| core::train(&recs, &ctx.levels, &ctx.config))
        .py()
        .map(PyCalibratedWeights)
}

// ----------------------------------------------------------------- metrics

#[pyclass(name = "EvaluationReport", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEvaluationReport {
    mmre: f64,
    mmer: f64,
    pred25: f64,
    pred50: f64,
    n: usize,
}

impl From<core::EvaluationReport> for PyEvaluationReport {
    fn from(r: core::EvaluationReport) -> Self {
        Self { mmre: r.mmre, mmer: r.mmer, pred25: r.pred25, pred50: r.pred50, n: r.n }
    }
}

#[pymethods]
impl PyEvaluationReport {
    fn __repr__(&self) -> String {
        format!(
            "EvaluationReport(n={}, mmre={:.4}, mmer={:.4}, pred25={:.4}, pred50={:.4})",
            self.n, self.mmre, self.mmer, self.pred25, self.pred50
        )
    }
}

#[pyfunction]
fn mre(actual: f64, predicted: f64) -> PyResult<f64> {
    core::mre(actual, predicted).py()
}

#[pyfunction]
fn mer(actual: f64, predicted: f64) -> PyResult<f64> {
    core::mer(actual, predicted).py()
}

/// Summarises `(actual, predicted)` pairs.
#[pyfunction]
fn evaluate(pairs: Vec<(f64, f64)>) -> PyResult<PyEvaluationReport> {
    core::evaluate(&pairs).py().map(Into::into)
}

// ------------------------------------------------------------- experiments

#[pyclass(name = "ExperimentResult", frozen, get_all)]
struct PyExperimentResult {
    experiment_id: usize,
    training_samples: usize,
    test_samples: usize,
    /// Percentage-point gains keyed by `mmre`, `mmer`, `pred25`, `pred50`.
    improvement: HashMap<&'static str, f64>,
    baseline: PyEvaluationReport,
    calibrated: PyEvaluationReport,
    weights: PyCalibratedWeights,
}

impl From<core::ExperimentResult> for PyExperimentResult {
    fn from(r: core::ExperimentResult) -> Self {
        let imp = r.improvement.improvement;
        Self {
            experiment_id: r.experiment_id,
            training_samples: r.improvement.training_samples,
            test_samples: r.improvement.test_samples,
            improvement: HashMap::from([
                ("mmre", imp.mmre),
                ("mmer", imp.mmer),
                ("pred25", imp.pred25),
                ("pred50", imp.pred50),
            ]),
            baseline: r.baseline_report.into(),
            calibrated: r.calibrated_report.into(),
            weights: PyCalibratedWeights(r.weights),
        }
    }
}

#[pyfunction]
#[pyo3(signature = (experiment_id, projects, levels=None, config=None, table=None))]
fn run_experiment(
    py: Python<'_>,
    experiment_id: usize,
    projects: Vec<PyRef<'_, PyProjectRecord>>,
    levels: Option<PyRef<'_, PyFuzzyLevelSet>>,
    config: Option<PyRef<'_, PyTrainingConfig>>,
    table: Option<PyRef<'_, PyProgrammingTable>>,
) -> PyResult<PyExperimentResult> {
    let ctx = Context::new(table, levels, config)?;
    let data = ctx.label(&projects)?;
    py.detach(|| core::run_experiment(experiment_id, &data, &ctx.levels, &ctx.config))
        .py()
        .map(Into::into)
}

#[pyfunction]
#[pyo3(signature = (projects, levels=None, config=None, table=None))]
fn run_all(
    py: Python<'_>,
    projects: Vec<PyRef<'_, PyProjectRecord>>,
    levels: Option<PyRef<'_, PyFuzzyLevelSet>>,
    config: Option<PyRef<'_, PyTrainingConfig>>,
    table: Option<PyRef<'_, PyProgrammingTable>>,
) -> PyResult<Vec<PyExperimentResult>> {
    let ctx = Context::new(table, levels, config)?;
    let data = ctx.label(&projects)?;
    let results = py.detach(|| core::run_all(&data, &ctx.levels, &ctx.config)).py()?;
    Ok(results.into_iter().map(Into::into).collect())
}

/// Synthetic projects, `per_level` at each level anchor. `true_ratios` maps a
/// 1-based level to the ratio its projects are generated with.
#[pyfunction]
#[pyo3(signature = (levels=None, per_level=20, noise=0.0, true_ratios=None, seed=0))]
fn generate_synthetic_dataset(
    levels: Option<PyRef<'_, PyFuzzyLevelSet>>,
    per_level: usize,
    noise: f64,
    true_ratios: Option<HashMap<usize, f64>>,
    seed: u64,
) -> PyResult<Vec<PyProjectRecord>> {
    let levels = levels.map(|l| l.0.clone()).unwrap_or_default();
    let mut true_ratios: Vec<_> = true_ratios.unwrap_or_default().into_iter().collect();
    true_ratios.sort_by_key(|&(level, _)| level);
    let spec = SyntheticSpec {
        per_level_count: per_level,
        noise_fraction: noise,
        true_ratios,
        seed,
        ..SyntheticSpec::default()
    };
    let recs = cio::generate_synthetic_dataset(&levels, &spec).py()?;
    Ok(recs.into_iter().map(Into::into).collect())
}

#[pymodule]
fn backfire(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgrammingTable>()?;
    m.add_class::<PyProjectRecord>()?;
    m.add_class::<PyFuzzyLevelSet>()?;
    m.add_class::<PyTrainingConfig>()?;
    m.add_class::<PyCalibratedWeights>()?;
    m.add_class::<PyEvaluationReport>()?;
    m.add_class::<PyExperimentResult>()?;
    m.add_function(wrap_pyfunction!(backfire_sloc, m)?)?;
    m.add_function(wrap_pyfunction!(reverse_backfire, m)?)?;
    m.add_function(wrap_pyfunction!(mre, m)?)?;
    m.add_function(wrap_pyfunction!(mer, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_all, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(read_projects_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_projects_csv, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
