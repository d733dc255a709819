//! Python bindings: datasets, overlap detection, generators, classifiers,
//! metrics and full efficacy runs.

use ndarray::Array2;
use ord_core::dataset::{self, ColumnSchema, LabelAlphabet, Schema, TabularDataset};
use ord_core::experiments::{self, read_cells_csv, render_markdown, write_cells_csv, PipelineConfig};
use ord_core::generators::{fit_generator, ConditionalGenerator, GeneratorConfig, GeneratorKind};
use ord_core::learners::{fit_learner, LearnerKind, LearnerParams, TrainedClassifier};
use ord_core::metrics;
use ord_core::oracle_toy::{self, BlobWorld};
use ord_core::overlap::{self as ov, OverlapConfig, OverlapResult};
use ord_core::OrdError;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: OrdError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn world_of(spec: &str) -> PyResult<BlobWorld> {
    if spec.trim_start().starts_with('{') {
        let w: BlobWorld = serde_json_from(spec)?;
        w.validate().map_err(err)?;
        Ok(w)
    } else {
        BlobWorld::by_name(spec).map_err(err)
    }
}

fn serde_json_from<T: serde::de::DeserializeOwned>(s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Dataset", module = "ord_py")]
struct PyDataset {
    inner: TabularDataset,
}

#[pymethods]
impl PyDataset {
    /// Numeric-only dataset from row lists and 0/1 (or ternary 0/1/2) labels.
    #[new]
    #[pyo3(signature = (features, labels, columns=None, ternary=false))]
    fn new(features: Vec<Vec<f64>>, labels: Vec<u8>, columns: Option<Vec<String>>, ternary: bool) -> PyResult<Self> {
        let p = features.first().map_or(0, Vec::len);
        if features.iter().any(|r| r.len() != p) {
            return Err(PyValueError::new_err("rows differ in length"));
        }
        let names = columns.unwrap_or_else(|| (0..p).map(|j| format!("x{j}")).collect());
        let schema = Schema::new(names.into_iter().map(ColumnSchema::numeric).collect(), "y", "1").map_err(err)?;
        let x = Array2::from_shape_vec((features.len(), p), features.concat())
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let alphabet = if ternary { LabelAlphabet::Ternary } else { LabelAlphabet::Binary };
        let inner = TabularDataset::new(schema, x, labels, alphabet).map_err(err)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn from_csv(path: &str, schema_path: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: dataset::load_csv(path, schema_path).map_err(err)?,
        })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        dataset::write_csv_file(&self.inner, path).map_err(err)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.schema().columns.iter().map(|c| c.name.clone()).collect()
    }

    #[getter]
    fn is_ternary(&self) -> bool {
        self.inner.alphabet() == LabelAlphabet::Ternary
    }

    fn labels(&self) -> Vec<u32> {
        self.inner.labels().iter().map(|&l| u32::from(l)).collect()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.features().rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn count_label(&self, label: u8) -> usize {
        self.inner.count_label(label)
    }

    fn to_binary(&self) -> Self {
        PyDataset {
            inner: self.inner.to_binary(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_rows={}, n_features={}, alphabet={:?})",
            self.inner.n_rows(),
            self.inner.n_features(),
            self.inner.alphabet()
        )
    }
}

#[pyclass(name = "OverlapResult", module = "ord_py", frozen)]
struct PyOverlapResult {
    inner: OverlapResult,
}

#[pymethods]
impl PyOverlapResult {
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
    #[getter]
    fn n_clear(&self) -> usize {
        self.inner.n_clear
    }
    #[getter]
    fn n_overlap(&self) -> usize {
        self.inner.n_overlap
    }
    #[getter]
    fn n_minority(&self) -> usize {
        self.inner.n_minority
    }
    fn overlap_rows(&self) -> Vec<usize> {
        self.inner.overlap_rows()
    }
    fn clear_rows(&self) -> Vec<usize> {
        self.inner.clear_rows()
    }
    /// (row, fold, class-0 confidence) per majority row.
    fn confidences(&self) -> Vec<(usize, usize, f64)> {
        self.inner.rows.iter().map(|r| (r.row, r.fold, r.confidence)).collect()
    }
    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }
    fn __repr__(&self) -> String {
        format!(
            "OverlapResult(tau={}, n_clear={}, n_overlap={}, n_minority={})",
            self.inner.tau, self.inner.n_clear, self.inner.n_overlap, self.inner.n_minority
        )
    }
}

#[pyfunction]
#[pyo3(signature = (world="blobs1", seed=0))]
fn make_blobs(world: &str, seed: u64) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: oracle_toy::make_blobs(&world_of(world)?, seed).map_err(err)?,
    })
}

/// Returns (label, [P(y=0|x), P(y=1|x)]).
#[pyfunction]
#[pyo3(signature = (world, x, priors=None))]
fn bayes_label(world: &str, x: Vec<f64>, priors: Option<(f64, f64)>) -> PyResult<(u8, [f64; 2])> {
    let w = world_of(world)?;
    if x.len() != w.dim() {
        return Err(PyValueError::new_err(format!("expected {} coordinates, got {}", w.dim(), x.len())));
    }
    let p = priors.map_or(w.priors, |(a, b)| [a, b]);
    let d = oracle_toy::bayes_label(&w, &x, p);
    Ok((d.label, d.posterior))
}

#[pyfunction]
#[pyo3(signature = (data, tau=0.3, k_folds=2, n_trees=50, seed=0, strict=false))]
fn detect_overlap(
    data: &PyDataset,
    tau: f64,
    k_folds: usize,
    n_trees: usize,
    seed: u64,
    strict: bool,
) -> PyResult<(PyDataset, PyOverlapResult)> {
    let cfg = OverlapConfig {
        tau,
        k_folds,
        n_trees,
        seed,
        strict,
        ..Default::default()
    };
    let (ternary, result) = ov::detect_overlap(&data.inner, &cfg).map_err(err)?;
    Ok((PyDataset { inner: ternary }, PyOverlapResult { inner: result }))
}

/// Returns (tau, target count, [(tau, count)]).
#[pyfunction]
#[pyo3(signature = (data, r_percent, k_folds=2, n_trees=50, seed=0))]
fn select_tau(
    data: &PyDataset,
    r_percent: f64,
    k_folds: usize,
    n_trees: usize,
    seed: u64,
) -> PyResult<(f64, usize, Vec<(f64, usize)>)> {
    let cfg = OverlapConfig {
        k_folds,
        n_trees,
        seed,
        ..Default::default()
    };
    let s = ov::select_tau(&data.inner, &cfg, &ov::TAU_GRID, r_percent).map_err(err)?;
    Ok((s.tau, s.target, s.counts))
}

#[pyclass(name = "Generator", module = "ord_py")]
struct PyGenerator {
    inner: Box<dyn ConditionalGenerator>,
}

#[pymethods]
impl PyGenerator {
    /// Fits a conditional generator (`gmm`, `smote`, `borderline`, `adasyn`).
    #[new]
    #[pyo3(signature = (data, kind="gmm", seed=0, n_components=8))]
    fn new(data: &PyDataset, kind: &str, seed: u64, n_components: usize) -> PyResult<Self> {
        let kind: GeneratorKind = kind.parse().map_err(err)?;
        if kind == GeneratorKind::Bridge {
            return Err(PyValueError::new_err("the bridge generator reads a file; use the CLI"));
        }
        let mut cfg = GeneratorConfig {
            kind,
            ..Default::default()
        };
        cfg.gmm.n_components = n_components;
        Ok(PyGenerator {
            inner: fit_generator(&cfg, &data.inner, seed).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[pyo3(signature = (label, n, seed=0))]
    fn sample(&self, py: Python<'_>, label: u8, n: usize, seed: u64) -> PyResult<(PyDataset, Vec<String>)> {
        let batch = py.detach(|| self.inner.sample(label, n, seed)).map_err(err)?;
        Ok((PyDataset { inner: batch.data }, batch.warnings))
    }
}

#[pyclass(name = "Classifier", module = "ord_py", frozen)]
struct PyClassifier {
    inner: TrainedClassifier,
}

#[pymethods]
impl PyClassifier {
    /// Trains `logistic`, `tree`, `adaboost`, `mlp` or `gbdt` on binary labels.
    #[new]
    #[pyo3(signature = (data, kind="gbdt", seed=0))]
    fn new(py: Python<'_>, data: &PyDataset, kind: &str, seed: u64) -> PyResult<Self> {
        let kind: LearnerKind = kind.parse().map_err(err)?;
        let train = data.inner.to_binary();
        let inner = py
            .detach(|| fit_learner(kind, &train, &LearnerParams::default(), seed))
            .map_err(err)?;
        Ok(PyClassifier { inner })
    }

    /// P(y=1|x) per row.
    fn predict_proba(&self, data: &PyDataset) -> PyResult<Vec<f64>> {
        Ok(self.inner.predict_proba(&data.inner).map_err(err)?.iter().map(|p| p[1]).collect())
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }
}

/// minority_acc, majority_acc, macro_acc and f1 for 0/1 labels.
#[pyfunction]
fn classification_metrics(y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<Vec<(String, Option<f64>)>> {
    if y_true.len() != y_pred.len() {
        return Err(PyValueError::new_err("y_true and y_pred differ in length"));
    }
    let m = metrics::classification_metrics(&metrics::BinaryConfusion::from_predictions(&y_true, &y_pred));
    Ok(vec![
        ("minority_acc".into(), m.minority_acc),
        ("majority_acc".into(), m.majority_acc),
        ("macro_acc".into(), m.macro_acc),
        ("f1".into(), Some(m.f1)),
    ])
}

#[pyfunction]
fn auc(labels: Vec<u8>, scores: Vec<f64>) -> PyResult<f64> {
    let s = metrics::ScoredPredictions::new(labels, scores).map_err(err)?;
    metrics::auc(&s).map_err(err)
}

/// Returns (t, df, two-sided p).
#[pyfunction]
fn paired_t_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, usize, f64)> {
    let r = metrics::paired_t_test(&a, &b).map_err(err)?;
    Ok((r.t, r.df, r.two_sided_p))
}

/// Runs an efficacy experiment from a JSON config; returns (cells CSV, Markdown report).
#[pyfunction]
fn run_efficacy(py: Python<'_>, config_json: &str) -> PyResult<(String, String)> {
    let cfg = PipelineConfig::from_json_str(config_json).map_err(err)?;
    py.detach(|| {
        let loaded = cfg.load_data()?;
        let r = experiments::run_efficacy(&cfg, &loaded)?;
        let csv = write_cells_csv(&r.cells)?;
        let cells = read_cells_csv(&csv)?;
        Ok((csv, render_markdown(&cells, &r.synthesis)))
    })
    .map_err(err)
}

#[pymodule]
fn ord_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyOverlapResult>()?;
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(make_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_label, m)?)?;
    m.add_function(wrap_pyfunction!(detect_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(select_tau, m)?)?;
    m.add_function(wrap_pyfunction!(classification_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(paired_t_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_efficacy, m)?)?;
    m.add("TAU_GRID", ov::TAU_GRID.to_vec())?;
    Ok(())
}
