//! Python bindings. Records cross the boundary as plain dicts with the same
//! keys as the JSONL files; ontologies and models are opaque classes.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use tweet_triage::corpus::{self, GoldRecord, RunRecord, Tweet};
use tweet_triage::ensemble::{ensemble_runs, EnsembleConfig};
use tweet_triage::metrics::{self, EvalOptions, MetricReport};
use tweet_triage::model::checkpoint;
use tweet_triage::synthetic::{self, SyntheticSpec};
use tweet_triage::training::{self, ExperimentConfig, TrainHistory};
use tweet_triage::{ontology as onto, Error, PriorityLevel};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_user_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn level(s: &str) -> PyResult<PriorityLevel> {
    s.parse().map_err(to_py)
}

fn required<'py, T: for<'a> FromPyObject<'a, 'py, Error = PyErr>>(d: &Bound<'py, PyDict>, key: &str) -> PyResult<T> {
    match d.get_item(key)? {
        Some(v) => v.extract(),
        None => Err(PyValueError::new_err(format!("record is missing {key:?}"))),
    }
}

fn type_set(d: &Bound<'_, PyDict>) -> PyResult<BTreeSet<String>> {
    Ok(match d.get_item("info_types")? {
        Some(v) => v.extract::<Vec<String>>()?.into_iter().collect(),
        None => BTreeSet::new(),
    })
}

fn gold_from_dict(d: &Bound<'_, PyDict>) -> PyResult<GoldRecord> {
    Ok(GoldRecord {
        tweet_id: required(d, "tweet_id")?,
        event_id: required(d, "event_id")?,
        text: required(d, "text")?,
        info_types: type_set(d)?,
        priority: level(&required::<String>(d, "priority")?)?,
    })
}

fn run_from_dict(d: &Bound<'_, PyDict>) -> PyResult<RunRecord> {
    let priority_score: f64 = required(d, "priority_score")?;
    onto::score_to_priority(priority_score).map_err(to_py)?;
    let priority_level = match d.get_item("priority_level")? {
        Some(v) if !v.is_none() => Some(level(&v.extract::<String>()?)?),
        _ => None,
    };
    Ok(RunRecord {
        tweet_id: required(d, "tweet_id")?,
        event_id: required(d, "event_id")?,
        info_types: type_set(d)?,
        priority_score,
        priority_level,
    })
}

fn gold_to_dict<'py>(py: Python<'py>, g: &GoldRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("tweet_id", &g.tweet_id)?;
    d.set_item("event_id", &g.event_id)?;
    d.set_item("text", &g.text)?;
    d.set_item("info_types", g.info_types.iter().collect::<Vec<_>>())?;
    d.set_item("priority", g.priority.as_str())?;
    Ok(d)
}

fn run_to_dict<'py>(py: Python<'py>, r: &RunRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("tweet_id", &r.tweet_id)?;
    d.set_item("event_id", &r.event_id)?;
    d.set_item("info_types", r.info_types.iter().collect::<Vec<_>>())?;
    d.set_item("priority_score", r.priority_score)?;
    if let Some(l) = r.priority_level {
        d.set_item("priority_level", l.as_str())?;
    }
    Ok(d)
}

fn report_to_dict<'py>(py: Python<'py>, r: &MetricReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for c in metrics::METRIC_COLUMNS {
        d.set_item(c, r.get(c).expect("known column"))?;
    }
    Ok(d)
}

fn golds(records: &[Bound<'_, PyDict>]) -> PyResult<Vec<GoldRecord>> {
    records.iter().map(gold_from_dict).collect()
}

fn runs(records: &[Bound<'_, PyDict>]) -> PyResult<Vec<RunRecord>> {
    records.iter().map(run_from_dict).collect()
}

fn run_list<'py>(py: Python<'py>, records: &[RunRecord]) -> PyResult<Bound<'py, PyList>> {
    let items = records.iter().map(|r| run_to_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

/// Label set with an actionable flag per information type.
#[pyclass(name = "Ontology", module = "tweet_triage", frozen)]
struct PyOntology {
    inner: onto::Ontology,
}

#[pymethods]
impl PyOntology {
    /// Builds an ontology from `(name, actionable)` pairs.
    #[new]
    fn new(labels: Vec<(String, bool)>) -> PyResult<Self> {
        Ok(PyOntology {
            inner: onto::Ontology::new(labels).map_err(to_py)?,
        })
    }

    /// The 25-type TREC-IS ontology.
    #[staticmethod]
    fn default() -> Self {
        PyOntology {
            inner: onto::default_ontology().clone(),
        }
    }

    #[staticmethod]
    fn synthetic() -> Self {
        PyOntology {
            inner: synthetic::synthetic_ontology(),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyOntology {
            inner: onto::Ontology::load(path).map_err(to_py)?,
        })
    }

    fn labels(&self) -> Vec<(String, bool)> {
        self.inner.types().iter().map(|t| (t.name.clone(), t.actionable)).collect()
    }

    fn actionable(&self) -> Vec<String> {
        self.inner.types().iter().filter(|t| t.actionable).map(|t| t.name.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, name: &str) -> bool {
        self.inner.contains(name)
    }

    fn __repr__(&self) -> String {
        format!("Ontology({} types, {} actionable)", self.inner.len(), self.inner.actionable_indices().len())
    }
}

fn ontology_or_default(o: Option<&PyOntology>) -> onto::Ontology {
    o.map(|o| o.inner.clone()).unwrap_or_else(|| onto::default_ontology().clone())
}

/// A trained classifier.
#[pyclass(name = "Model", module = "tweet_triage", frozen)]
struct PyModel {
    inner: tweet_triage::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: checkpoint::load(path).map_err(to_py)?,
        })
    }

    /// Decodes a checkpoint held in memory.
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyModel {
            inner: checkpoint::from_bytes(data).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        checkpoint::save(&self.inner, path).map_err(to_py)
    }

    fn to_bytes(&self) -> Vec<u8> {
        checkpoint::to_bytes(&self.inner)
    }

    #[getter]
    fn ontology(&self) -> PyOntology {
        PyOntology {
            inner: self.inner.ontology.clone(),
        }
    }

    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.inner.config;
        let d = PyDict::new(py);
        d.set_item("d_model", c.d_model)?;
        d.set_item("n_layers", c.n_layers)?;
        d.set_item("n_heads", c.n_heads)?;
        d.set_item("d_ff", c.d_ff)?;
        d.set_item("vocab_size", c.vocab_size)?;
        d.set_item("max_len", c.max_len)?;
        d.set_item("n_types", c.n_types)?;
        Ok(d)
    }

    /// Per-type probabilities (ontology order) and the priority score of one text.
    fn score_text(&self, text: &str) -> PyResult<(Vec<f64>, f64)> {
        let out = self.inner.forward_text(text).map_err(to_py)?;
        Ok((out.type_probs, out.priority_score))
    }

    /// Predicts run records for dicts carrying `tweet_id`, `event_id` and `text`.
    fn predict<'py>(&self, py: Python<'py>, tweets: Vec<Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyList>> {
        let tweets = tweets
            .iter()
            .map(|d| {
                Ok(Tweet {
                    tweet_id: required(d, "tweet_id")?,
                    event_id: required(d, "event_id")?,
                    text: required(d, "text")?,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let model = &self.inner;
        let recs = py.detach(|| model.predict_run(&tweets)).map_err(to_py)?;
        run_list(py, &recs)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Model(d_model={}, n_layers={}, n_heads={}, vocab_size={}, n_types={})",
            c.d_model, c.n_layers, c.n_heads, c.vocab_size, c.n_types
        )
    }
}

#[pyfunction]
fn priority_to_score(level_name: &str) -> PyResult<f64> {
    Ok(onto::priority_to_score(level(level_name)?))
}

#[pyfunction]
fn score_to_priority(score: f64) -> PyResult<&'static str> {
    Ok(onto::score_to_priority(score).map_err(to_py)?.as_str())
}

/// Harmonic mean of a metrics dict; `harm` itself is ignored if present.
#[pyfunction]
fn harm(report: &Bound<'_, PyDict>) -> PyResult<f64> {
    let get = |k: &str| required::<f64>(report, k);
    let r = MetricReport::from_parts(
        get("ndcg")?,
        get("aw_hc")?,
        get("aw_a")?,
        get("cf1_h")?,
        get("cf1_a")?,
        get("cacc")?,
        get("perr_h")?,
        get("perr_a")?,
    );
    Ok(r.harm)
}

#[pyfunction]
#[pyo3(signature = (successes, trials, z = 1.96))]
fn wilson_interval(successes: u64, trials: u64, z: f64) -> PyResult<(f64, f64)> {
    metrics::wilson_interval(successes, trials, z).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (path, ontology = None))]
fn load_gold<'py>(py: Python<'py>, path: PathBuf, ontology: Option<&PyOntology>) -> PyResult<Bound<'py, PyList>> {
    let recs = corpus::load_gold(path, &ontology_or_default(ontology)).map_err(to_py)?;
    let items = recs.iter().map(|g| gold_to_dict(py, g)).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

#[pyfunction]
#[pyo3(signature = (path, ontology = None))]
fn load_run<'py>(py: Python<'py>, path: PathBuf, ontology: Option<&PyOntology>) -> PyResult<Bound<'py, PyList>> {
    let recs = corpus::load_run(path, &ontology_or_default(ontology)).map_err(to_py)?;
    run_list(py, &recs)
}

#[pyfunction]
fn write_run(records: Vec<Bound<'_, PyDict>>, path: PathBuf) -> PyResult<()> {
    corpus::write_run(&runs(&records)?, path).map_err(to_py)
}

/// All metrics for a run against gold, as a dict keyed by metric column.
#[pyfunction]
#[pyo3(signature = (run, gold, ontology = None, k = 100, lenient = false))]
fn evaluate<'py>(
    py: Python<'py>,
    run: Vec<Bound<'py, PyDict>>,
    gold: Vec<Bound<'py, PyDict>>,
    ontology: Option<&PyOntology>,
    k: usize,
    lenient: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = EvalOptions {
        k,
        lenient,
        ..Default::default()
    };
    let o = ontology_or_default(ontology);
    let r = metrics::evaluate_all(&runs(&run)?, &golds(&gold)?, &o, &opts).map_err(to_py)?;
    report_to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (members, types = "union", priority = "highest"))]
fn ensemble<'py>(
    py: Python<'py>,
    members: Vec<Vec<Bound<'py, PyDict>>>,
    types: &str,
    priority: &str,
) -> PyResult<Bound<'py, PyList>> {
    let config = EnsembleConfig {
        types: types.parse().map_err(to_py)?,
        priority: priority.parse().map_err(to_py)?,
    };
    let members = members.iter().map(|m| runs(m)).collect::<PyResult<Vec<_>>>()?;
    run_list(py, &ensemble_runs(&members, config).map_err(to_py)?)
}

/// A labelled toy corpus over [`Ontology.synthetic`].
#[pyfunction]
#[pyo3(signature = (n_tweets = 200, n_events = 2, seed = 7))]
fn synthetic_corpus<'py>(py: Python<'py>, n_tweets: usize, n_events: usize, seed: u64) -> PyResult<Bound<'py, PyList>> {
    let (_, recs) = synthetic::generate(&SyntheticSpec {
        n_tweets,
        n_events,
        seed,
    })
    .map_err(to_py)?;
    let items = recs.iter().map(|g| gold_to_dict(py, g)).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

fn history_list<'py>(py: Python<'py>, h: &TrainHistory) -> PyResult<Bound<'py, PyList>> {
    let mut items = Vec::with_capacity(h.entries.len());
    for e in &h.entries {
        let d = PyDict::new(py);
        d.set_item("step", e.step)?;
        d.set_item("epoch", e.epoch)?;
        d.set_item("loss", e.loss.total)?;
        d.set_item("info_loss", e.loss.info)?;
        d.set_item("priority_loss", e.loss.priority)?;
        match &e.metrics {
            Some(m) => d.set_item("metrics", report_to_dict(py, m)?)?,
            None => d.set_item("metrics", py.None())?,
        }
        items.push(d);
    }
    PyList::new(py, items)
}

/// Trains a model. `config` maps config-file keys to values; unset keys keep
/// their defaults. Returns the model and one dict per evaluation point.
#[pyfunction]
#[pyo3(signature = (train_set, dev_set = None, config = None, ontology = None))]
fn train<'py>(
    py: Python<'py>,
    train_set: Vec<Bound<'py, PyDict>>,
    dev_set: Option<Vec<Bound<'py, PyDict>>>,
    config: Option<&Bound<'py, PyDict>>,
    ontology: Option<&PyOntology>,
) -> PyResult<(PyModel, Bound<'py, PyList>)> {
    let mut cfg = ExperimentConfig::default();
    if let Some(c) = config {
        for (k, v) in c.iter() {
            let key: String = k.extract()?;
            let value = v.str()?.to_string();
            cfg.set(&key, &value).map_err(to_py)?;
        }
    }
    let train_set = golds(&train_set)?;
    let dev_set = match dev_set {
        Some(d) => golds(&d)?,
        None => Vec::new(),
    };
    let o = ontology_or_default(ontology);
    let outcome = py
        .detach(|| training::train(&cfg.model, &cfg.train, &train_set, &dev_set, &o))
        .map_err(to_py)?;
    let history = history_list(py, &outcome.history)?;
    Ok((PyModel { inner: outcome.model }, history))
}

/// Runs the command-line interface; returns its exit code.
#[pyfunction]
fn main(py: Python<'_>, argv: Vec<String>) -> i32 {
    let args: Vec<String> = std::iter::once("tweet-triage".to_string()).chain(argv).collect();
    py.detach(|| tweet_triage::cli::dispatch(args))
}

#[pymodule]
#[pyo3(name = "tweet_triage")]
fn tweet_triage_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOntology>()?;
    m.add_class::<PyModel>()?;
    m.add("PRIORITY_LEVELS", PriorityLevel::ALL.map(|l| l.as_str()).to_vec())?;
    m.add("METRIC_COLUMNS", metrics::METRIC_COLUMNS.to_vec())?;
    m.add_function(wrap_pyfunction!(priority_to_score, m)?)?;
    m.add_function(wrap_pyfunction!(score_to_priority, m)?)?;
    m.add_function(wrap_pyfunction!(harm, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(load_gold, m)?)?;
    m.add_function(wrap_pyfunction!(load_run, m)?)?;
    m.add_function(wrap_pyfunction!(write_run, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    Ok(())
}
