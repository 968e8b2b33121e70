//! Python bindings: `import vidsem`.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

use vidsem_core::eval::{self, QrelSet, SessionConfig};
use vidsem_core::feedback::{feedback_signs, DEFAULT_ALPHA};
use vidsem_core::ingest::{load_corpus, CorpusFiles};
use vidsem_core::query::confirm;
use vidsem_core::{
    ConceptId, ConceptQueryVector, Error, FeedbackState, Judgment, Label, Language, Snapshot,
    Stopwords,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotFound { .. } => PyKeyError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn language(lang: Option<&str>) -> PyResult<Option<Language>> {
    lang.map(|l| {
        l.parse()
            .map_err(|e: Error| PyValueError::new_err(e.to_string()))
    })
    .transpose()
}

fn query_vector(weights: HashMap<u32, f64>) -> ConceptQueryVector {
    weights
        .into_iter()
        .map(|(c, w)| (ConceptId(c), w))
        .collect()
}

fn as_dict(q: &ConceptQueryVector) -> BTreeMap<u32, f64> {
    q.iter().map(|(c, w)| (c.0, w)).collect()
}

fn stopwords(dir: Option<PathBuf>) -> PyResult<Stopwords> {
    match dir {
        Some(d) => Stopwords::from_dir(&d).map_err(to_py),
        None => Ok(Stopwords::bundled()),
    }
}

#[pyclass(frozen, get_all, module = "vidsem")]
pub struct Candidate {
    concept_id: u32,
    concept_name: String,
    score: f64,
    matched_terms: Vec<String>,
}

#[pymethods]
impl Candidate {
    fn __repr__(&self) -> String {
        format!(
            "Candidate({}, {:?}, score={:.4})",
            self.concept_id, self.concept_name, self.score
        )
    }
}

#[pyclass(frozen, get_all, module = "vidsem")]
pub struct RankedVideo {
    rank: usize,
    video_id: String,
    similarity: f64,
    /// `(concept_id, query_weight * video_weight)` pairs.
    contributions: Vec<(u32, f64)>,
}

#[pymethods]
impl RankedVideo {
    fn __repr__(&self) -> String {
        format!(
            "RankedVideo({}, {:?}, {:.6})",
            self.rank, self.video_id, self.similarity
        )
    }
}

/// An indexed corpus ready for querying.
#[pyclass(frozen, module = "vidsem")]
pub struct Engine {
    inner: Arc<vidsem_core::Engine>,
}

#[pymethods]
impl Engine {
    #[staticmethod]
    #[pyo3(signature = (concepts, contexts=None, lexicon=None, shot_counts=None, stopwords_dir=None))]
    fn from_files(
        concepts: PathBuf,
        contexts: Option<PathBuf>,
        lexicon: Option<PathBuf>,
        shot_counts: Option<PathBuf>,
        stopwords_dir: Option<PathBuf>,
    ) -> PyResult<Self> {
        let files = CorpusFiles {
            concepts,
            contexts,
            lexicon,
            shot_counts,
        };
        let (index, _) = load_corpus(&files).map_err(to_py)?;
        let inner = vidsem_core::Engine::new(index, stopwords(stopwords_dir)?).map_err(to_py)?;
        Ok(Engine {
            inner: Arc::new(inner),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, stopwords_dir=None))]
    fn load(path: PathBuf, stopwords_dir: Option<PathBuf>) -> PyResult<Self> {
        let snap = Snapshot::load(&path).map_err(to_py)?;
        Ok(Engine {
            inner: Arc::new(vidsem_core::Engine::from_snapshot(
                snap,
                stopwords(stopwords_dir)?,
            )),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.snapshot().save(&path).map_err(to_py)
    }

    #[getter]
    fn videos(&self) -> Vec<String> {
        self.inner.matrix.videos().to_vec()
    }

    /// `{concept_id: name}` for every concept.
    #[getter]
    fn concepts(&self) -> BTreeMap<u32, String> {
        self.inner
            .index
            .concepts()
            .map(|c| (c.id.0, c.name.clone()))
            .collect()
    }

    /// Combined weight of a concept in a video, or `None` when absent.
    fn weight(&self, video_id: &str, concept_id: u32) -> Option<f64> {
        self.inner
            .matrix
            .entry(video_id, ConceptId(concept_id))
            .map(|e| e.p)
    }

    #[pyo3(signature = (text, lang=None))]
    fn expand(&self, text: &str, lang: Option<&str>) -> PyResult<Vec<Candidate>> {
        let (_, candidates) = self.inner.expand(text, language(lang)?).map_err(to_py)?;
        Ok(candidates
            .into_iter()
            .map(|c| Candidate {
                concept_name: self
                    .inner
                    .index
                    .concept(c.concept_id)
                    .map(|k| k.name.clone())
                    .unwrap_or_default(),
                concept_id: c.concept_id.0,
                score: c.score,
                matched_terms: c.matched_terms,
            })
            .collect())
    }

    /// Query vector from the chosen candidates of `text`.
    #[pyo3(signature = (text, concept_ids, lang=None))]
    fn confirm(
        &self,
        text: &str,
        concept_ids: Vec<u32>,
        lang: Option<&str>,
    ) -> PyResult<BTreeMap<u32, f64>> {
        let (_, candidates) = self.inner.expand(text, language(lang)?).map_err(to_py)?;
        let chosen: Vec<ConceptId> = concept_ids.into_iter().map(ConceptId).collect();
        Ok(as_dict(&confirm(&candidates, &chosen).map_err(to_py)?))
    }

    /// Expands `text` and confirms its top `k` candidates; `None` if nothing matched.
    #[pyo3(signature = (text, lang=None, k=3))]
    fn auto_query(
        &self,
        text: &str,
        lang: Option<&str>,
        k: usize,
    ) -> PyResult<Option<BTreeMap<u32, f64>>> {
        let q = self
            .inner
            .auto_query(text, language(lang)?, k)
            .map_err(to_py)?;
        Ok(q.as_ref().map(as_dict))
    }

    #[pyo3(signature = (query, limit=60))]
    fn rank(&self, query: HashMap<u32, f64>, limit: usize) -> PyResult<Vec<RankedVideo>> {
        rank(&self.inner, &query_vector(query), limit)
    }

    /// Runs a simulated feedback session judged against `relevant`.
    /// Returns one dict per iteration.
    #[pyo3(signature = (query, relevant, iterations=3, judge_depth=60, alpha=DEFAULT_ALPHA))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        query: HashMap<u32, f64>,
        relevant: Vec<String>,
        iterations: usize,
        judge_depth: usize,
        alpha: f64,
    ) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
        let qrels = QrelSet::new("query", relevant);
        let config = SessionConfig {
            iterations,
            judge_depth,
            alpha,
        };
        let outcomes =
            eval::run_feedback_session(&query_vector(query), &qrels, &self.inner.matrix, &config)
                .map_err(to_py)?;
        outcomes
            .iter()
            .map(|o| {
                let d = pyo3::types::PyDict::new(py);
                d.set_item("iteration", o.iteration)?;
                d.set_item("ranking", &o.ranking)?;
                let curve: Vec<(usize, f64, f64)> = o
                    .curve
                    .iter()
                    .map(|p| (p.rank_cutoff, p.recall, p.precision))
                    .collect();
                d.set_item("curve", curve)?;
                d.set_item("mean_precision", eval::mean_precision(&o.curve))?;
                d.set_item("precision_at_10", o.precision_at(&qrels, 10))?;
                Ok(d)
            })
            .collect()
    }
}

fn rank(
    engine: &vidsem_core::Engine,
    query: &ConceptQueryVector,
    limit: usize,
) -> PyResult<Vec<RankedVideo>> {
    Ok(engine
        .rank(query, limit)
        .map_err(to_py)?
        .into_iter()
        .map(|r| RankedVideo {
            rank: r.rank,
            contributions: r
                .contributing_concepts
                .iter()
                .map(|c| (c.concept_id.0, c.product))
                .collect(),
            video_id: r.video_id,
            similarity: r.similarity,
        })
        .collect())
}

/// An interactive feedback loop over one engine.
#[pyclass(module = "vidsem")]
pub struct Session {
    engine: Arc<vidsem_core::Engine>,
    state: FeedbackState,
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (engine, query, alpha=DEFAULT_ALPHA))]
    fn new(engine: &Engine, query: HashMap<u32, f64>, alpha: f64) -> PyResult<Self> {
        Ok(Session {
            engine: engine.inner.clone(),
            state: FeedbackState::new(query_vector(query), alpha).map_err(to_py)?,
        })
    }

    #[getter]
    fn iteration(&self) -> usize {
        self.state.iteration
    }

    #[getter]
    fn current(&self) -> BTreeMap<u32, f64> {
        as_dict(&self.state.current)
    }

    #[getter]
    fn previous(&self) -> BTreeMap<u32, f64> {
        as_dict(&self.state.p_fb)
    }

    #[pyo3(signature = (limit=60))]
    fn rank(&self, limit: usize) -> PyResult<Vec<RankedVideo>> {
        rank(&self.engine, &self.state.current, limit)
    }

    /// Applies `{video_id: is_relevant}` judgments and moves to the next iteration.
    fn feedback(&mut self, judgments: BTreeMap<String, bool>) -> PyResult<usize> {
        if judgments.is_empty() {
            return Err(PyValueError::new_err("no judgments submitted"));
        }
        let judgments: Vec<Judgment> = judgments
            .into_iter()
            .map(|(v, rel)| {
                Judgment::new(
                    v,
                    if rel {
                        Label::Relevant
                    } else {
                        Label::Irrelevant
                    },
                )
            })
            .collect();
        let signs = feedback_signs(&judgments, &self.engine.matrix).map_err(to_py)?;
        self.state = self.state.advance(&signs);
        Ok(self.state.iteration)
    }
}

/// `(language, terms)` after folding, tokenization and stopword removal.
#[pyfunction]
#[pyo3(signature = (text, lang=None))]
fn normalize(text: &str, lang: Option<&str>) -> PyResult<(String, Vec<String>)> {
    let q = vidsem_core::query::normalize(text, language(lang)?, &Stopwords::bundled())
        .map_err(to_py)?;
    Ok((
        q.language.code().to_string(),
        q.tokens.into_iter().map(|t| t.term).collect(),
    ))
}

#[pyfunction]
fn cosine(query: Vec<f64>, video: Vec<f64>) -> PyResult<f64> {
    vidsem_core::cosine(&query, &video).map_err(to_py)
}

#[pyfunction]
fn precision_at(ranking: Vec<String>, relevant: Vec<String>, k: usize) -> PyResult<f64> {
    eval::precision_at(&ranking, &QrelSet::new("q", relevant), k).map_err(to_py)
}

#[pyfunction]
fn recall_at(ranking: Vec<String>, relevant: Vec<String>, k: usize) -> PyResult<f64> {
    eval::recall_at(&ranking, &QrelSet::new("q", relevant), k).map_err(to_py)
}

/// `(rank_cutoff, recall, precision)` at each relevant hit.
#[pyfunction]
fn pr_curve(ranking: Vec<String>, relevant: Vec<String>) -> PyResult<Vec<(usize, f64, f64)>> {
    Ok(eval::pr_curve(&ranking, &QrelSet::new("q", relevant))
        .map_err(to_py)?
        .into_iter()
        .map(|p| (p.rank_cutoff, p.recall, p.precision))
        .collect())
}

#[pymodule]
pub fn vidsem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Engine>()?;
    m.add_class::<Session>()?;
    m.add_class::<Candidate>()?;
    m.add_class::<RankedVideo>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(precision_at, m)?)?;
    m.add_function(wrap_pyfunction!(recall_at, m)?)?;
    m.add_function(wrap_pyfunction!(pr_curve, m)?)?;
    m.add("DEFAULT_ALPHA", DEFAULT_ALPHA)?;
    Ok(())
}
