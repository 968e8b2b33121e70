//! Precision/recall evaluation and simulated feedback sessions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{apply_feedback, FeedbackState, Judgment, Label, DEFAULT_ALPHA};
use crate::query::ConceptQueryVector;
use crate::retrieval::rank;
use crate::weighting::WeightMatrix;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrelSet {
    pub query_id: String,
    pub relevant_videos: BTreeSet<String>,
}

impl QrelSet {
    pub fn new<I, S>(query_id: impl Into<String>, relevant: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        QrelSet {
            query_id: query_id.into(),
            relevant_videos: relevant.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_relevant(&self, video_id: &str) -> bool {
        self.relevant_videos.contains(video_id)
    }
}

/// Parses `query_id TAB video_id TAB label` lines, label 1 = relevant, 0 = not.
/// Queries keep their first-seen order.
pub fn parse_qrels(bytes: &[u8]) -> Result<Vec<QrelSet>> {
    let err = |line, message: String| Error::Tsv {
        file: "qrels",
        line,
        message,
    };
    let text = std::str::from_utf8(bytes).map_err(|_| err(0, "not valid UTF-8".into()))?;
    let mut order: Vec<String> = Vec::new();
    let mut sets: BTreeMap<String, QrelSet> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        let [query, video, label] = fields.as_slice() else {
            return Err(err(
                line,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        };
        let relevant = match *label {
            "1" => true,
            "0" => false,
            other => return Err(err(line, format!("label {other:?} is not 0 or 1"))),
        };
        let set = sets.entry(query.to_string()).or_insert_with(|| {
            order.push(query.to_string());
            QrelSet {
                query_id: query.to_string(),
                relevant_videos: BTreeSet::new(),
            }
        });
        if relevant {
            set.relevant_videos.insert(video.to_string());
        }
    }
    Ok(order
        .into_iter()
        .map(|q| sets.remove(&q).expect("inserted above"))
        .collect())
}

/// Parses `query_id TAB text` lines into a map from id to query text.
pub fn parse_queries(bytes: &[u8]) -> Result<BTreeMap<String, String>> {
    let err = |line, message: String| Error::Tsv {
        file: "queries",
        line,
        message,
    };
    let text = std::str::from_utf8(bytes).map_err(|_| err(0, "not valid UTF-8".into()))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let Some((id, query)) = raw.split_once('\t') else {
            return Err(err(i + 1, "expected `query_id<TAB>text`".into()));
        };
        let (id, query) = (id.trim(), query.trim());
        if id.is_empty() || query.is_empty() {
            return Err(err(i + 1, "empty query id or text".into()));
        }
        if out.insert(id.to_string(), query.to_string()).is_some() {
            return Err(err(i + 1, format!("duplicate query id {id}")));
        }
    }
    Ok(out)
}

fn hits_at(ranking: &[String], qrels: &QrelSet, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidArgument("cutoff k must be at least 1".into()));
    }
    if k > ranking.len() {
        return Err(Error::InvalidArgument(format!(
            "cutoff {k} exceeds ranking length {}",
            ranking.len()
        )));
    }
    Ok(ranking[..k].iter().filter(|v| qrels.is_relevant(v)).count())
}

pub fn precision_at(ranking: &[String], qrels: &QrelSet, k: usize) -> Result<f64> {
    Ok(hits_at(ranking, qrels, k)? as f64 / k as f64)
}

pub fn recall_at(ranking: &[String], qrels: &QrelSet, k: usize) -> Result<f64> {
    if qrels.relevant_videos.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "query {} has no relevant videos",
            qrels.query_id
        )));
    }
    Ok(hits_at(ranking, qrels, k)? as f64 / qrels.relevant_videos.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRPoint {
    pub recall: f64,
    pub precision: f64,
    pub rank_cutoff: usize,
}

/// One point at every rank holding a relevant video.
pub fn pr_curve(ranking: &[String], qrels: &QrelSet) -> Result<Vec<PRPoint>> {
    if ranking.is_empty() {
        return Err(Error::InvalidArgument("ranking is empty".into()));
    }
    if qrels.relevant_videos.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "query {} has no relevant videos",
            qrels.query_id
        )));
    }
    let total = qrels.relevant_videos.len() as f64;
    let mut hits = 0usize;
    let mut out = Vec::new();
    for (i, video) in ranking.iter().enumerate() {
        if qrels.is_relevant(video) {
            hits += 1;
            let k = i + 1;
            out.push(PRPoint {
                recall: hits as f64 / total,
                precision: hits as f64 / k as f64,
                rank_cutoff: k,
            });
        }
    }
    Ok(out)
}

/// Mean of the precision values at the curve's points (0 for an empty curve).
pub fn mean_precision(curve: &[PRPoint]) -> f64 {
    if curve.is_empty() {
        0.0
    } else {
        curve.iter().map(|p| p.precision).sum::<f64>() / curve.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Number of query iterations evaluated, Q0 included.
    pub iterations: usize,
    /// How many top results the simulated user judges per iteration.
    pub judge_depth: usize,
    pub alpha: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            iterations: 3,
            judge_depth: 60,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub iteration: usize,
    /// Every video with non-zero similarity, best first.
    pub ranking: Vec<String>,
    pub curve: Vec<PRPoint>,
}

impl IterationOutcome {
    /// Precision at `k`, counting positions past the end of the ranking as misses.
    pub fn precision_at(&self, qrels: &QrelSet, k: usize) -> f64 {
        let hits = self
            .ranking
            .iter()
            .take(k)
            .filter(|v| qrels.is_relevant(v))
            .count();
        hits as f64 / k as f64
    }
}

/// Runs Q0, Q1, ... with a simulated user who judges the top `judge_depth`
/// results of each iteration against `qrels`.
pub fn run_feedback_session(
    initial: &ConceptQueryVector,
    qrels: &QrelSet,
    matrix: &WeightMatrix,
    config: &SessionConfig,
) -> Result<Vec<IterationOutcome>> {
    if config.iterations == 0 {
        return Err(Error::InvalidArgument(
            "iterations must be at least 1".into(),
        ));
    }
    if config.judge_depth == 0 {
        return Err(Error::InvalidArgument(
            "judge depth must be at least 1".into(),
        ));
    }
    if qrels.relevant_videos.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "query {} has no relevant videos",
            qrels.query_id
        )));
    }
    let depth = matrix.videos().len().max(1);
    let mut state = FeedbackState::new(initial.clone(), config.alpha)?;
    let mut out = Vec::with_capacity(config.iterations);
    loop {
        let ranking: Vec<String> = rank(&state.current, matrix, depth)?
            .into_iter()
            .map(|r| r.video_id)
            .collect();
        let curve = if ranking.is_empty() {
            Vec::new()
        } else {
            pr_curve(&ranking, qrels)?
        };
        let judgments: Vec<Judgment> = ranking
            .iter()
            .take(config.judge_depth)
            .map(|v| {
                let label = if qrels.is_relevant(v) {
                    Label::Relevant
                } else {
                    Label::Irrelevant
                };
                Judgment::new(v.clone(), label)
            })
            .collect();
        out.push(IterationOutcome {
            iteration: state.iteration,
            ranking,
            curve,
        });
        if out.len() == config.iterations {
            break;
        }
        state = if judgments.is_empty() {
            state.advance(&BTreeMap::new())
        } else {
            apply_feedback(&state, &judgments, matrix)?
        };
    }
    Ok(out)
}

/// Curve records, one line per point: `query_id iteration rank_cutoff recall precision`.
pub fn write_curve_records<'a, I>(sessions: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a [IterationOutcome])>,
{
    let mut out = String::from("query_id\titeration\trank_cutoff\trecall\tprecision\n");
    for (query, outcomes) in sessions {
        for o in outcomes {
            for p in &o.curve {
                let _ = writeln!(
                    out,
                    "{query}\t{}\t{}\t{}\t{}",
                    o.iteration, p.rank_cutoff, p.recall, p.precision
                );
            }
        }
    }
    out
}
