//! Relevance feedback across query iterations.
//!
//! Each iteration adds the initial query to the previous iteration's query
//! and shifts every concept by ±alpha. The sign comes from comparing the
//! concept's mean weight over videos judged relevant with its mean over
//! videos judged irrelevant. Negative results are clamped to zero.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::query::ConceptQueryVector;
use crate::weighting::WeightMatrix;

pub const DEFAULT_ALPHA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub video_id: String,
    pub label: Label,
}

impl Judgment {
    pub fn new(video_id: impl Into<String>, label: Label) -> Self {
        Judgment {
            video_id: video_id.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackState {
    pub iteration: usize,
    pub p_initial: ConceptQueryVector,
    /// The previous iteration's query; zero at iteration 0.
    pub p_fb: ConceptQueryVector,
    pub alpha: f64,
    pub current: ConceptQueryVector,
}

impl FeedbackState {
    pub fn new(p_initial: ConceptQueryVector, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        if p_initial.iter().any(|(_, w)| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(
                "query weights must be finite and non-negative".into(),
            ));
        }
        Ok(FeedbackState {
            iteration: 0,
            current: p_initial.clone(),
            p_initial,
            p_fb: ConceptQueryVector::zero(),
            alpha,
        })
    }

    /// Next iteration under the given per-concept signs (missing means 0).
    pub fn advance(&self, signs: &BTreeMap<ConceptId, i8>) -> FeedbackState {
        let p_fb = self.current.clone();
        let concepts: BTreeSet<ConceptId> = self
            .p_initial
            .concepts()
            .chain(p_fb.concepts())
            .chain(signs.keys().copied())
            .collect();
        let mut current = ConceptQueryVector::zero();
        for c in concepts {
            let sign = f64::from(signs.get(&c).copied().unwrap_or(0));
            let w = self.p_initial.get(c) + p_fb.get(c) + sign * self.alpha;
            current.set(c, w.max(0.0));
        }
        FeedbackState {
            iteration: self.iteration + 1,
            p_initial: self.p_initial.clone(),
            p_fb,
            alpha: self.alpha,
            current,
        }
    }
}

/// Collapses repeated judgments of one video, keeping the last.
pub fn dedup_judgments(judgments: &[Judgment]) -> BTreeMap<&str, Label> {
    judgments
        .iter()
        .map(|j| (j.video_id.as_str(), j.label))
        .collect()
}

/// +1 when a concept weighs more on average in relevant-judged videos than
/// in irrelevant-judged ones, -1 when less, 0 otherwise. Concepts absent
/// from every judged video get no entry.
pub fn feedback_signs(
    judgments: &[Judgment],
    matrix: &WeightMatrix,
) -> Result<BTreeMap<ConceptId, i8>> {
    let labels = dedup_judgments(judgments);
    let unknown: Vec<String> = labels
        .keys()
        .filter(|v| matrix.video_position(v).is_none())
        .map(|v| v.to_string())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownVideos(unknown));
    }

    let n = matrix.concepts().len();
    let mut sum_rel = vec![0.0; n];
    let mut sum_irr = vec![0.0; n];
    let mut present = vec![false; n];
    let (mut n_rel, mut n_irr) = (0usize, 0usize);
    for (video, label) in labels {
        let row = matrix.video_position(video).expect("checked above");
        let sums = match label {
            Label::Relevant => {
                n_rel += 1;
                &mut sum_rel
            }
            Label::Irrelevant => {
                n_irr += 1;
                &mut sum_irr
            }
        };
        for (col, p) in matrix.row(row) {
            sums[col] += p;
            present[col] = true;
        }
    }
    let mean = |sum: f64, count: usize| if count == 0 { 0.0 } else { sum / count as f64 };

    let mut signs = BTreeMap::new();
    for col in (0..n).filter(|&c| present[c]) {
        let sign = match mean(sum_rel[col], n_rel).total_cmp(&mean(sum_irr[col], n_irr)) {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => 0,
        };
        signs.insert(matrix.concepts()[col], sign);
    }
    Ok(signs)
}

pub fn apply_feedback(
    state: &FeedbackState,
    judgments: &[Judgment],
    matrix: &WeightMatrix,
) -> Result<FeedbackState> {
    if judgments.is_empty() {
        return Err(Error::InvalidArgument("no judgments submitted".into()));
    }
    let signs = feedback_signs(judgments, matrix)?;
    Ok(state.advance(&signs))
}
