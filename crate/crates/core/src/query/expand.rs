use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::normalize::NormalizedQuery;
use crate::corpus::{ConceptId, CorpusIndex};
use crate::error::{Error, Result};
use crate::ingest::Lexicon;
use crate::weighting::WeightMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptCandidate {
    pub concept_id: ConceptId,
    pub score: f64,
    pub matched_terms: Vec<String>,
    /// Strongest context membership of the concept. Informational only.
    pub context_boost: f64,
}

/// Query weights over concepts. Missing concepts weigh zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptQueryVector {
    weights: BTreeMap<ConceptId, f64>,
}

impl FromIterator<(ConceptId, f64)> for ConceptQueryVector {
    fn from_iter<I: IntoIterator<Item = (ConceptId, f64)>>(iter: I) -> Self {
        let mut weights = BTreeMap::new();
        for (c, w) in iter {
            weights.insert(c, w);
        }
        ConceptQueryVector { weights }
    }
}

impl ConceptQueryVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, id: ConceptId) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, id: ConceptId, weight: f64) {
        if weight == 0.0 {
            self.weights.remove(&id);
        } else {
            self.weights.insert(id, weight);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConceptId, f64)> + '_ {
        self.weights.iter().map(|(&c, &w)| (c, w))
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.weights.keys().copied()
    }

    /// True when no weight is strictly positive.
    pub fn is_zero(&self) -> bool {
        self.weights.values().all(|&w| w <= 0.0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.iter().map(|(c, w)| (c, w * k)).collect()
    }

    /// Dense form over the matrix's concept universe.
    pub fn to_dense(&self, matrix: &WeightMatrix) -> Result<Vec<f64>> {
        let mut out = vec![0.0; matrix.concepts().len()];
        for (c, w) in self.iter() {
            let pos = matrix
                .concept_position(c)
                .ok_or_else(|| Error::not_found("concept", c))?;
            out[pos] = w;
        }
        Ok(out)
    }
}

/// Scores every concept whose descriptors share a term with the query.
pub fn match_concepts(
    query: &NormalizedQuery,
    lexicon: &Lexicon,
    index: &CorpusIndex,
) -> Vec<ConceptCandidate> {
    let mut seen_terms = BTreeSet::new();
    let mut scores: BTreeMap<ConceptId, (f64, Vec<String>)> = BTreeMap::new();
    for token in &query.tokens {
        if !seen_terms.insert((token.language, token.term.as_str())) {
            continue;
        }
        let tw = query.term_weights.get(&token.term).copied().unwrap_or(0.0);
        for entry in lexicon.lookup(token.language, &token.term) {
            let slot = scores.entry(entry.concept_id).or_default();
            slot.0 += tw * entry.descriptor_weight;
            if !slot.1.contains(&token.term) {
                slot.1.push(token.term.clone());
            }
        }
    }
    let mut out: Vec<ConceptCandidate> = scores
        .into_iter()
        .filter(|(_, (score, _))| *score > 0.0)
        .map(|(concept_id, (score, matched_terms))| {
            let context_boost = index
                .context_of_concept(concept_id)
                .map(|ms| ms.iter().map(|m| m.weight).fold(0.0, f64::max))
                .unwrap_or(0.0);
            ConceptCandidate {
                concept_id,
                score,
                matched_terms,
                context_boost,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.concept_id.cmp(&b.concept_id))
    });
    out
}

/// Keeps the user's chosen candidates, renormalizing their scores to sum to one.
pub fn confirm(
    candidates: &[ConceptCandidate],
    chosen: &[ConceptId],
) -> Result<ConceptQueryVector> {
    if chosen.is_empty() {
        return Err(Error::NothingChosen);
    }
    let mut picked = BTreeMap::new();
    for &id in chosen {
        let cand = candidates
            .iter()
            .find(|c| c.concept_id == id)
            .ok_or(Error::NotACandidate(id.0))?;
        picked.insert(id, cand.score);
    }
    let total: f64 = picked.values().sum();
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NothingChosen);
    }
    Ok(picked.into_iter().map(|(c, s)| (c, s / total)).collect())
}
