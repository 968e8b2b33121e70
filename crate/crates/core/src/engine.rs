use crate::corpus::CorpusIndex;
use crate::error::Result;
use crate::query::{
    confirm, match_concepts, normalize, ConceptCandidate, ConceptQueryVector, Language,
    NormalizedQuery, Stopwords,
};
use crate::retrieval::{rank, RankedResult};
use crate::snapshot::Snapshot;
use crate::weighting::{build_weight_matrix, WeightMatrix};

/// A ready-to-query corpus: index, weight matrix and stopword lists.
#[derive(Debug, Clone)]
pub struct Engine {
    pub index: CorpusIndex,
    pub matrix: WeightMatrix,
    pub stopwords: Stopwords,
}

impl Engine {
    pub fn new(index: CorpusIndex, stopwords: Stopwords) -> Result<Self> {
        let matrix = build_weight_matrix(&index)?;
        Ok(Engine {
            index,
            matrix,
            stopwords,
        })
    }

    pub fn from_snapshot(snapshot: Snapshot, stopwords: Stopwords) -> Self {
        Engine {
            index: snapshot.index,
            matrix: snapshot.matrix,
            stopwords,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            index: self.index.clone(),
            matrix: self.matrix.clone(),
        }
    }

    pub fn expand(
        &self,
        text: &str,
        language: Option<Language>,
    ) -> Result<(NormalizedQuery, Vec<ConceptCandidate>)> {
        let query = normalize(text, language, &self.stopwords)?;
        let candidates = match_concepts(&query, self.index.lexicon(), &self.index);
        Ok((query, candidates))
    }

    /// Expands `text` and confirms its top `k` candidates. `None` when nothing matched.
    pub fn auto_query(
        &self,
        text: &str,
        language: Option<Language>,
        k: usize,
    ) -> Result<Option<ConceptQueryVector>> {
        let (_, candidates) = self.expand(text, language)?;
        let chosen: Vec<_> = candidates.iter().take(k).map(|c| c.concept_id).collect();
        if chosen.is_empty() {
            return Ok(None);
        }
        confirm(&candidates, &chosen).map(Some)
    }

    pub fn rank(&self, query: &ConceptQueryVector, limit: usize) -> Result<Vec<RankedResult>> {
        rank(query, &self.matrix, limit)
    }
}
