//! Concept-in-video weights and the video × concept weight matrix.
//!
//! The local weight is the fraction of a video's shots carrying the concept.
//! The global weight divides the number of semantically similar concepts by
//! the video's concept count times the number of videos containing the
//! concept. The combined weight is their product.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptId, CorpusIndex};
use crate::error::{Error, Result};

/// `nb_shots / n_total_shots`.
pub fn local_weight(nb_shots_cv: usize, n_total_shots: usize) -> Result<f64> {
    if n_total_shots == 0 {
        return Err(Error::InvalidCorpus("video with zero shots".into()));
    }
    if nb_shots_cv > n_total_shots {
        return Err(Error::Validation(format!(
            "{nb_shots_cv} concept shots exceed the video's {n_total_shots} shots"
        )));
    }
    Ok(nb_shots_cv as f64 / n_total_shots as f64)
}

/// `max(nb_similar, 1) / (nb_concepts_in_video × n_videos_with_concept)`.
///
/// The numerator is floored at one so a concept without context siblings
/// keeps a non-zero weight.
pub fn global_weight(
    nb_similar: usize,
    nb_concepts_in_video: usize,
    n_videos_with_concept: usize,
) -> Result<f64> {
    if nb_concepts_in_video == 0 || n_videos_with_concept == 0 {
        return Err(Error::InvalidCorpus(format!(
            "global weight denominator is zero (concepts in video {nb_concepts_in_video}, \
             videos with concept {n_videos_with_concept})"
        )));
    }
    let numerator = nb_similar.max(1) as f64;
    Ok(numerator / (nb_concepts_in_video as f64 * n_videos_with_concept as f64))
}

pub fn combined_weight(p1: f64, p2: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p1) && p2 >= 0.0);
    p1 * p2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptVideoWeight {
    pub concept_id: ConceptId,
    pub video_id: String,
    pub p1: f64,
    pub p2: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MatrixData {
    videos: Vec<String>,
    concepts: Vec<ConceptId>,
    entries: Vec<ConceptVideoWeight>,
}

/// Sparse video × concept matrix. Rows are videos, both axes sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixData", into = "MatrixData")]
pub struct WeightMatrix {
    videos: Vec<String>,
    concepts: Vec<ConceptId>,
    /// Per video, entries sorted by concept position.
    rows: Vec<Vec<(usize, ConceptVideoWeight)>>,
    video_pos: BTreeMap<String, usize>,
    concept_pos: BTreeMap<ConceptId, usize>,
}

impl TryFrom<MatrixData> for WeightMatrix {
    type Error = Error;

    fn try_from(data: MatrixData) -> Result<Self> {
        let mut matrix = WeightMatrix::empty(data.videos, data.concepts)?;
        for e in data.entries {
            matrix.push(e)?;
        }
        Ok(matrix)
    }
}

impl From<WeightMatrix> for MatrixData {
    fn from(m: WeightMatrix) -> Self {
        let entries = m.entries().cloned().collect();
        MatrixData {
            videos: m.videos,
            concepts: m.concepts,
            entries,
        }
    }
}

impl WeightMatrix {
    fn empty(videos: Vec<String>, concepts: Vec<ConceptId>) -> Result<Self> {
        if !videos.windows(2).all(|w| w[0] < w[1]) || !concepts.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation(
                "matrix axes must be strictly sorted".into(),
            ));
        }
        let video_pos = videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let concept_pos = concepts.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(WeightMatrix {
            rows: vec![Vec::new(); videos.len()],
            videos,
            concepts,
            video_pos,
            concept_pos,
        })
    }

    fn push(&mut self, entry: ConceptVideoWeight) -> Result<()> {
        let row = *self
            .video_pos
            .get(&entry.video_id)
            .ok_or_else(|| Error::not_found("video", &entry.video_id))?;
        let col = *self
            .concept_pos
            .get(&entry.concept_id)
            .ok_or_else(|| Error::not_found("concept", entry.concept_id))?;
        let cells = &mut self.rows[row];
        if cells.last().is_some_and(|(c, _)| *c >= col) {
            return Err(Error::Validation(format!(
                "matrix entries for {} are not strictly sorted by concept",
                entry.video_id
            )));
        }
        cells.push((col, entry));
        Ok(())
    }

    pub fn videos(&self) -> &[String] {
        &self.videos
    }

    pub fn concepts(&self) -> &[ConceptId] {
        &self.concepts
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn concept_position(&self, id: ConceptId) -> Option<usize> {
        self.concept_pos.get(&id).copied()
    }

    pub fn video_position(&self, id: &str) -> Option<usize> {
        self.video_pos.get(id).copied()
    }

    /// All entries, by video then concept.
    pub fn entries(&self) -> impl Iterator<Item = &ConceptVideoWeight> {
        self.rows.iter().flatten().map(|(_, e)| e)
    }

    pub fn entry(&self, video_id: &str, concept_id: ConceptId) -> Option<&ConceptVideoWeight> {
        let row = &self.rows[self.video_position(video_id)?];
        let col = self.concept_position(concept_id)?;
        row.binary_search_by_key(&col, |(c, _)| *c)
            .ok()
            .map(|i| &row[i].1)
    }

    /// Sparse row as (concept position, combined weight).
    pub(crate) fn row(&self, video_index: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[video_index].iter().map(|(c, e)| (*c, e.p))
    }

    /// Dense view over the concept universe; absent concepts read as zero.
    pub fn video_vector(&self, video_id: &str) -> Result<Vec<f64>> {
        let row = self
            .video_position(video_id)
            .ok_or_else(|| Error::not_found("video", video_id))?;
        let mut out = vec![0.0; self.concepts.len()];
        for (col, p) in self.row(row) {
            out[col] = p;
        }
        Ok(out)
    }

    /// Line-oriented export with a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("video_id\tconcept_id\tp1\tp2\tp\n");
        for e in self.entries() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.video_id, e.concept_id, e.p1, e.p2, e.p
            );
        }
        out
    }
}

pub fn build_weight_matrix(index: &CorpusIndex) -> Result<WeightMatrix> {
    let videos: Vec<String> = index.videos().map(|v| v.id.clone()).collect();
    let concepts: Vec<ConceptId> = index.concepts().map(|c| c.id).collect();
    let mut similar = BTreeMap::new();
    for &c in &concepts {
        similar.insert(c, index.similar_concepts(c)?.len());
    }
    let mut matrix = WeightMatrix::empty(videos, concepts)?;

    for video in index.videos() {
        let nb_concepts = video.concepts.len();
        for &c in &video.concepts {
            let nb_shots = index.nb_shots(c, &video.id);
            let n_videos = index.videos_of_concept(c)?.len();
            let nb_similar = similar[&c];
            if nb_similar == 0 {
                log::debug!(
                    "concept {c} has no similar concepts; global weight for {} uses numerator 1",
                    video.id
                );
            }
            let p1 = local_weight(nb_shots, video.total_shots)?;
            let p2 = global_weight(nb_similar, nb_concepts, n_videos)?;
            matrix.push(ConceptVideoWeight {
                concept_id: c,
                video_id: video.id.clone(),
                p1,
                p2,
                p: combined_weight(p1, p2),
            })?;
        }
    }
    Ok(matrix)
}
