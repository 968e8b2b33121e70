//! The three-level corpus hierarchy: contexts group concepts, concepts
//! annotate shots, and shots belong to videos.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for ConceptId {
    fn from(id: u32) -> Self {
        ConceptId(id)
    }
}

/// Returns the video a shot belongs to: everything before the last underscore.
pub fn video_id_of(shot_id: &str) -> Option<&str> {
    match shot_id.rfind('_') {
        Some(pos) if pos > 0 && pos + 1 < shot_id.len() => Some(&shot_id[..pos]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub shot_id: String,
    pub video_id: String,
    pub seq_num: u32,
}

impl Shot {
    pub fn new(shot_id: impl Into<String>, seq_num: u32) -> Result<Self> {
        let shot_id = shot_id.into();
        if shot_id.is_empty() {
            return Err(Error::Validation("empty shot id".into()));
        }
        let video_id = video_id_of(&shot_id)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "shot id {shot_id:?} has no `<video>_<n>` structure"
                ))
            })?
            .to_owned();
        Ok(Shot {
            shot_id,
            video_id,
            seq_num,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub name: String,
    pub shots: Vec<Shot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextMember {
    pub concept_id: ConceptId,
    /// Membership weight in `[0, 1]`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    /// Display number from the source file. Not unique.
    pub num: i64,
    pub name: String,
    pub members: Vec<ContextMember>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Video {
    pub id: String,
    /// Total number of shots in the video (`n` of the local weight).
    pub total_shots: usize,
    pub concepts: BTreeSet<ConceptId>,
}

/// One context a concept belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextMembership {
    pub context_num: i64,
    pub context_name: String,
    pub weight: f64,
}

/// Immutable, fully cross-linked corpus.
///
/// Built by [`crate::ingest::build_corpus_index`] or loaded from a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    concepts: BTreeMap<ConceptId, Concept>,
    contexts: Vec<Context>,
    videos: BTreeMap<String, Video>,
    concept_to_videos: BTreeMap<ConceptId, BTreeSet<String>>,
    video_to_concepts: BTreeMap<String, BTreeSet<ConceptId>>,
    /// nb_shots(c, v): distinct shots of video v annotated with c.
    shot_counts: BTreeMap<(ConceptId, String), usize>,
    concept_contexts: BTreeMap<ConceptId, Vec<usize>>,
    names: BTreeMap<String, ConceptId>,
    lexicon: Lexicon,
}

/// Canonical serializable form of the index. The derived maps are rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusData {
    pub concepts: Vec<Concept>,
    pub contexts: Vec<Context>,
    pub videos: Vec<Video>,
    pub lexicon: Lexicon,
}

pub(crate) fn fold_name(name: &str) -> String {
    name.to_lowercase()
}

impl CorpusIndex {
    /// Cross-links already validated parts. Contexts must only reference known
    /// concepts and every shot's video must be present in `videos`.
    pub(crate) fn assemble(
        concepts: Vec<Concept>,
        mut contexts: Vec<Context>,
        total_shots: BTreeMap<String, usize>,
        lexicon: Lexicon,
    ) -> Result<Self> {
        let mut concept_map = BTreeMap::new();
        let mut names = BTreeMap::new();
        let mut concept_to_videos: BTreeMap<ConceptId, BTreeSet<String>> = BTreeMap::new();
        let mut video_to_concepts: BTreeMap<String, BTreeSet<ConceptId>> = BTreeMap::new();
        let mut shot_counts: BTreeMap<(ConceptId, String), usize> = BTreeMap::new();
        let mut distinct_shots: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();

        for concept in &concepts {
            if let Some(prev) = names.insert(fold_name(&concept.name), concept.id) {
                return Err(Error::Validation(format!(
                    "concept name {:?} used by both {} and {}",
                    concept.name, prev, concept.id
                )));
            }
            let videos = concept_to_videos.entry(concept.id).or_default();
            let mut seen = BTreeSet::new();
            for shot in &concept.shots {
                if !seen.insert(shot.shot_id.as_str()) {
                    continue;
                }
                videos.insert(shot.video_id.clone());
                video_to_concepts
                    .entry(shot.video_id.clone())
                    .or_default()
                    .insert(concept.id);
                *shot_counts
                    .entry((concept.id, shot.video_id.clone()))
                    .or_default() += 1;
                distinct_shots
                    .entry(shot.video_id.as_str())
                    .or_default()
                    .insert(shot.shot_id.as_str());
            }
        }

        let mut videos = BTreeMap::new();
        let all_video_ids: BTreeSet<&String> =
            total_shots.keys().chain(video_to_concepts.keys()).collect();
        for id in all_video_ids {
            let observed = distinct_shots.get(id.as_str()).map_or(0, BTreeSet::len);
            let total = total_shots
                .get(id)
                .copied()
                .unwrap_or(observed)
                .max(observed);
            if total == 0 {
                return Err(Error::InvalidCorpus(format!("video {id} has no shots")));
            }
            videos.insert(
                id.clone(),
                Video {
                    id: id.clone(),
                    total_shots: total,
                    concepts: video_to_concepts.get(id).cloned().unwrap_or_default(),
                },
            );
        }
        for id in videos.keys() {
            video_to_concepts.entry(id.clone()).or_default();
        }

        for concept in concepts {
            concept_map.insert(concept.id, concept);
        }

        contexts.sort_by(|a, b| a.name.cmp(&b.name).then(a.num.cmp(&b.num)));
        let mut concept_contexts: BTreeMap<ConceptId, Vec<usize>> = BTreeMap::new();
        for (pos, ctx) in contexts.iter().enumerate() {
            for m in &ctx.members {
                if !concept_map.contains_key(&m.concept_id) {
                    return Err(Error::Validation(format!(
                        "context {:?} references unknown concept {}",
                        ctx.name, m.concept_id
                    )));
                }
                let list = concept_contexts.entry(m.concept_id).or_default();
                if list.last() != Some(&pos) {
                    list.push(pos);
                }
            }
        }

        Ok(CorpusIndex {
            concepts: concept_map,
            contexts,
            videos,
            concept_to_videos,
            video_to_concepts,
            shot_counts,
            concept_contexts,
            names,
            lexicon,
        })
    }

    pub fn from_data(data: CorpusData) -> Result<Self> {
        let total_shots = data
            .videos
            .iter()
            .map(|v| (v.id.clone(), v.total_shots))
            .collect();
        let index = Self::assemble(data.concepts, data.contexts, total_shots, data.lexicon)?;
        for v in &data.videos {
            if index.videos.get(&v.id) != Some(v) {
                return Err(Error::Validation(format!(
                    "video record {} disagrees with its concept annotations",
                    v.id
                )));
            }
        }
        Ok(index)
    }

    pub fn to_data(&self) -> CorpusData {
        CorpusData {
            concepts: self.concepts.values().cloned().collect(),
            contexts: self.contexts.clone(),
            videos: self.videos.values().cloned().collect(),
            lexicon: self.lexicon.clone(),
        }
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn concept(&self, id: ConceptId) -> Result<&Concept> {
        self.concepts
            .get(&id)
            .ok_or_else(|| Error::not_found("concept", id))
    }

    /// Case-insensitive lookup by name.
    pub fn concept_by_name(&self, name: &str) -> Option<&Concept> {
        self.names
            .get(&fold_name(name))
            .and_then(|id| self.concepts.get(id))
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn videos(&self) -> impl Iterator<Item = &Video> {
        self.videos.values()
    }

    pub fn video(&self, id: &str) -> Result<&Video> {
        self.videos
            .get(id)
            .ok_or_else(|| Error::not_found("video", id))
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Distinct videos with at least one shot of the concept, sorted.
    pub fn videos_of_concept(&self, id: ConceptId) -> Result<&BTreeSet<String>> {
        self.concept_to_videos
            .get(&id)
            .ok_or_else(|| Error::not_found("concept", id))
    }

    pub fn concepts_of_video(&self, video_id: &str) -> Result<&BTreeSet<ConceptId>> {
        self.video_to_concepts
            .get(video_id)
            .ok_or_else(|| Error::not_found("video", video_id))
    }

    /// Every other concept sharing at least one context with `id`.
    pub fn similar_concepts(&self, id: ConceptId) -> Result<BTreeSet<ConceptId>> {
        self.concept(id)?;
        let mut out = BTreeSet::new();
        for &pos in self.concept_contexts.get(&id).into_iter().flatten() {
            out.extend(self.contexts[pos].members.iter().map(|m| m.concept_id));
        }
        out.remove(&id);
        Ok(out)
    }

    /// Contexts listing the concept, sorted by context number then name.
    pub fn context_of_concept(&self, id: ConceptId) -> Result<Vec<ContextMembership>> {
        self.concept(id)?;
        let mut out: Vec<ContextMembership> = self
            .concept_contexts
            .get(&id)
            .into_iter()
            .flatten()
            .map(|&pos| {
                let ctx = &self.contexts[pos];
                let weight = ctx
                    .members
                    .iter()
                    .filter(|m| m.concept_id == id)
                    .map(|m| m.weight)
                    .fold(0.0, f64::max);
                ContextMembership {
                    context_num: ctx.num,
                    context_name: ctx.name.clone(),
                    weight,
                }
            })
            .collect();
        out.sort_by(|a, b| {
            a.context_num
                .cmp(&b.context_num)
                .then_with(|| a.context_name.cmp(&b.context_name))
        });
        Ok(out)
    }

    /// Number of distinct shots of `video_id` carrying the concept.
    pub fn nb_shots(&self, id: ConceptId, video_id: &str) -> usize {
        self.shot_counts
            .get(&(id, video_id.to_owned()))
            .copied()
            .unwrap_or(0)
    }
}
