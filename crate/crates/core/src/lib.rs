//! Concept-based video retrieval.
//!
//! A shot-annotated corpus is organized as contexts → concepts → videos.
//! Each (concept, video) pair gets a TF-IDF-like weight; text queries in
//! English or Arabic are expanded into concepts through a lexicon, ranked
//! by cosine similarity, and refined with relevance feedback.

pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod feedback;
pub mod ingest;
pub mod query;
pub mod retrieval;
pub mod snapshot;
pub mod weighting;

pub use corpus::{ConceptId, CorpusIndex};
pub use engine::Engine;
pub use error::{Error, Result};
pub use feedback::{apply_feedback, FeedbackState, Judgment, Label};
pub use query::{ConceptCandidate, ConceptQueryVector, Language, NormalizedQuery, Stopwords};
pub use retrieval::{cosine, rank, RankedResult};
pub use snapshot::Snapshot;
pub use weighting::{build_weight_matrix, WeightMatrix};
