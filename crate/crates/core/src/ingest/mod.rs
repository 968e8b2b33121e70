//! Corpus ingestion: the concept-shots and contexts XML files, the term
//! lexicon, the optional shot-count sidecar, and index assembly.

mod build;
mod lexicon;
mod xml;

use serde::Serialize;

use crate::error::Location;

pub use build::{build_corpus_index, load_corpus, parse_shot_counts, CorpusFiles};
pub use lexicon::{load_lexicon, Lexicon, LexiconEntry, LexiconRecord};
pub use xml::{
    parse_concept_shots_xml, parse_contexts_xml, write_concept_shots_xml, write_contexts_xml,
    ContextMemberRecord, ContextRecord, ParsedConcepts, ParsedContexts,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    /// Source file label, e.g. `"concepts"` or `"lexicon"`.
    pub source: &'static str,
    pub location: Option<Location>,
    pub message: String,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.location {
            Some(loc) => write!(f, "{}:{}: {}", self.source, loc, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub concepts_parsed: usize,
    pub contexts_parsed: usize,
    pub shots_parsed: usize,
    pub videos_indexed: usize,
    pub lexicon_entries: usize,
    pub warnings: Vec<Warning>,
}
