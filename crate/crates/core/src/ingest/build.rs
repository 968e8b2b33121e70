use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use super::lexicon::{Lexicon, LexiconEntry, LexiconRecord};
use super::xml::{ContextRecord, ParsedConcepts, ParsedContexts};
use super::{IngestReport, Warning};
use crate::corpus::{fold_name, ConceptId, Context, ContextMember, CorpusIndex};
use crate::error::{Error, Location, Result};

/// Parses the shot-count sidecar: `video_id TAB total_shots` per line.
pub fn parse_shot_counts(bytes: &[u8]) -> Result<BTreeMap<String, usize>> {
    let err = |line, message: String| Error::Tsv {
        file: "shot-count sidecar",
        line,
        message,
    };
    let text = std::str::from_utf8(bytes).map_err(|_| err(0, "not valid UTF-8".into()))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let [video, count] = fields.as_slice() else {
            return Err(err(
                line,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| err(line, format!("shot count {count:?} is not an integer")))?;
        if out.insert(video.trim().to_owned(), count).is_some() {
            return Err(err(line, format!("video {video} listed twice")));
        }
    }
    Ok(out)
}

/// Cross-links parsed inputs into a [`CorpusIndex`]. Referential problems
/// (unknown concepts in contexts or the lexicon, duplicate entries, shot-count
/// disagreements) become warnings in the report.
pub fn build_corpus_index(
    concepts: ParsedConcepts,
    contexts: ParsedContexts,
    lexicon: Vec<LexiconRecord>,
    shot_counts: Option<BTreeMap<String, usize>>,
) -> Result<(CorpusIndex, IngestReport)> {
    let mut warnings = concepts.warnings;
    warnings.extend(contexts.warnings);

    let mut ids = BTreeSet::new();
    for c in &concepts.concepts {
        if !ids.insert(c.id) {
            return Err(Error::Validation(format!("duplicate concept id {}", c.id)));
        }
    }
    let by_id: BTreeMap<ConceptId, &str> = concepts
        .concepts
        .iter()
        .map(|c| (c.id, c.name.as_str()))
        .collect();

    let resolved_contexts = resolve_contexts(contexts.contexts, &by_id, &mut warnings)?;

    let mut observed: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in &concepts.concepts {
        for s in &c.shots {
            observed
                .entry(s.video_id.as_str())
                .or_default()
                .insert(s.shot_id.as_str());
        }
    }
    let mut totals = BTreeMap::new();
    for (video, count) in shot_counts.unwrap_or_default() {
        let seen = observed.get(video.as_str()).map_or(0, BTreeSet::len);
        if count == 0 && seen == 0 {
            warnings.push(Warning {
                source: "shot-counts",
                location: None,
                message: format!("video {video} has zero shots, ignored"),
            });
            continue;
        }
        if count < seen {
            warnings.push(Warning {
                source: "shot-counts",
                location: None,
                message: format!(
                    "video {video} declares {count} shots but {seen} are annotated; using {seen}"
                ),
            });
        }
        totals.insert(video, count.max(seen));
    }

    let names: BTreeMap<String, ConceptId> = concepts
        .concepts
        .iter()
        .map(|c| (fold_name(&c.name), c.id))
        .collect();
    let mut seen_triples = BTreeSet::new();
    let mut entries = Vec::new();
    for rec in lexicon {
        let at = Some(Location {
            line: rec.line,
            column: 1,
        });
        let Some(&concept_id) = names.get(&fold_name(&rec.concept_name)) else {
            warnings.push(Warning {
                source: "lexicon",
                location: at,
                message: format!("unknown concept {:?}, entry dropped", rec.concept_name),
            });
            continue;
        };
        if !seen_triples.insert((rec.term.clone(), rec.language, concept_id)) {
            warnings.push(Warning {
                source: "lexicon",
                location: at,
                message: format!(
                    "duplicate entry ({}, {}, {}), dropped",
                    rec.language, rec.term, rec.concept_name
                ),
            });
            continue;
        }
        entries.push(LexiconEntry {
            term: rec.term,
            language: rec.language,
            concept_id,
            descriptor_weight: rec.weight,
        });
    }
    let lexicon = Lexicon::from(entries);

    let shots_parsed = concepts.concepts.iter().map(|c| c.shots.len()).sum();
    let report_lexicon = lexicon.len();
    let index = CorpusIndex::assemble(concepts.concepts, resolved_contexts, totals, lexicon)?;
    let report = IngestReport {
        concepts_parsed: index.concept_count(),
        contexts_parsed: index.contexts().len(),
        shots_parsed,
        videos_indexed: index.video_count(),
        lexicon_entries: report_lexicon,
        warnings,
    };
    Ok((index, report))
}

fn resolve_contexts(
    records: Vec<ContextRecord>,
    by_id: &BTreeMap<ConceptId, &str>,
    warnings: &mut Vec<Warning>,
) -> Result<Vec<Context>> {
    let mut names = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        if !names.insert(rec.name.clone()) {
            return Err(Error::Validation(format!(
                "context name {:?} appears more than once",
                rec.name
            )));
        }
        let mut members: Vec<ContextMember> = Vec::new();
        for m in rec.members {
            let Some(&known) = by_id.get(&m.concept_id) else {
                warnings.push(Warning {
                    source: "contexts",
                    location: None,
                    message: format!(
                        "context {:?} references unknown concept {}, member dropped",
                        rec.name, m.concept_id
                    ),
                });
                continue;
            };
            if let Some(name) = &m.concept_name {
                if fold_name(name) != fold_name(known) {
                    warnings.push(Warning {
                        source: "contexts",
                        location: None,
                        message: format!(
                            "context {:?} names concept {} {:?}, index has {:?}",
                            rec.name, m.concept_id, name, known
                        ),
                    });
                }
            }
            if members.iter().any(|x| x.concept_id == m.concept_id) {
                warnings.push(Warning {
                    source: "contexts",
                    location: None,
                    message: format!(
                        "context {:?} lists concept {} twice, keeping the first",
                        rec.name, m.concept_id
                    ),
                });
                continue;
            }
            members.push(ContextMember {
                concept_id: m.concept_id,
                weight: m.weight,
            });
        }
        out.push(Context {
            num: rec.num,
            name: rec.name,
            members,
        });
    }
    Ok(out)
}

/// Paths to the corpus input files.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CorpusFiles {
    pub concepts: PathBuf,
    pub contexts: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub shot_counts: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Reads, parses and builds the index from files.
pub fn load_corpus(files: &CorpusFiles) -> Result<(CorpusIndex, IngestReport)> {
    let concepts = super::parse_concept_shots_xml(&read(&files.concepts)?)?;
    let contexts = match &files.contexts {
        Some(p) => super::parse_contexts_xml(&read(p)?)?,
        None => ParsedContexts::default(),
    };
    let lexicon = match &files.lexicon {
        Some(p) => super::load_lexicon(&read(p)?)?,
        None => Vec::new(),
    };
    let shot_counts = files
        .shot_counts
        .as_ref()
        .map(|p| read(p).and_then(|b| parse_shot_counts(&b)))
        .transpose()?;
    build_corpus_index(concepts, contexts, lexicon, shot_counts)
}
