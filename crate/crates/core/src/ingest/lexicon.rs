use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::query::{tokenize, Language};

/// One raw lexicon line, before the concept name is resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconRecord {
    pub line: usize,
    pub language: Language,
    pub term: String,
    pub concept_name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub language: Language,
    pub concept_id: ConceptId,
    /// Descriptor weight in `(0, 1]`.
    pub descriptor_weight: f64,
}

/// Term → concept descriptors, keyed by (language, normalized term).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<LexiconEntry>", into = "Vec<LexiconEntry>")]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    by_term: BTreeMap<(Language, String), Vec<usize>>,
}

impl From<Vec<LexiconEntry>> for Lexicon {
    fn from(mut entries: Vec<LexiconEntry>) -> Self {
        entries.sort_by(|a, b| {
            (a.language, &a.term, a.concept_id).cmp(&(b.language, &b.term, b.concept_id))
        });
        entries.dedup_by(|b, a| {
            a.language == b.language && a.term == b.term && a.concept_id == b.concept_id
        });
        let mut by_term: BTreeMap<(Language, String), Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_term
                .entry((e.language, e.term.clone()))
                .or_default()
                .push(i);
        }
        Lexicon { entries, by_term }
    }
}

impl From<Lexicon> for Vec<LexiconEntry> {
    fn from(lexicon: Lexicon) -> Self {
        lexicon.entries
    }
}

impl Lexicon {
    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Descriptor entries for a normalized term.
    pub fn lookup<'a>(
        &'a self,
        language: Language,
        term: &str,
    ) -> impl Iterator<Item = &'a LexiconEntry> + 'a {
        self.by_term
            .get(&(language, term.to_owned()))
            .into_iter()
            .flatten()
            .map(move |&i| &self.entries[i])
    }
}

fn lexicon_error(line: usize, message: impl Into<String>) -> Error {
    Error::Lexicon {
        line,
        message: message.into(),
    }
}

/// Parses the lexicon TSV: `language TAB term TAB concept_name [TAB weight]`.
/// Blank lines and `#` comments are skipped; terms are normalized.
pub fn load_lexicon(bytes: &[u8]) -> Result<Vec<LexiconRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        lexicon_error(line, "not valid UTF-8")
    })?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(lexicon_error(
                line,
                format!(
                    "expected 3 or 4 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let language: Language = fields[0]
            .parse()
            .map_err(|e: Error| lexicon_error(line, e.to_string()))?;
        let tokens = tokenize(fields[1], language);
        let term = match tokens.as_slice() {
            [one] => one.term.clone(),
            [] => return Err(lexicon_error(line, "term is empty after normalization")),
            _ => {
                return Err(lexicon_error(
                    line,
                    format!("term {:?} is not a single word", fields[1]),
                ))
            }
        };
        let concept_name = fields[2].trim();
        if concept_name.is_empty() {
            return Err(lexicon_error(line, "empty concept name"));
        }
        let weight = match fields.get(3).map(|w| w.trim()).filter(|w| !w.is_empty()) {
            None => 1.0,
            Some(w) => {
                let v: f64 = w
                    .replace(',', ".")
                    .parse()
                    .map_err(|_| lexicon_error(line, format!("weight {w:?} is not numeric")))?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(lexicon_error(line, format!("weight {w} is outside (0, 1]")));
                }
                v
            }
        };
        out.push(LexiconRecord {
            line,
            language,
            term,
            concept_name: concept_name.to_owned(),
            weight,
        });
    }
    Ok(out)
}
