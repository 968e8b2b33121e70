//! Query indexing: script detection, case folding, Arabic orthographic
//! normalization, stopword removal and equal weight sharing between terms.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "en", alias = "english")]
    English,
    #[serde(rename = "ar", alias = "arabic")]
    Arabic,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::Arabic => "ar",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::English),
            "ar" | "arabic" => Ok(Language::Arabic),
            other => Err(Error::InvalidArgument(format!(
                "unknown language {other:?}"
            ))),
        }
    }
}

pub fn is_arabic_char(c: char) -> bool {
    matches!(c as u32,
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
}

const TATWEEL: char = '\u{0640}';

fn is_arabic_diacritic(c: char) -> bool {
    matches!(c as u32, 0x064B..=0x065F | 0x0670 | 0x06D6..=0x06ED)
}

/// Appends the folded form of `c`; stripped marks append nothing.
fn fold_char(c: char, out: &mut String) {
    if c == TATWEEL || is_arabic_diacritic(c) {
        return;
    }
    match c {
        '\u{0623}' | '\u{0625}' | '\u{0622}' => out.push('\u{0627}'),
        '\u{0629}' => out.push('\u{0647}'),
        c => out.extend(c.to_lowercase()),
    }
}

/// Lowercases Latin text and applies the Arabic rules (tatweel and
/// diacritics stripped, alef variants unified, ta marbuta to ha).
pub fn fold_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        fold_char(c, &mut out);
    }
    out
}

/// Splits folded text into tokens, tagging each with the language of its script.
/// Tokens without letters of either script take `fallback`.
pub fn tokenize(text: &str, fallback: Language) -> Vec<QueryToken> {
    fold_text(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let language = if t.chars().any(is_arabic_char) {
                Language::Arabic
            } else if t.chars().any(char::is_alphabetic) {
                Language::English
            } else {
                fallback
            };
            QueryToken {
                term: t.to_owned(),
                language,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryToken {
    pub term: String,
    pub language: Language,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedQuery {
    pub original: String,
    pub language: Language,
    pub tokens: Vec<QueryToken>,
    /// Equal share per token, summed for repeated terms. Sums to 1.
    pub term_weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    english: HashSet<String>,
    arabic: HashSet<String>,
}

const BUNDLED_EN: &str = include_str!("../../stopwords/en.txt");
const BUNDLED_AR: &str = include_str!("../../stopwords/ar.txt");

fn parse_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(fold_text)
        .collect()
}

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::bundled()
    }
}

impl Stopwords {
    pub fn bundled() -> Self {
        Stopwords {
            english: parse_list(BUNDLED_EN),
            arabic: parse_list(BUNDLED_AR),
        }
    }

    pub fn empty() -> Self {
        Stopwords {
            english: HashSet::new(),
            arabic: HashSet::new(),
        }
    }

    pub fn from_lists(english: &str, arabic: &str) -> Self {
        Stopwords {
            english: parse_list(english),
            arabic: parse_list(arabic),
        }
    }

    /// Loads `en.txt` and `ar.txt` from `dir`; a missing file keeps the bundled list.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut words = Stopwords::bundled();
        let en = dir.join("en.txt");
        if en.exists() {
            words.english = parse_list(&std::fs::read_to_string(en)?);
        }
        let ar = dir.join("ar.txt");
        if ar.exists() {
            words.arabic = parse_list(&std::fs::read_to_string(ar)?);
        }
        Ok(words)
    }

    pub fn contains(&self, token: &QueryToken) -> bool {
        match token.language {
            Language::English => self.english.contains(&token.term),
            Language::Arabic => self.arabic.contains(&token.term),
        }
    }
}

/// Detects the query language by script: any Arabic codepoint means Arabic.
pub fn detect_language(text: &str) -> Language {
    if text.chars().any(is_arabic_char) {
        Language::Arabic
    } else {
        Language::English
    }
}

pub fn normalize(
    text: &str,
    language_hint: Option<Language>,
    stopwords: &Stopwords,
) -> Result<NormalizedQuery> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let language = language_hint.unwrap_or_else(|| detect_language(trimmed));
    let tokens: Vec<QueryToken> = tokenize(trimmed, language)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let share = 1.0 / tokens.len() as f64;
    let mut term_weights = BTreeMap::new();
    for t in &tokens {
        *term_weights.entry(t.term.clone()).or_insert(0.0) += share;
    }
    Ok(NormalizedQuery {
        original: text.to_owned(),
        language,
        tokens,
        term_weights,
    })
}
