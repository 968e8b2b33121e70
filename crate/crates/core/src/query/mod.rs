//! Text query → candidate concepts → confirmed concept query vector.

mod expand;
mod normalize;

pub use expand::{confirm, match_concepts, ConceptCandidate, ConceptQueryVector};
pub use normalize::{
    detect_language, fold_text, is_arabic_char, normalize, tokenize, Language, NormalizedQuery,
    QueryToken, Stopwords,
};
