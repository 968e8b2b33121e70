//! Versioned on-disk container for a corpus index and its weight matrix.
//!
//! Layout: one header line `VIDSEM-SNAPSHOT <version>` followed by the
//! canonical JSON body. Floats are written in shortest round-trip form, so
//! a loaded matrix is bitwise equal to the one that was saved.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusData, CorpusIndex};
use crate::error::{Error, Result};
use crate::weighting::WeightMatrix;

pub const MAGIC: &str = "VIDSEM-SNAPSHOT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub index: CorpusIndex,
    pub matrix: WeightMatrix,
}

#[derive(Serialize)]
struct BodyRef<'a> {
    index: CorpusData,
    matrix: &'a WeightMatrix,
}

#[derive(Deserialize)]
struct Body {
    index: CorpusData,
    matrix: WeightMatrix,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = format!("{MAGIC} {FORMAT_VERSION}\n").into_bytes();
        serde_json::to_writer(
            &mut out,
            &BodyRef {
                index: self.index.to_data(),
                matrix: &self.matrix,
            },
        )
        .map_err(|e| Error::Snapshot(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Snapshot("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| Error::Snapshot("header is not UTF-8".into()))?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| Error::Snapshot("not a snapshot file".into()))?;
        let version: u32 = version
            .parse()
            .map_err(|_| Error::Snapshot(format!("bad format version {version:?}")))?;
        if version != FORMAT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported format version {version} (this build reads {FORMAT_VERSION})"
            )));
        }
        let body: Body = serde_json::from_slice(&bytes[newline + 1..])
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let index = CorpusIndex::from_data(body.index)?;
        let videos: Vec<&String> = index.videos().map(|v| &v.id).collect();
        let concepts: Vec<_> = index.concepts().map(|c| c.id).collect();
        if body.matrix.videos().iter().collect::<Vec<_>>() != videos
            || body.matrix.concepts() != concepts.as_slice()
        {
            return Err(Error::Snapshot(
                "weight matrix axes do not match the corpus index".into(),
            ));
        }
        Ok(Snapshot {
            index,
            matrix: body.matrix,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_corpus_index, ParsedConcepts, ParsedContexts};
    use crate::weighting::build_weight_matrix;

    fn empty() -> Snapshot {
        let (index, _) = build_corpus_index(
            ParsedConcepts::default(),
            ParsedContexts::default(),
            vec![],
            None,
        )
        .unwrap();
        let matrix = build_weight_matrix(&index).unwrap();
        Snapshot { index, matrix }
    }

    #[test]
    fn empty_round_trip() {
        let s = empty();
        let bytes = s.to_bytes().unwrap();
        assert!(bytes.starts_with(b"VIDSEM-SNAPSHOT 1\n"));
        assert_eq!(Snapshot::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_bad_headers() {
        let body = empty().to_bytes().unwrap();
        let body = &body[body.iter().position(|&b| b == b'\n').unwrap()..];
        for header in ["", "NOPE 1", "VIDSEM-SNAPSHOT x", "VIDSEM-SNAPSHOT 2"] {
            let mut bytes = header.as_bytes().to_vec();
            bytes.extend_from_slice(body);
            assert!(
                matches!(Snapshot::from_bytes(&bytes), Err(Error::Snapshot(_))),
                "{header}"
            );
        }
        assert!(Snapshot::from_bytes(b"no newline").is_err());
        assert!(Snapshot::from_bytes(b"VIDSEM-SNAPSHOT 1\n{").is_err());
    }
}
