//! Cosine ranking of videos against a concept query vector.

use serde::{Deserialize, Serialize};

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::query::ConceptQueryVector;
use crate::weighting::WeightMatrix;

/// One concept's share of a video's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub concept_id: ConceptId,
    pub query_weight: f64,
    pub video_weight: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub video_id: String,
    pub similarity: f64,
    /// 1-based.
    pub rank: usize,
    pub contributing_concepts: Vec<Contribution>,
}

fn finish(dot: f64, sq_a: f64, sq_b: f64) -> f64 {
    if sq_a == 0.0 || sq_b == 0.0 {
        return 0.0;
    }
    (dot / (sq_a.sqrt() * sq_b.sqrt())).clamp(0.0, 1.0)
}

/// Cosine of two dense non-negative vectors; zero when either norm is zero.
pub fn cosine(query: &[f64], video: &[f64]) -> Result<f64> {
    if query.len() != video.len() {
        return Err(Error::DimensionMismatch {
            expected: query.len(),
            found: video.len(),
        });
    }
    let mut dot = 0.0;
    let mut qq = 0.0;
    let mut vv = 0.0;
    for (q, v) in query.iter().zip(video) {
        dot += q * v;
        qq += q * q;
        vv += v * v;
    }
    Ok(finish(dot, qq, vv))
}

/// Top `limit` videos by cosine, zero-similarity videos dropped, ties by video id.
pub fn rank(
    query: &ConceptQueryVector,
    matrix: &WeightMatrix,
    limit: usize,
) -> Result<Vec<RankedResult>> {
    if limit == 0 {
        return Err(Error::InvalidArgument("limit must be at least 1".into()));
    }
    if matrix.is_empty() {
        return Ok(Vec::new());
    }
    let dense = query.to_dense(matrix)?;
    let qq: f64 = dense.iter().map(|q| q * q).sum();

    let mut scored: Vec<(usize, f64)> = (0..matrix.videos().len())
        .filter_map(|row| {
            let mut dot = 0.0;
            let mut vv = 0.0;
            for (col, p) in matrix.row(row) {
                dot += dense[col] * p;
                vv += p * p;
            }
            let sim = finish(dot, qq, vv);
            (sim > 0.0).then_some((row, sim))
        })
        .collect();
    // Rows are already in video-id order, so a stable sort keeps exact ties sorted.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    order_near_ties(&mut scored);
    scored.truncate(limit);

    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (row, similarity))| {
            let video_id = matrix.videos()[row].clone();
            RankedResult {
                contributing_concepts: contributions(&dense, matrix, row),
                video_id,
                similarity,
                rank: i + 1,
            }
        })
        .collect())
}

/// Similarities this close are treated as equal.
pub const TIE_EPSILON: f64 = 1e-12;

/// Re-sorts runs of near-equal similarities by row (video id). Proportional
/// video vectors score identically in exact arithmetic but can differ in the
/// last bits depending on the query's magnitude.
fn order_near_ties(scored: &mut [(usize, f64)]) {
    let mut start = 0;
    while start < scored.len() {
        let head = scored[start].1;
        let end = start
            + scored[start..]
                .iter()
                .take_while(|(_, s)| head - s <= TIE_EPSILON)
                .count();
        scored[start..end].sort_by_key(|&(row, _)| row);
        start = end;
    }
}

fn contributions(dense_query: &[f64], matrix: &WeightMatrix, row: usize) -> Vec<Contribution> {
    matrix
        .row(row)
        .filter(|&(col, _)| dense_query[col] > 0.0)
        .map(|(col, p)| Contribution {
            concept_id: matrix.concepts()[col],
            query_weight: dense_query[col],
            video_weight: p,
            product: dense_query[col] * p,
        })
        .collect()
}

/// Per-concept terms of the unnormalized dot product behind a result.
pub fn explain(result: &RankedResult) -> &[Contribution] {
    &result.contributing_concepts
}

/// Explains an arbitrary (query, video) pair.
pub fn explain_pair(
    query: &ConceptQueryVector,
    matrix: &WeightMatrix,
    video_id: &str,
) -> Result<Vec<Contribution>> {
    let row = matrix
        .video_position(video_id)
        .ok_or_else(|| Error::not_found("video", video_id))?;
    Ok(contributions(&query.to_dense(matrix)?, matrix, row))
}
