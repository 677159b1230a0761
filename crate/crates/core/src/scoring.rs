//! Pairwise distance score and linear-scan nearest-structure search.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("feature length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Distance between a query and one database entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResult {
    pub query_id: String,
    pub target_id: String,
    pub distance: f64,
}

/// Euclidean distance between two equal-length slices.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, ScoreError> {
    if a.len() != b.len() {
        return Err(ScoreError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// CoMOGPhog score: lower means more similar.
pub fn score(query: &FeatureVector, target: &FeatureVector) -> Result<f64, ScoreError> {
    euclidean(&query.values, &target.values)
}

/// Ascending distance, ties broken by target id.
fn rank_order(a: &ScoreResult, b: &ScoreResult) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.target_id.cmp(&b.target_id))
}

/// Scores `query` against every entry and returns the `k` closest.
///
/// The scan is split across the rayon pool; each chunk keeps its own top-k
/// and the partial lists are merged, which gives the same ranking as a full
/// sort.
pub fn search(
    db: &[FeatureVector],
    query: &FeatureVector,
    k: usize,
) -> Result<Vec<ScoreResult>, ScoreError> {
    if k == 0 || db.is_empty() {
        return Ok(Vec::new());
    }
    let chunk = db.len().div_ceil(rayon::current_num_threads().max(1)).max(64);
    let partials = db
        .par_chunks(chunk)
        .map(|entries| {
            let mut hits = entries
                .iter()
                .map(|entry| {
                    Ok(ScoreResult {
                        query_id: query.id.clone(),
                        target_id: entry.id.clone(),
                        distance: score(query, entry)?,
                    })
                })
                .collect::<Result<Vec<_>, ScoreError>>()?;
            truncate_top_k(&mut hits, k);
            Ok(hits)
        })
        .collect::<Result<Vec<_>, ScoreError>>()?;
    let mut merged: Vec<ScoreResult> = partials.into_iter().flatten().collect();
    truncate_top_k(&mut merged, k);
    Ok(merged)
}

fn truncate_top_k(hits: &mut Vec<ScoreResult>, k: usize) {
    if hits.len() > k {
        hits.select_nth_unstable_by(k - 1, rank_order);
        hits.truncate(k);
    }
    hits.sort_by(rank_order);
}
