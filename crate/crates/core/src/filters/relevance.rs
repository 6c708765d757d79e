use alloc::string::String;
use alloc::vec::Vec;

use super::{FilterError, KnowledgeDocument};
use crate::providers::{embed, Embedder};

/// Cosine similarity. A zero vector on either side scores `-1` so that
/// degenerate embeddings rank last.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return -1.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Indices of the `keep` largest scores, returned in ascending index order.
/// Equal scores prefer the earlier index.
pub fn top_k_preserving_order(scores: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

/// Keeps the `keep` documents most similar to `query` under `embedder`.
///
/// Query and documents are embedded in one call. Kept documents carry their
/// similarity in `relevance` and stay in input order.
pub fn relevance_filter(
    query: &str,
    docs: Vec<KnowledgeDocument>,
    keep: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<KnowledgeDocument>, FilterError> {
    if docs.is_empty() {
        return Err(FilterError::Contract("relevance filter needs at least one document".into()));
    }
    if keep == 0 {
        return Err(FilterError::Contract("relevance filter must keep at least one document".into()));
    }
    let mut texts: Vec<String> = Vec::with_capacity(docs.len() + 1);
    texts.push(query.into());
    texts.extend(docs.iter().map(|d| d.raw.clone()));
    let vectors = embed(embedder, &texts).map_err(FilterError::Embedding)?.vectors;
    let sims: Vec<f64> = vectors[1..].iter().map(|v| cosine_similarity(&vectors[0], v)).collect();
    let kept = top_k_preserving_order(&sims, keep);
    let mut docs: Vec<Option<KnowledgeDocument>> = docs.into_iter().map(Some).collect();
    Ok(kept
        .into_iter()
        .map(|i| {
            let mut d = docs[i].take().expect("indices are unique");
            d.relevance = Some(sims[i]);
            d
        })
        .collect())
}
