use alloc::vec::Vec;

use super::{FilterError, KnowledgeDocument};
use crate::providers::{summarize, Summarizer};
use crate::text::sentences;

/// Condenses every document with `summarizer`. Documents of at most one
/// sentence pass through unchanged without a provider call; an empty summary
/// also falls back to the raw text.
pub fn pruning_filter(
    docs: Vec<KnowledgeDocument>,
    summarizer: &dyn Summarizer,
) -> Result<Vec<KnowledgeDocument>, FilterError> {
    docs.into_iter()
        .enumerate()
        .map(|(index, mut doc)| {
            if doc.raw.trim().is_empty() {
                return Err(FilterError::Contract(alloc::format!("document {index} has empty text")));
            }
            let pruned = if sentences(&doc.raw).len() <= 1 {
                doc.raw.clone()
            } else {
                let summary = summarize(summarizer, &doc.raw).map_err(|source| FilterError::Pruning { index, source })?;
                if summary.trim().is_empty() {
                    doc.raw.clone()
                } else {
                    summary
                }
            };
            doc.pruned = Some(pruned);
            Ok(doc)
        })
        .collect()
}
