use alloc::string::String;
use alloc::vec::Vec;

use crate::filters::cosine_similarity;
use crate::filters::sampling::top_k_indices;
use crate::providers::{embed, Embedder, ProviderError};
use crate::registry::KnowledgeCard;

/// Index of the card whose description is most similar to `response`.
/// Ties go to the earlier card; a single card is returned without an
/// embedding call.
pub fn select_card_auto(response: &str, cards: &[KnowledgeCard], embedder: &dyn Embedder) -> Result<usize, ProviderError> {
    match cards.len() {
        0 => Err(ProviderError::invalid(embedder.endpoint(), "no cards to select from")),
        1 => Ok(0),
        _ => {
            let mut texts: Vec<String> = Vec::with_capacity(cards.len() + 1);
            texts.push(response.into());
            texts.extend(cards.iter().map(|c| c.description.clone()));
            let vectors = embed(embedder, &texts)?.vectors;
            let sims: Vec<f64> = vectors[1..].iter().map(|v| cosine_similarity(&vectors[0], v)).collect();
            Ok(top_k_indices(&sims, 1)[0])
        }
    }
}

/// Matches the LLM's named source against descriptions, then ids, after
/// trimming and case folding. Without a match the choice is resolved by
/// [`select_card_auto`] and reported as a fallback (`true`).
pub fn select_card_explicit(
    response: &str,
    cards: &[KnowledgeCard],
    embedder: &dyn Embedder,
) -> Result<(usize, bool), ProviderError> {
    let wanted = response.trim().to_lowercase();
    let by_description = cards.iter().position(|c| c.description.trim().to_lowercase() == wanted);
    let found = by_description.or_else(|| cards.iter().position(|c| c.id.trim().to_lowercase() == wanted));
    match found {
        Some(i) => Ok((i, false)),
        None => select_card_auto(response, cards, embedder).map(|i| (i, true)),
    }
}
