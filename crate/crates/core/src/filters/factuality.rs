use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::sampling::sample_top_k;
use super::{FilterError, KnowledgeDocument};
use crate::providers::{fact_score, retrieve, FactScorer, ProviderError, Retriever};

/// How faithful the condensed text is to the raw document: the scorer is
/// asked whether the raw text supports the summary. A document that never
/// went through pruning is scored as its own summary.
pub fn score_summarization_factuality(
    doc: &mut KnowledgeDocument,
    scorer: &dyn FactScorer,
) -> Result<f64, ProviderError> {
    let summary = doc.pruned.as_deref().unwrap_or(&doc.raw);
    let score = fact_score(scorer, summary, &doc.raw)?.score;
    doc.s_sum = Some(score);
    Ok(score)
}

/// Support for the raw document from the best of up to `retrieval_k`
/// retrieved evidence passages. With no evidence, `s_fact` stays unset.
pub fn score_retrieval_factuality(
    doc: &mut KnowledgeDocument,
    retriever: &dyn Retriever,
    scorer: &dyn FactScorer,
    retrieval_k: usize,
) -> Result<(Option<f64>, bool), ProviderError> {
    let evidence = retrieve(retriever, &doc.raw, retrieval_k)?.documents;
    let mut best: Option<f64> = None;
    for t in &evidence {
        let s = fact_score(scorer, &doc.raw, &t.text)?.score;
        best = Some(best.map_or(s, |b: f64| b.max(s)));
    }
    doc.s_fact = best;
    doc.evidence_found = !evidence.is_empty();
    Ok((best, doc.evidence_found))
}

pub fn aggregate_factuality(doc: &mut KnowledgeDocument) -> Result<f64, FilterError> {
    let s_sum = doc
        .s_sum
        .ok_or_else(|| FilterError::Contract(format!("document from `{}` has no summarization score", doc.card_id)))?;
    let s_d = match (doc.evidence_found, doc.s_fact) {
        (true, Some(s_fact)) => (s_sum + s_fact) / 2.0,
        (true, None) => {
            return Err(FilterError::Contract(format!(
                "document from `{}` found evidence but has no fact-check score",
                doc.card_id
            )))
        }
        (false, _) => s_sum,
    };
    doc.s_d = Some(s_d);
    Ok(s_d)
}

/// Runs both factuality measures and the aggregate on every document.
pub fn score_documents(
    docs: &mut [KnowledgeDocument],
    summary_scorer: &dyn FactScorer,
    retriever: &dyn Retriever,
    fact_checker: &dyn FactScorer,
    retrieval_k: usize,
) -> Result<(), FilterError> {
    for (index, doc) in docs.iter_mut().enumerate() {
        score_summarization_factuality(doc, summary_scorer).map_err(|source| FilterError::Scoring { index, source })?;
        score_retrieval_factuality(doc, retriever, fact_checker, retrieval_k)
            .map_err(|source| FilterError::Scoring { index, source })?;
        aggregate_factuality(doc)?;
    }
    Ok(())
}

/// Keeps `l` documents drawn by top-`k` factuality sampling, ordered by
/// descending `s_d` (ties by input order).
pub fn factuality_sample(
    docs: Vec<KnowledgeDocument>,
    k: usize,
    l: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<KnowledgeDocument>, FilterError> {
    let scores = docs
        .iter()
        .map(|d| {
            d.s_d.ok_or_else(|| FilterError::Contract(format!("document from `{}` has no factuality score", d.card_id)))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let chosen = sample_top_k(&scores, k, l, rng).map_err(|e| FilterError::Contract(format!("{e}")))?;
    let mut slots: Vec<Option<KnowledgeDocument>> = docs.into_iter().map(Some).collect();
    Ok(chosen.into_iter().map(|i| slots[i].take().expect("indices are unique")).collect())
}

/// Index of the highest `s_d`, ties by input order.
pub fn argmax_factuality(docs: &[KnowledgeDocument]) -> Result<Option<usize>, FilterError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in docs.iter().enumerate() {
        let s = d.s_d.ok_or_else(|| FilterError::Contract(format!("document from `{}` has no factuality score", d.card_id)))?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    Ok(best.map(|(i, _)| i))
}
