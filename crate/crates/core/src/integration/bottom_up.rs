use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::prompt::{question_segments, ANSWER_CUE};
use super::{finish, no_knowledge_warning, IntegrationResult, PipelineError, QueryTask, Segment, Stage};
use crate::filters::factuality::{factuality_sample, score_documents};
use crate::filters::{pruning_filter, relevance_filter, KnowledgeDocument};
use crate::providers::{GenerationRequest, Generator, Providers};
use crate::registry::{KnowledgeCard, PipelineConfig, Registry};

/// Asks each card for its documents (through the provider fan-out) and
/// returns them in card order. Blank generations are dropped with a warning.
pub(crate) fn generate_documents(
    cards: &[&KnowledgeCard],
    prompt: &str,
    providers: &Providers,
    config: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Vec<KnowledgeDocument>, PipelineError> {
    let gen_err = |source| PipelineError::Provider { stage: Stage::Generation, source };
    let mut calls: Vec<(Arc<dyn Generator>, GenerationRequest)> = Vec::with_capacity(cards.len());
    for card in cards {
        let params = card.gen_params(config);
        let generator = providers.generator(&card.provider).map_err(gen_err)?;
        calls.push((
            generator,
            GenerationRequest {
                prompt: prompt.into(),
                n: params.num_documents,
                temperature: params.temperature,
                max_new_tokens: params.max_new_tokens,
            },
        ));
    }
    let responses = providers.fan_out.generate_all(calls);
    let mut docs = Vec::new();
    for (card, response) in cards.iter().zip(responses) {
        let texts = response.map_err(gen_err)?.texts;
        let before = texts.len();
        docs.extend(texts.into_iter().filter(|t| !t.trim().is_empty()).map(|t| KnowledgeDocument::new(card.id.clone(), t)));
        let kept = docs.iter().filter(|d| d.card_id == card.id).count();
        if kept < before {
            warnings.push(super::blank_generation_warning(&card.id, before - kept));
        }
    }
    Ok(docs)
}

/// Activates every card, filters the pooled documents and asks the LLM once.
///
/// Stages: `n1` generations per card, relevance filter down to `n2`,
/// pruning, then factuality scoring and top-k sampling of `n3` documents.
/// A disabled stage passes its input through unchanged.
pub fn run_bottom_up(
    task: &QueryTask,
    registry: &Registry,
    providers: &Providers,
    config: &PipelineConfig,
    rng: &mut dyn RngCore,
) -> Result<IntegrationResult, PipelineError> {
    task.validate()?;
    if registry.cards().is_empty() {
        return Err(PipelineError::NoCards);
    }
    let mut result = IntegrationResult::new();
    let cards: Vec<&KnowledgeCard> = registry.cards().iter().collect();
    let mut docs = generate_documents(&cards, &task.question, providers, config, &mut result.warnings)?;

    if config.filters.relevance && !docs.is_empty() {
        docs = relevance_filter(&task.question, docs, config.n2 as usize, providers.embedder.as_ref())
            .map_err(|source| PipelineError::Filter { stage: Stage::Relevance, source })?;
    }
    if config.filters.pruning {
        docs = pruning_filter(docs, providers.summarizer.as_ref())
            .map_err(|source| PipelineError::Filter { stage: Stage::Pruning, source })?;
    }
    if config.filters.factuality && !docs.is_empty() {
        let fact_err = |source| PipelineError::Filter { stage: Stage::Factuality, source };
        score_documents(
            &mut docs,
            providers.summary_scorer.as_ref(),
            providers.retriever.as_ref(),
            providers.fact_checker.as_ref(),
            config.retrieval_k as usize,
        )
        .map_err(fact_err)?;
        result.record_scores(&docs);
        docs = factuality_sample(docs, config.fact_top_k as usize, config.n3 as usize, rng).map_err(fact_err)?;
    }
    if docs.is_empty() {
        result.warnings.push(no_knowledge_warning());
    }

    let mut parts = alloc::vec![Segment::Text(task.icl_prefix.clone())];
    parts.push(Segment::Knowledge(docs.iter().map(|d| String::from(d.text())).collect()));
    parts.extend(question_segments(task));
    parts.push(Segment::text(ANSWER_CUE));
    let prompt = super::assemble_prompt(&parts);
    result.knowledge_used = docs;
    finish(&mut result, &prompt, task, providers)?;
    Ok(result)
}
