use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::bottom_up::generate_documents;
use super::prompt::{choose_source_line, question_segments, ANSWER_CUE, NEED_MORE_INFO, WHAT_KIND};
use super::selection::{select_card_auto, select_card_explicit};
use super::{
    assemble_prompt, finish, parse_yes_no, CardSelection, Gate, IntegrationResult, PipelineError, QueryTask, Segment,
    Stage,
};
use crate::filters::factuality::{argmax_factuality, factuality_sample, score_documents};
use crate::filters::KnowledgeDocument;
use crate::providers::{llm_complete, Providers};
use crate::registry::{PipelineConfig, Registry, TopDownSelection};
use crate::text::collapse_whitespace;

/// How the LLM's knowledge request is mapped to a card.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    /// Ask what information is needed, then match the reply to card
    /// descriptions by embedding similarity.
    Auto,
    /// List the card descriptions and let the LLM name one.
    Explicit,
}

/// Lets the LLM request knowledge until it declines or the iteration budget
/// runs out, then asks for the answer.
///
/// Each round asks the gate question. On `No` the loop ends; on `Yes` with
/// budget left, a card is selected, generates `n1` documents, and the one
/// with the best factuality score is appended as a knowledge line. A `Yes`
/// after the last allowed request goes straight to the answer.
pub fn run_top_down(
    task: &QueryTask,
    registry: &Registry,
    providers: &Providers,
    config: &PipelineConfig,
    strategy: SelectionStrategy,
    rng: &mut dyn RngCore,
) -> Result<IntegrationResult, PipelineError> {
    task.validate()?;
    let cards = registry.cards();
    if cards.is_empty() {
        return Err(PipelineError::NoCards);
    }
    let mut result = IntegrationResult::new();
    let mut context = alloc::vec![Segment::Text(task.icl_prefix.clone())];
    context.extend(question_segments(task));

    for round in 0..=config.max_iterations {
        context.push(Segment::text(NEED_MORE_INFO));
        let reply = ask(&context, providers, &mut result.transcript)?;
        context.push(Segment::Text(collapse_whitespace(&reply)));
        let gate = parse_yes_no(&reply);
        if gate.ambiguous {
            result.ambiguous_gates += 1;
        }
        if round == 0 {
            result.first_gate = Some(gate.gate);
        }
        if gate.gate == Gate::No {
            result.abstain_path = round == 0;
            break;
        }
        if round == config.max_iterations {
            break;
        }

        let selection = match strategy {
            SelectionStrategy::Auto => {
                context.push(Segment::text(WHAT_KIND));
                let need = ask(&context, providers, &mut result.transcript)?;
                context.push(Segment::Text(collapse_whitespace(&need)));
                let index = select_card_auto(&need, cards, providers.embedder.as_ref())
                    .map_err(|source| PipelineError::Provider { stage: Stage::Selection, source })?;
                (index, false)
            }
            SelectionStrategy::Explicit => {
                context.push(Segment::Text(choose_source_line(cards.iter().map(|c| c.description.as_str()))));
                let choice = ask(&context, providers, &mut result.transcript)?;
                context.push(Segment::Text(collapse_whitespace(&choice)));
                select_card_explicit(&choice, cards, providers.embedder.as_ref())
                    .map_err(|source| PipelineError::Provider { stage: Stage::Selection, source })?
            }
        };
        let card = &cards[selection.0];
        result.selections.push(CardSelection { card_id: card.id.clone(), fallback: selection.1 });
        result.iterations += 1;

        let docs = generate_documents(&[card], &task.question, providers, config, &mut result.warnings)?;
        match pick_document(docs, providers, config, rng, &mut result)? {
            Some(doc) => {
                context.push(Segment::Knowledge(alloc::vec![doc.raw.clone()]));
                result.knowledge_used.push(doc);
            }
            None => result.warnings.push(alloc::format!("card `{}` returned no usable documents", card.id)),
        }
    }

    context.push(Segment::text(ANSWER_CUE));
    finish(&mut result, &assemble_prompt(&context), task, providers)?;
    Ok(result)
}

fn ask(context: &[Segment], providers: &Providers, transcript: &mut Vec<crate::providers::LlmTurn>) -> Result<String, PipelineError> {
    llm_complete(providers.llm.as_ref(), &assemble_prompt(context), &[], transcript).map_err(PipelineError::llm)
}

/// Factuality-scores the generations and keeps one: the argmax by default,
/// a single top-k sample when configured. With the factuality filter off the
/// first generation is kept.
fn pick_document(
    mut docs: Vec<KnowledgeDocument>,
    providers: &Providers,
    config: &PipelineConfig,
    rng: &mut dyn RngCore,
    result: &mut IntegrationResult,
) -> Result<Option<KnowledgeDocument>, PipelineError> {
    if docs.is_empty() {
        return Ok(None);
    }
    if !config.filters.factuality {
        return Ok(Some(docs.swap_remove(0)));
    }
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
    match config.top_down_selection {
        TopDownSelection::Argmax => {
            let best = argmax_factuality(&docs).map_err(fact_err)?;
            Ok(best.map(|i| docs.swap_remove(i)))
        }
        TopDownSelection::Sample => {
            let mut drawn = factuality_sample(docs, config.fact_top_k as usize, 1, rng).map_err(fact_err)?;
            Ok(drawn.pop())
        }
    }
}

impl SelectionStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SelectionStrategy::Auto => "auto",
            SelectionStrategy::Explicit => "exp",
        }
    }
}
