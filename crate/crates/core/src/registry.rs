//! Knowledge cards, pipeline hyperparameters and provider bindings.
//!
//! A [`Registry`] is only ever constructed through validation, so every
//! engine can rely on its invariants. Card order is significant: it fixes
//! tie-breaking in every filter and the order sources are listed in prompts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::stubs::StubKind;

/// Output budget used when a card does not set `max_new_tokens`.
pub const DEFAULT_MAX_NEW_TOKENS: u32 = 128;

/// Endpoint ids with a fixed role. Cards reference any other endpoint id.
pub mod roles {
    pub const LLM: &str = "llm";
    pub const EMBEDDER: &str = "embedder";
    pub const SUMMARIZER: &str = "summarizer";
    pub const FACT_SCORER: &str = "fact_scorer";
    /// Optional; falls back to [`FACT_SCORER`].
    pub const SUMMARY_FACT_SCORER: &str = "summary_fact_scorer";
    pub const RETRIEVER: &str = "retriever";

    pub const REQUIRED: [&str; 5] = [LLM, EMBEDDER, SUMMARIZER, FACT_SCORER, RETRIEVER];
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl RegistryError {
    fn at(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation { field: field.into(), message: message.into() }
    }

    pub fn field(&self) -> &str {
        match self {
            Self::Validation { field, .. } => field,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeCard {
    pub id: String,
    /// Natural-language domain label, listed verbatim to the LLM.
    pub description: String,
    /// Endpoint id in the registry's `providers` map.
    pub provider: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_documents: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_new_tokens: Option<u32>,
}

/// Generation parameters for one card after falling back to pipeline values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub num_documents: u32,
    pub temperature: f64,
    pub max_new_tokens: u32,
}

impl KnowledgeCard {
    pub fn new(id: impl Into<String>, description: impl Into<String>, provider: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            provider: provider.into(),
            num_documents: None,
            temperature: None,
            max_new_tokens: None,
        }
    }

    pub fn gen_params(&self, config: &PipelineConfig) -> GenParams {
        GenParams {
            num_documents: self.num_documents.unwrap_or(config.n1),
            temperature: self.temperature.unwrap_or(config.temperature),
            max_new_tokens: self.max_new_tokens.unwrap_or(DEFAULT_MAX_NEW_TOKENS),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterToggles {
    pub relevance: bool,
    pub pruning: bool,
    pub factuality: bool,
}

impl Default for FilterToggles {
    fn default() -> Self {
        Self { relevance: true, pruning: true, factuality: true }
    }
}

impl FilterToggles {
    pub fn all_enabled(&self) -> bool {
        self.relevance && self.pruning && self.factuality
    }

    pub fn none() -> Self {
        Self { relevance: false, pruning: false, factuality: false }
    }
}

/// How the top-down engine picks one document from a card's generations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopDownSelection {
    /// Highest aggregate factuality score, ties by generation order.
    #[default]
    Argmax,
    /// One draw from top-k factuality sampling.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPipelineConfig")]
pub struct PipelineConfig {
    /// Documents generated per card.
    pub n1: u32,
    /// Documents kept by the relevance filter.
    pub n2: u32,
    /// Documents kept by the factuality filter.
    pub n3: u32,
    /// Size of the candidate set for factuality sampling; must exceed `n3`.
    pub fact_top_k: u32,
    /// Evidence documents fetched per fact check.
    pub retrieval_k: u32,
    /// Knowledge requests allowed in one top-down query.
    pub max_iterations: u32,
    pub temperature: f64,
    pub rng_seed: u64,
    pub filters: FilterToggles,
    pub top_down_selection: TopDownSelection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        RawPipelineConfig::default().into()
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPipelineConfig {
    n1: u32,
    n2: u32,
    n3: u32,
    fact_top_k: Option<u32>,
    retrieval_k: u32,
    max_iterations: u32,
    temperature: f64,
    rng_seed: u64,
    filters: FilterToggles,
    top_down_selection: TopDownSelection,
}

impl Default for RawPipelineConfig {
    fn default() -> Self {
        Self {
            n1: 3,
            n2: 5,
            n3: 3,
            fact_top_k: None,
            retrieval_k: 5,
            max_iterations: 1,
            temperature: 0.1,
            rng_seed: 0,
            filters: FilterToggles::default(),
            top_down_selection: TopDownSelection::Argmax,
        }
    }
}

impl From<RawPipelineConfig> for PipelineConfig {
    fn from(raw: RawPipelineConfig) -> Self {
        Self {
            n1: raw.n1,
            n2: raw.n2,
            n3: raw.n3,
            fact_top_k: raw.fact_top_k.unwrap_or(raw.n3.saturating_add(1)),
            retrieval_k: raw.retrieval_k,
            max_iterations: raw.max_iterations,
            temperature: raw.temperature,
            rng_seed: raw.rng_seed,
            filters: raw.filters,
            top_down_selection: raw.top_down_selection,
        }
    }
}

impl PipelineConfig {
    fn validate(&self, n_cards: usize) -> Result<(), RegistryError> {
        for (name, v) in [("n1", self.n1), ("n2", self.n2), ("n3", self.n3), ("retrieval_k", self.retrieval_k)] {
            if v == 0 {
                return Err(RegistryError::at(format!("pipeline.{name}"), format!("{name} must be at least 1")));
            }
        }
        if self.fact_top_k <= self.n3 {
            return Err(RegistryError::at("pipeline.fact_top_k", "fact_top_k must exceed n3"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(RegistryError::at("pipeline.temperature", "temperature must be a nonnegative number"));
        }
        if self.filters.all_enabled() {
            if self.n3 > self.n2 {
                return Err(RegistryError::at("pipeline.n3", "n3 must not exceed n2"));
            }
            let generated = n_cards as u64 * u64::from(self.n1);
            if n_cards > 0 && u64::from(self.n2) > generated {
                return Err(RegistryError::at(
                    "pipeline.n2",
                    format!("n2 must not exceed the {generated} documents generated per query (cards x n1)"),
                ));
            }
        }
        Ok(())
    }
}

/// Where an endpoint id is served from: a remote URL or an in-core stub.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderBinding {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stub: Option<StubKind>,
    /// Script file for `scripted` stubs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    /// Line-delimited `{text, source_id}` file for `memory` stubs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
}

impl ProviderBinding {
    pub fn remote(url: impl Into<String>) -> Self {
        Self { url: Some(url.into()), ..Self::default() }
    }

    pub fn stub(kind: StubKind) -> Self {
        Self { stub: Some(kind), ..Self::default() }
    }

    fn validate(&self, id: &str) -> Result<(), RegistryError> {
        let field = format!("providers.{id}");
        match (&self.url, &self.stub) {
            (Some(_), Some(_)) => return Err(RegistryError::at(field, "set either `url` or `stub`, not both")),
            (None, None) => return Err(RegistryError::at(field, "one of `url` or `stub` is required")),
            (Some(url), None) => {
                if !(url.starts_with("http://") || url.starts_with("https://")) {
                    return Err(RegistryError::at(format!("{field}.url"), "url must start with http:// or https://"));
                }
                if self.script.is_some() || self.corpus.is_some() {
                    return Err(RegistryError::at(field, "`script` and `corpus` only apply to stubs"));
                }
            }
            (None, Some(kind)) => {
                if self.script.is_some() && *kind != StubKind::Scripted {
                    return Err(RegistryError::at(format!("{field}.script"), "`script` only applies to the scripted stub"));
                }
                if self.corpus.is_some() && *kind != StubKind::Memory {
                    return Err(RegistryError::at(format!("{field}.corpus"), "`corpus` only applies to the memory stub"));
                }
                if self.timeout_secs.is_some() {
                    return Err(RegistryError::at(format!("{field}.timeout_secs"), "stubs have no timeout"));
                }
            }
        }
        if let Some(t) = self.timeout_secs {
            if !(t > 0.0 && t.is_finite()) {
                return Err(RegistryError::at(format!("{field}.timeout_secs"), "timeout must be positive"));
            }
        }
        Ok(())
    }
}

/// The on-disk registry shape, before validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryDocument {
    #[serde(default)]
    pub cards: Vec<KnowledgeCard>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub providers: BTreeMap<String, ProviderBinding>,
}

/// A validated registry. Immutable; overrides produce a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    doc: RegistryDocument,
}

impl Registry {
    pub fn new(doc: RegistryDocument) -> Result<Self, RegistryError> {
        let mut seen = BTreeSet::new();
        for (i, card) in doc.cards.iter().enumerate() {
            let field = |name: &str| format!("cards[{i}].{name}");
            if card.id.trim().is_empty() {
                return Err(RegistryError::at(field("id"), "card id must be non-empty"));
            }
            if !seen.insert(card.id.as_str()) {
                return Err(RegistryError::at(field("id"), format!("duplicate card id \"{}\"", card.id)));
            }
            if card.description.trim().is_empty() {
                return Err(RegistryError::at(field("description"), format!("card \"{}\" has an empty description", card.id)));
            }
            if !doc.providers.contains_key(&card.provider) {
                return Err(RegistryError::at(
                    field("provider"),
                    format!("card \"{}\" references unknown provider \"{}\"", card.id, card.provider),
                ));
            }
            if card.num_documents == Some(0) {
                return Err(RegistryError::at(field("num_documents"), "num_documents must be at least 1"));
            }
            if card.max_new_tokens == Some(0) {
                return Err(RegistryError::at(field("max_new_tokens"), "max_new_tokens must be at least 1"));
            }
            if let Some(t) = card.temperature {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(RegistryError::at(field("temperature"), "temperature must be a nonnegative number"));
                }
            }
        }
        for (id, binding) in &doc.providers {
            if id.trim().is_empty() {
                return Err(RegistryError::at("providers", "endpoint ids must be non-empty"));
            }
            binding.validate(id)?;
        }
        doc.pipeline.validate(doc.cards.len())?;
        Ok(Self { doc })
    }

    pub fn cards(&self) -> &[KnowledgeCard] {
        &self.doc.cards
    }

    pub fn card(&self, id: &str) -> Option<&KnowledgeCard> {
        self.doc.cards.iter().find(|c| c.id == id)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.doc.pipeline
    }

    pub fn providers(&self) -> &BTreeMap<String, ProviderBinding> {
        &self.doc.providers
    }

    pub fn document(&self) -> &RegistryDocument {
        &self.doc
    }

    /// Same cards and providers under a different pipeline configuration.
    pub fn with_config(&self, config: PipelineConfig) -> Result<Self, RegistryError> {
        let mut doc = self.doc.clone();
        doc.pipeline = config;
        Self::new(doc)
    }

    /// `(id, description)` pairs in registration order.
    pub fn list_card_descriptions(&self) -> Vec<(String, String)> {
        self.doc.cards.iter().map(|c| (c.id.clone(), c.description.clone())).collect()
    }

    /// Endpoint id serving `role`, honoring the summary-scorer fallback.
    pub fn role_endpoint(&self, role: &str) -> Option<&str> {
        let role = if role == roles::SUMMARY_FACT_SCORER && !self.doc.providers.contains_key(role) {
            roles::FACT_SCORER
        } else {
            role
        };
        self.doc.providers.get_key_value(role).map(|(k, _)| k.as_str())
    }

    pub fn missing_roles(&self) -> Vec<String> {
        roles::REQUIRED
            .iter()
            .filter(|r| !self.doc.providers.contains_key(**r))
            .map(|r| r.to_string())
            .collect()
    }
}
