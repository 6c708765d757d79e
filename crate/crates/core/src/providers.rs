//! Capability traits for every external model role, plus the checked
//! operations the rest of the crate calls through.
//!
//! Implementations (HTTP clients, stubs, test doubles) only implement the raw
//! trait methods. The free functions in this module ([`generate`], [`embed`],
//! [`summarize`], [`fact_score`], [`retrieve`], [`llm_complete`]) enforce the
//! request preconditions and response invariants, so no malformed value gets
//! past this boundary.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::stubs;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error at endpoint `{endpoint}`: {message}")]
    Transport { endpoint: String, message: String },
    #[error("protocol error at endpoint `{endpoint}`: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("endpoint `{endpoint}` is rate limiting requests")]
    RateLimited { endpoint: String },
    #[error("invalid request for endpoint `{endpoint}`: {message}")]
    InvalidRequest { endpoint: String, message: String },
    #[error("no script entry at endpoint `{endpoint}` for prompt {prompt:?}")]
    NoScriptEntry { endpoint: String, prompt: String },
}

impl ProviderError {
    pub fn endpoint(&self) -> &str {
        match self {
            Self::Transport { endpoint, .. }
            | Self::Protocol { endpoint, .. }
            | Self::RateLimited { endpoint }
            | Self::InvalidRequest { endpoint, .. }
            | Self::NoScriptEntry { endpoint, .. } => endpoint,
        }
    }

    /// Transport failures and rate limiting may succeed on a second attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::Transport { .. } | Self::RateLimited { .. })
    }

    pub fn protocol(endpoint: &str, message: impl Into<String>) -> Self {
        Self::Protocol { endpoint: endpoint.to_string(), message: message.into() }
    }

    pub fn invalid(endpoint: &str, message: impl Into<String>) -> Self {
        Self::InvalidRequest { endpoint: endpoint.to_string(), message: message.into() }
    }
}

pub type ProviderResult<T> = Result<T, ProviderError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub n: u32,
    pub temperature: f64,
    pub max_new_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactScoreResponse {
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedDocument {
    pub text: String,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalResponse {
    pub documents: Vec<RetrievedDocument>,
}

/// Raw reply from the black-box LLM. `latency` is whatever the backend
/// measured; stubs report zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub latency: Duration,
}

/// One prompt/response exchange with the black-box LLM.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmTurn {
    pub prompt: String,
    pub response: String,
    pub latency: Duration,
    pub provider_id: String,
}

pub trait Generator: Send + Sync {
    fn endpoint(&self) -> &str;
    fn generate(&self, request: &GenerationRequest) -> ProviderResult<GenerationResponse>;
}

pub trait Embedder: Send + Sync {
    fn endpoint(&self) -> &str;
    fn embed(&self, texts: &[String]) -> ProviderResult<EmbeddingResponse>;
}

pub trait Summarizer: Send + Sync {
    fn endpoint(&self) -> &str;
    fn summarize(&self, text: &str) -> ProviderResult<String>;
}

pub trait FactScorer: Send + Sync {
    fn endpoint(&self) -> &str;
    fn fact_score(&self, claim: &str, evidence: &str) -> ProviderResult<FactScoreResponse>;
}

pub trait Retriever: Send + Sync {
    fn endpoint(&self) -> &str;
    fn retrieve(&self, query: &str, k: usize) -> ProviderResult<RetrievalResponse>;
}

pub trait BlackBoxLlm: Send + Sync {
    fn endpoint(&self) -> &str;
    fn complete(&self, prompt: &str, stop: &[String]) -> ProviderResult<Completion>;
}

/// Runs a batch of generation calls and returns results in call order.
pub trait FanOut: Send + Sync {
    fn generate_all(
        &self,
        calls: Vec<(Arc<dyn Generator>, GenerationRequest)>,
    ) -> Vec<ProviderResult<GenerationResponse>>;
}

/// Runs generation calls one after another.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sequential;

impl FanOut for Sequential {
    fn generate_all(
        &self,
        calls: Vec<(Arc<dyn Generator>, GenerationRequest)>,
    ) -> Vec<ProviderResult<GenerationResponse>> {
        calls.into_iter().map(|(g, req)| generate(g.as_ref(), &req)).collect()
    }
}

pub fn generate(provider: &dyn Generator, request: &GenerationRequest) -> ProviderResult<GenerationResponse> {
    let endpoint = provider.endpoint();
    if request.n == 0 {
        return Err(ProviderError::invalid(endpoint, "n must be at least 1"));
    }
    if request.max_new_tokens == 0 {
        return Err(ProviderError::invalid(endpoint, "max_new_tokens must be at least 1"));
    }
    if !(request.temperature >= 0.0 && request.temperature.is_finite()) {
        return Err(ProviderError::invalid(endpoint, "temperature must be a nonnegative number"));
    }
    let response = provider.generate(request)?;
    if response.texts.len() != request.n as usize {
        return Err(ProviderError::protocol(
            endpoint,
            alloc::format!("expected {} texts, got {}", request.n, response.texts.len()),
        ));
    }
    Ok(response)
}

pub fn embed(provider: &dyn Embedder, texts: &[String]) -> ProviderResult<EmbeddingResponse> {
    let endpoint = provider.endpoint();
    if texts.is_empty() {
        return Err(ProviderError::invalid(endpoint, "texts must be non-empty"));
    }
    let response = provider.embed(texts)?;
    if response.vectors.len() != texts.len() {
        return Err(ProviderError::protocol(
            endpoint,
            alloc::format!("expected {} vectors, got {}", texts.len(), response.vectors.len()),
        ));
    }
    let dim = response.vectors[0].len();
    if dim == 0 {
        return Err(ProviderError::protocol(endpoint, "embedding dimension must be at least 1"));
    }
    for v in &response.vectors {
        if v.len() != dim {
            return Err(ProviderError::protocol(endpoint, "embedding vectors differ in dimension"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::protocol(endpoint, "embedding contains a non-finite value"));
        }
    }
    Ok(response)
}

pub fn summarize(provider: &dyn Summarizer, text: &str) -> ProviderResult<String> {
    if text.trim().is_empty() {
        return Err(ProviderError::invalid(provider.endpoint(), "text must be non-empty"));
    }
    provider.summarize(text)
}

pub fn fact_score(provider: &dyn FactScorer, claim: &str, evidence: &str) -> ProviderResult<FactScoreResponse> {
    let endpoint = provider.endpoint();
    if claim.trim().is_empty() {
        return Err(ProviderError::invalid(endpoint, "claim must be non-empty"));
    }
    let response = provider.fact_score(claim, evidence)?;
    if !(0.0..=1.0).contains(&response.score) {
        return Err(ProviderError::protocol(
            endpoint,
            alloc::format!("score {} outside [0, 1]", response.score),
        ));
    }
    Ok(response)
}

pub fn retrieve(provider: &dyn Retriever, query: &str, k: usize) -> ProviderResult<RetrievalResponse> {
    let endpoint = provider.endpoint();
    if k == 0 {
        return Err(ProviderError::invalid(endpoint, "k must be at least 1"));
    }
    let response = provider.retrieve(query, k)?;
    if response.documents.len() > k {
        return Err(ProviderError::protocol(
            endpoint,
            alloc::format!("asked for at most {k} documents, got {}", response.documents.len()),
        ));
    }
    Ok(response)
}

/// Sends `prompt` to the black-box LLM and appends the exchange to `transcript`.
pub fn llm_complete(
    provider: &dyn BlackBoxLlm,
    prompt: &str,
    stop: &[String],
    transcript: &mut Vec<LlmTurn>,
) -> ProviderResult<String> {
    if prompt.is_empty() {
        return Err(ProviderError::invalid(provider.endpoint(), "prompt must be non-empty"));
    }
    let completion = provider.complete(prompt, stop)?;
    transcript.push(LlmTurn {
        prompt: prompt.to_string(),
        response: completion.text.clone(),
        latency: completion.latency,
        provider_id: provider.endpoint().to_string(),
    });
    Ok(completion.text)
}

/// The full set of providers one query pipeline talks to.
///
/// Card generators are looked up by the card's provider reference. The two
/// fact-scoring roles may be backed by the same endpoint.
#[derive(Clone)]
pub struct Providers {
    generators: BTreeMap<String, Arc<dyn Generator>>,
    pub embedder: Arc<dyn Embedder>,
    pub summarizer: Arc<dyn Summarizer>,
    pub summary_scorer: Arc<dyn FactScorer>,
    pub fact_checker: Arc<dyn FactScorer>,
    pub retriever: Arc<dyn Retriever>,
    pub llm: Arc<dyn BlackBoxLlm>,
    pub fan_out: Arc<dyn FanOut>,
}

impl Providers {
    /// Starts from the in-core stubs for every auxiliary role: bag-of-chars
    /// embedder, first-sentence summarizer, token-overlap scorers and an
    /// empty in-memory retriever.
    pub fn builder(llm: Arc<dyn BlackBoxLlm>) -> ProvidersBuilder {
        ProvidersBuilder {
            providers: Providers {
                generators: BTreeMap::new(),
                embedder: Arc::new(stubs::BagOfCharsEmbedder::new("embedder")),
                summarizer: Arc::new(stubs::FirstSentenceSummarizer::new("summarizer")),
                summary_scorer: Arc::new(stubs::TokenOverlapScorer::new("fact_scorer")),
                fact_checker: Arc::new(stubs::TokenOverlapScorer::new("fact_scorer")),
                retriever: Arc::new(stubs::MemoryRetriever::new("retriever", Vec::new())),
                llm,
                fan_out: Arc::new(Sequential),
            },
        }
    }

    pub fn generator(&self, endpoint: &str) -> ProviderResult<Arc<dyn Generator>> {
        self.generators.get(endpoint).cloned().ok_or_else(|| ProviderError::InvalidRequest {
            endpoint: endpoint.to_string(),
            message: "no generator bound to this endpoint".to_string(),
        })
    }

    pub fn generator_endpoints(&self) -> impl Iterator<Item = &str> {
        self.generators.keys().map(String::as_str)
    }
}

pub struct ProvidersBuilder {
    providers: Providers,
}

impl ProvidersBuilder {
    pub fn generator(mut self, endpoint: impl Into<String>, generator: Arc<dyn Generator>) -> Self {
        self.providers.generators.insert(endpoint.into(), generator);
        self
    }

    pub fn embedder(mut self, embedder: Arc<dyn Embedder>) -> Self {
        self.providers.embedder = embedder;
        self
    }

    pub fn summarizer(mut self, summarizer: Arc<dyn Summarizer>) -> Self {
        self.providers.summarizer = summarizer;
        self
    }

    pub fn summary_scorer(mut self, scorer: Arc<dyn FactScorer>) -> Self {
        self.providers.summary_scorer = scorer;
        self
    }

    pub fn fact_checker(mut self, scorer: Arc<dyn FactScorer>) -> Self {
        self.providers.fact_checker = scorer;
        self
    }

    pub fn retriever(mut self, retriever: Arc<dyn Retriever>) -> Self {
        self.providers.retriever = retriever;
        self
    }

    pub fn fan_out(mut self, fan_out: Arc<dyn FanOut>) -> Self {
        self.providers.fan_out = fan_out;
        self
    }

    pub fn build(self) -> Providers {
        self.providers
    }
}

impl core::fmt::Debug for Providers {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Providers")
            .field("generators", &self.generators.keys().collect::<Vec<_>>())
            .field("embedder", &self.embedder.endpoint())
            .field("summarizer", &self.summarizer.endpoint())
            .field("summary_scorer", &self.summary_scorer.endpoint())
            .field("fact_checker", &self.fact_checker.endpoint())
            .field("retriever", &self.retriever.endpoint())
            .field("llm", &self.llm.endpoint())
            .finish()
    }
}

type GenerateFn = dyn Fn(&GenerationRequest) -> ProviderResult<GenerationResponse> + Send + Sync;

/// Boxed closure adapter, handy for one-off generators in tests and tools.
pub struct FnGenerator {
    endpoint: String,
    f: Box<GenerateFn>,
}

impl FnGenerator {
    pub fn new(
        endpoint: impl Into<String>,
        f: impl Fn(&GenerationRequest) -> ProviderResult<GenerationResponse> + Send + Sync + 'static,
    ) -> Self {
        Self { endpoint: endpoint.into(), f: Box::new(f) }
    }
}

impl Generator for FnGenerator {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn generate(&self, request: &GenerationRequest) -> ProviderResult<GenerationResponse> {
        (self.f)(request)
    }
}
