//! Deterministic in-process providers.
//!
//! Every stub is a pure function of its request, so pipelines built on them
//! produce byte-identical transcripts across runs.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::providers::{
    BlackBoxLlm, Completion, EmbeddingResponse, Embedder, FactScoreResponse, FactScorer, GenerationRequest,
    GenerationResponse, Generator, ProviderError, ProviderResult, RetrievalResponse, RetrievedDocument, Retriever,
    Summarizer,
};
use crate::text::{sentences, word_tokens};

/// Stub names accepted in registry provider bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StubKind {
    Echo,
    BagOfChars,
    FirstSentence,
    TokenOverlap,
    Memory,
    Scripted,
}

impl StubKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Echo => "echo",
            Self::BagOfChars => "bag-of-chars",
            Self::FirstSentence => "first-sentence",
            Self::TokenOverlap => "token-overlap",
            Self::Memory => "memory",
            Self::Scripted => "scripted",
        }
    }
}

/// Generates `"{prompt}:gen{i}"` for `i in 0..n`.
#[derive(Debug, Clone)]
pub struct EchoGenerator {
    endpoint: String,
}

impl EchoGenerator {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into() }
    }
}

impl Generator for EchoGenerator {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn generate(&self, request: &GenerationRequest) -> ProviderResult<GenerationResponse> {
        let texts = (0..request.n).map(|i| format!("{}:gen{i}", request.prompt)).collect();
        Ok(GenerationResponse { texts })
    }
}

/// Dimension of [`BagOfCharsEmbedder`] vectors: `a`–`z` then `0`–`9`.
pub const BAG_OF_CHARS_DIM: usize = 36;

/// Counts ASCII letters (case-folded) and digits. Everything else is ignored,
/// so text without alphanumerics embeds to the zero vector.
#[derive(Debug, Clone)]
pub struct BagOfCharsEmbedder {
    endpoint: String,
}

impl BagOfCharsEmbedder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into() }
    }

    pub fn vector(text: &str) -> Vec<f64> {
        let mut v = alloc::vec![0.0; BAG_OF_CHARS_DIM];
        for b in text.bytes() {
            match b.to_ascii_lowercase() {
                c @ b'a'..=b'z' => v[(c - b'a') as usize] += 1.0,
                c @ b'0'..=b'9' => v[26 + (c - b'0') as usize] += 1.0,
                _ => {}
            }
        }
        v
    }
}

impl Embedder for BagOfCharsEmbedder {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn embed(&self, texts: &[String]) -> ProviderResult<EmbeddingResponse> {
        Ok(EmbeddingResponse { vectors: texts.iter().map(|t| Self::vector(t)).collect() })
    }
}

/// Keeps the first sentence.
#[derive(Debug, Clone)]
pub struct FirstSentenceSummarizer {
    endpoint: String,
}

impl FirstSentenceSummarizer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into() }
    }
}

impl Summarizer for FirstSentenceSummarizer {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn summarize(&self, text: &str) -> ProviderResult<String> {
        Ok(sentences(text).first().map(|s| s.to_string()).unwrap_or_default())
    }
}

/// Fraction of the claim's distinct word tokens that also occur in the evidence.
#[derive(Debug, Clone)]
pub struct TokenOverlapScorer {
    endpoint: String,
}

impl TokenOverlapScorer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into() }
    }

    pub fn overlap(claim: &str, evidence: &str) -> f64 {
        let claim: BTreeSet<String> = word_tokens(claim).into_iter().collect();
        if claim.is_empty() {
            return 0.0;
        }
        let evidence: BTreeSet<String> = word_tokens(evidence).into_iter().collect();
        let shared = claim.iter().filter(|t| evidence.contains(*t)).count();
        shared as f64 / claim.len() as f64
    }
}

impl FactScorer for TokenOverlapScorer {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn fact_score(&self, claim: &str, evidence: &str) -> ProviderResult<FactScoreResponse> {
        Ok(FactScoreResponse { score: Self::overlap(claim, evidence) })
    }
}

/// Ranks an in-memory corpus by the number of distinct word tokens shared
/// with the query. Documents sharing nothing are never returned; ties keep
/// corpus order.
#[derive(Debug, Clone)]
pub struct MemoryRetriever {
    endpoint: String,
    corpus: Vec<RetrievedDocument>,
}

impl MemoryRetriever {
    pub fn new(endpoint: impl Into<String>, corpus: Vec<RetrievedDocument>) -> Self {
        Self { endpoint: endpoint.into(), corpus }
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }
}

impl Retriever for MemoryRetriever {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn retrieve(&self, query: &str, k: usize) -> ProviderResult<RetrievalResponse> {
        let q: BTreeSet<String> = word_tokens(query).into_iter().collect();
        let mut scored: Vec<(usize, usize)> = self
            .corpus
            .iter()
            .enumerate()
            .filter_map(|(i, doc)| {
                let d: BTreeSet<String> = word_tokens(&doc.text).into_iter().collect();
                let shared = d.intersection(&q).count();
                (shared > 0).then_some((i, shared))
            })
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let documents = scored.into_iter().take(k).map(|(i, _)| self.corpus[i].clone()).collect();
        Ok(RetrievalResponse { documents })
    }
}

/// Conditions on a prompt. Every condition that is set must hold; an empty
/// matcher matches any prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMatcher {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excludes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ends_with: Option<String>,
}

impl PromptMatcher {
    pub fn exact(prompt: impl Into<String>) -> Self {
        Self { exact: Some(prompt.into()), ..Self::default() }
    }

    pub fn matches(&self, prompt: &str) -> bool {
        self.exact.as_deref().is_none_or(|e| e == prompt)
            && self.contains.iter().all(|c| prompt.contains(c.as_str()))
            && !self.excludes.iter().any(|c| prompt.contains(c.as_str()))
            && self.ends_with.as_deref().is_none_or(|e| prompt.ends_with(e))
    }
}

/// One scripted reply. Rules are tried in order and the first match wins.
/// Generators use `texts` (cycled to fill `n`) when present, else repeat
/// `response`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(flatten)]
    pub when: PromptMatcher,
    #[serde(default)]
    pub response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub texts: Vec<String>,
}

impl ScriptRule {
    pub fn new(when: PromptMatcher, response: impl Into<String>) -> Self {
        Self { when, response: response.into(), texts: Vec::new() }
    }
}

/// A prompt table. Serialized as `{"rules": [...], "default": "..."}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

impl Script {
    pub fn rule(mut self, when: PromptMatcher, response: impl Into<String>) -> Self {
        self.rules.push(ScriptRule::new(when, response));
        self
    }

    pub fn lookup(&self, prompt: &str) -> Option<&ScriptRule> {
        self.rules.iter().find(|r| r.when.matches(prompt))
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedLlm {
    endpoint: String,
    script: Script,
}

impl ScriptedLlm {
    pub fn new(endpoint: impl Into<String>, script: Script) -> Self {
        Self { endpoint: endpoint.into(), script }
    }

    /// Shorthand for a table of exact prompt → response pairs.
    pub fn from_pairs<'a>(endpoint: impl Into<String>, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let rules = pairs.into_iter().map(|(p, r)| ScriptRule::new(PromptMatcher::exact(p), r)).collect();
        Self::new(endpoint, Script { rules, default: None })
    }
}

impl BlackBoxLlm for ScriptedLlm {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn complete(&self, prompt: &str, _stop: &[String]) -> ProviderResult<Completion> {
        let text = match self.script.lookup(prompt) {
            Some(rule) => rule.response.clone(),
            None => match &self.script.default {
                Some(d) => d.clone(),
                None => {
                    return Err(ProviderError::NoScriptEntry {
                        endpoint: self.endpoint.clone(),
                        prompt: prompt.to_string(),
                    })
                }
            },
        };
        Ok(Completion { text, latency: Duration::ZERO })
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedGenerator {
    endpoint: String,
    script: Script,
}

impl ScriptedGenerator {
    pub fn new(endpoint: impl Into<String>, script: Script) -> Self {
        Self { endpoint: endpoint.into(), script }
    }
}

impl Generator for ScriptedGenerator {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn generate(&self, request: &GenerationRequest) -> ProviderResult<GenerationResponse> {
        let n = request.n as usize;
        let texts = match self.script.lookup(&request.prompt) {
            Some(rule) if !rule.texts.is_empty() => rule.texts.iter().cycle().take(n).cloned().collect(),
            Some(rule) => alloc::vec![rule.response.clone(); n],
            None => match &self.script.default {
                Some(d) => alloc::vec![d.clone(); n],
                None => {
                    return Err(ProviderError::NoScriptEntry {
                        endpoint: self.endpoint.clone(),
                        prompt: request.prompt.clone(),
                    })
                }
            },
        };
        Ok(GenerationResponse { texts })
    }
}
