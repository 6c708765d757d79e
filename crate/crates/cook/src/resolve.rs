//! Turns registry provider bindings into provider objects.
//!
//! Relative `script` and `corpus` paths are resolved against the directory
//! holding the registry file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use cook_core::providers::{BlackBoxLlm, Embedder, FactScorer, Generator, RetrievedDocument, Retriever, Summarizer};
use cook_core::registry::{roles, ProviderBinding};
use cook_core::stubs::{
    BagOfCharsEmbedder, EchoGenerator, FirstSentenceSummarizer, MemoryRetriever, Script, ScriptedGenerator, ScriptedLlm,
    StubKind, TokenOverlapScorer,
};
use cook_core::{Providers, Registry};

use crate::fanout::ThreadedFanOut;
use crate::http::HttpProvider;
use crate::jsonl;

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("registry has no provider for required role `{0}`")]
    MissingRole(String),
    #[error("endpoint `{endpoint}` is a `{stub}` stub, which cannot serve as {role}")]
    WrongStub { endpoint: String, stub: &'static str, role: String },
    #[error("cannot read {what} for endpoint `{endpoint}` from {}: {message}", path.display())]
    File { endpoint: String, what: &'static str, path: PathBuf, message: String },
}

/// The roles an endpoint plays in a registry, for probing and error messages.
pub fn endpoint_roles(registry: &Registry) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for role in roles::REQUIRED.into_iter().chain([roles::SUMMARY_FACT_SCORER]) {
        if registry.providers().contains_key(role) {
            out.entry(role.to_string()).or_default().push(role.to_string());
        }
    }
    for card in registry.cards() {
        out.entry(card.provider.clone()).or_default().push(format!("generator:{}", card.id));
    }
    out
}

/// Builds every provider the registry names. `jobs` caps the bottom-up
/// generation fan-out.
pub fn build_providers(registry: &Registry, base_dir: &Path, jobs: usize) -> Result<Providers, ResolveError> {
    if let Some(role) = registry.missing_roles().into_iter().next() {
        return Err(ResolveError::MissingRole(role));
    }
    let r = Resolver { registry, base_dir };
    let llm = r.llm(roles::LLM)?;
    let summary_role = registry.role_endpoint(roles::SUMMARY_FACT_SCORER).unwrap_or(roles::FACT_SCORER);
    let mut builder = Providers::builder(llm)
        .embedder(r.embedder(roles::EMBEDDER)?)
        .summarizer(r.summarizer(roles::SUMMARIZER)?)
        .fact_checker(r.fact_scorer(roles::FACT_SCORER)?)
        .summary_scorer(r.fact_scorer(summary_role)?)
        .retriever(r.retriever(roles::RETRIEVER)?)
        .fan_out(Arc::new(ThreadedFanOut::new(jobs)));
    let mut seen = std::collections::BTreeSet::new();
    for card in registry.cards() {
        if seen.insert(card.provider.as_str()) {
            builder = builder.generator(card.provider.clone(), r.generator(&card.provider, &card.id)?);
        }
    }
    Ok(builder.build())
}

struct Resolver<'a> {
    registry: &'a Registry,
    base_dir: &'a Path,
}

impl Resolver<'_> {
    fn binding(&self, endpoint: &str) -> &ProviderBinding {
        // registry validation guarantees every referenced endpoint exists
        &self.registry.providers()[endpoint]
    }

    fn remote(&self, endpoint: &str) -> Option<Arc<HttpProvider>> {
        let b = self.binding(endpoint);
        b.url.as_deref().map(|url| Arc::new(HttpProvider::new(endpoint, url, b.timeout_secs.map(Duration::from_secs_f64))))
    }

    fn stub(&self, endpoint: &str) -> StubKind {
        self.binding(endpoint).stub.expect("a binding without url is a stub")
    }

    fn wrong(&self, endpoint: &str, role: impl Into<String>) -> ResolveError {
        ResolveError::WrongStub { endpoint: endpoint.into(), stub: self.stub(endpoint).name(), role: role.into() }
    }

    fn script(&self, endpoint: &str) -> Result<Script, ResolveError> {
        let Some(rel) = &self.binding(endpoint).script else {
            return Ok(Script::default());
        };
        let path = self.base_dir.join(rel);
        let file_err = |message: String| ResolveError::File { endpoint: endpoint.into(), what: "script", path: path.clone(), message };
        let text = fs::read_to_string(&path).map_err(|e| file_err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))
    }

    fn llm(&self, endpoint: &str) -> Result<Arc<dyn BlackBoxLlm>, ResolveError> {
        if let Some(h) = self.remote(endpoint) {
            return Ok(h);
        }
        match self.stub(endpoint) {
            StubKind::Scripted => Ok(Arc::new(ScriptedLlm::new(endpoint, self.script(endpoint)?))),
            _ => Err(self.wrong(endpoint, "the llm")),
        }
    }

    fn generator(&self, endpoint: &str, card: &str) -> Result<Arc<dyn Generator>, ResolveError> {
        if let Some(h) = self.remote(endpoint) {
            return Ok(h);
        }
        match self.stub(endpoint) {
            StubKind::Echo => Ok(Arc::new(EchoGenerator::new(endpoint))),
            StubKind::Scripted => Ok(Arc::new(ScriptedGenerator::new(endpoint, self.script(endpoint)?))),
            _ => Err(self.wrong(endpoint, format!("a generator (card `{card}`)"))),
        }
    }

    fn embedder(&self, endpoint: &str) -> Result<Arc<dyn Embedder>, ResolveError> {
        if let Some(h) = self.remote(endpoint) {
            return Ok(h);
        }
        match self.stub(endpoint) {
            StubKind::BagOfChars => Ok(Arc::new(BagOfCharsEmbedder::new(endpoint))),
            _ => Err(self.wrong(endpoint, "an embedder")),
        }
    }

    fn summarizer(&self, endpoint: &str) -> Result<Arc<dyn Summarizer>, ResolveError> {
        if let Some(h) = self.remote(endpoint) {
            return Ok(h);
        }
        match self.stub(endpoint) {
            StubKind::FirstSentence => Ok(Arc::new(FirstSentenceSummarizer::new(endpoint))),
            _ => Err(self.wrong(endpoint, "a summarizer")),
        }
    }

    fn fact_scorer(&self, endpoint: &str) -> Result<Arc<dyn FactScorer>, ResolveError> {
        if let Some(h) = self.remote(endpoint) {
            return Ok(h);
        }
        match self.stub(endpoint) {
            StubKind::TokenOverlap => Ok(Arc::new(TokenOverlapScorer::new(endpoint))),
            _ => Err(self.wrong(endpoint, "a fact scorer")),
        }
    }

    fn retriever(&self, endpoint: &str) -> Result<Arc<dyn Retriever>, ResolveError> {
        if let Some(h) = self.remote(endpoint) {
            return Ok(h);
        }
        if self.stub(endpoint) != StubKind::Memory {
            return Err(self.wrong(endpoint, "a retriever"));
        }
        let corpus = match &self.binding(endpoint).corpus {
            None => Vec::new(),
            Some(rel) => {
                let path = self.base_dir.join(rel);
                jsonl::read_jsonl::<RetrievedDocument>(&path).map_err(|e| ResolveError::File {
                    endpoint: endpoint.into(),
                    what: "corpus",
                    path: path.clone(),
                    message: e.to_string(),
                })?
            }
        };
        Ok(Arc::new(MemoryRetriever::new(endpoint, corpus)))
    }
}
