//! Blocking JSON-over-HTTP client for remote providers.

use std::thread;
use std::time::{Duration, Instant};

use cook_core::providers::{
    BlackBoxLlm, Completion, EmbeddingResponse, Embedder, FactScoreResponse, FactScorer, GenerationRequest,
    GenerationResponse, Generator, ProviderError, ProviderResult, RetrievalResponse, Retriever, Summarizer,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::wire;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const RETRY_PAUSE: Duration = Duration::from_millis(200);

/// One remote endpoint. Implements every capability trait; which routes the
/// server actually answers is its business.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    endpoint: String,
    base_url: String,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, base_url: &str, timeout: Option<Duration>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout.unwrap_or(DEFAULT_TIMEOUT)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { endpoint: endpoint.into(), base_url: base_url.trim_end_matches('/').to_string(), agent }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// POSTs `body` to `route`, retrying once on transport failure or rate
    /// limiting.
    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, route: &str, body: &Req) -> ProviderResult<Resp> {
        match self.call_once(route, body) {
            Err(e) if e.is_retryable() => {
                log::warn!("{e}; retrying once");
                thread::sleep(RETRY_PAUSE);
                self.call_once(route, body)
            }
            other => other,
        }
    }

    fn call_once<Req: Serialize, Resp: DeserializeOwned>(&self, route: &str, body: &Req) -> ProviderResult<Resp> {
        let url = format!("{}{}", self.base_url, route);
        log::debug!("POST {url}");
        let mut response = self.agent.post(&url).send_json(body).map_err(|e| self.transport(&e))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| self.transport(&e))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| ProviderError::protocol(&self.endpoint, format!("{route}: malformed response: {e}"))),
            429 => Err(ProviderError::RateLimited { endpoint: self.endpoint.clone() }),
            _ => {
                let message = match serde_json::from_str::<wire::ErrorBody>(&text) {
                    Ok(b) => b.error,
                    Err(_) => format!("no error body: {}", text.chars().take(200).collect::<String>()),
                };
                if (400..500).contains(&status) {
                    Err(ProviderError::invalid(&self.endpoint, format!("{route}: HTTP {status}: {message}")))
                } else {
                    Err(ProviderError::protocol(&self.endpoint, format!("{route}: HTTP {status}: {message}")))
                }
            }
        }
    }

    fn transport(&self, e: &ureq::Error) -> ProviderError {
        ProviderError::Transport { endpoint: self.endpoint.clone(), message: e.to_string() }
    }
}

impl Generator for HttpProvider {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn generate(&self, request: &GenerationRequest) -> ProviderResult<GenerationResponse> {
        let body = wire::GenerateRequest {
            prompt: request.prompt.clone(),
            n: request.n,
            temperature: request.temperature,
            max_new_tokens: request.max_new_tokens,
        };
        let resp: wire::GenerateResponse = self.call(wire::GENERATE, &body)?;
        Ok(GenerationResponse { texts: resp.texts })
    }
}

impl Embedder for HttpProvider {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn embed(&self, texts: &[String]) -> ProviderResult<EmbeddingResponse> {
        let resp: wire::EmbedResponse = self.call(wire::EMBED, &wire::EmbedRequest { texts: texts.to_vec() })?;
        Ok(EmbeddingResponse { vectors: resp.vectors })
    }
}

impl Summarizer for HttpProvider {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn summarize(&self, text: &str) -> ProviderResult<String> {
        let resp: wire::SummarizeResponse = self.call(wire::SUMMARIZE, &wire::SummarizeRequest { text: text.into() })?;
        Ok(resp.summary)
    }
}

impl FactScorer for HttpProvider {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn fact_score(&self, claim: &str, evidence: &str) -> ProviderResult<FactScoreResponse> {
        let body = wire::FactScoreRequest { claim: claim.into(), evidence: evidence.into() };
        let resp: wire::FactScoreResponse = self.call(wire::FACT_SCORE, &body)?;
        Ok(FactScoreResponse { score: resp.score })
    }
}

impl Retriever for HttpProvider {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn retrieve(&self, query: &str, k: usize) -> ProviderResult<RetrievalResponse> {
        let k = u32::try_from(k).map_err(|_| ProviderError::invalid(&self.endpoint, "k is too large"))?;
        let resp: wire::RetrieveResponse = self.call(wire::RETRIEVE, &wire::RetrieveRequest { query: query.into(), k })?;
        Ok(RetrievalResponse { documents: resp.documents.into_iter().map(Into::into).collect() })
    }
}

impl BlackBoxLlm for HttpProvider {
    fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn complete(&self, prompt: &str, stop: &[String]) -> ProviderResult<Completion> {
        let body = wire::CompleteRequest {
            prompt: prompt.into(),
            stop: if stop.is_empty() { None } else { Some(stop.to_vec()) },
        };
        let started = Instant::now();
        let resp: wire::CompleteResponse = self.call(wire::COMPLETE, &body)?;
        Ok(Completion { text: resp.text, latency: started.elapsed() })
    }
}
