//! Orchestration core for augmenting a black-box LLM with modular knowledge cards.
//!
//! A *knowledge card* is a small specialized language model that generates
//! background documents for a query. This crate holds everything that is pure
//! computation over those documents and the black-box LLM's text turns:
//!
//! - [`registry`]: validated cards, pipeline hyperparameters, provider bindings.
//! - [`providers`]: the capability traits (generate, embed, summarize, fact-score,
//!   retrieve, complete), their request/response types and invariant checks.
//! - [`stubs`]: deterministic in-process providers for model-free runs.
//! - [`filters`]: relevance, pruning and factuality filters, plus top-k
//!   factuality sampling.
//! - [`integration`]: the bottom-up and top-down prompt state machines.
//! - [`evaluation`]: answer metrics, per-record scoring and report aggregation.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, HTTP transport,
//! concurrency and the CLI live in the `cook` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod evaluation;
pub mod filters;
pub mod integration;
pub mod providers;
pub mod registry;
pub mod stubs;
pub mod text;

pub use evaluation::{EvalRecord, EvalReport, RecordOutcome};
pub use filters::KnowledgeDocument;
pub use integration::{Engine, IntegrationResult, PipelineError, QueryTask};
pub use providers::{ProviderError, Providers};
pub use registry::{KnowledgeCard, PipelineConfig, Registry, RegistryError};
