//! Transcript files: one JSON object per LLM turn.

use std::fmt::Write as _;

use cook_core::providers::LlmTurn;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRecord {
    /// Dataset record id, for eval transcripts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<String>,
    pub turn: usize,
    pub prompt: String,
    pub response: String,
    pub provider_id: String,
    pub latency_ms: u64,
}

pub fn turn_records(record: Option<&str>, turns: &[LlmTurn]) -> Vec<TurnRecord> {
    turns
        .iter()
        .enumerate()
        .map(|(i, t)| TurnRecord {
            record: record.map(String::from),
            turn: i + 1,
            prompt: t.prompt.clone(),
            response: t.response.clone(),
            provider_id: t.provider_id.clone(),
            latency_ms: t.latency.as_millis() as u64,
        })
        .collect()
}

/// Plain-text rendering: each prompt and response under a header line.
/// Latency is left out so the rendering is reproducible.
pub fn render(turns: &[TurnRecord]) -> String {
    let mut out = String::new();
    for t in turns {
        let who = match &t.record {
            Some(r) => format!("record {r}, turn {}", t.turn),
            None => format!("turn {}", t.turn),
        };
        let _ = writeln!(out, "=== {who} [{}] prompt ===", t.provider_id);
        let _ = writeln!(out, "{}", t.prompt);
        let _ = writeln!(out, "=== {who} [{}] response ===", t.provider_id);
        let _ = writeln!(out, "{}", t.response);
    }
    out
}
