//! Prompt layout and response parsing.
//!
//! Prompts are ordered segments joined by single newlines. A knowledge block
//! is one line: `Knowledge: ` followed by its documents separated by single
//! spaces.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AnswerFormat, QueryTask};
use crate::text::collapse_whitespace;

pub const KNOWLEDGE_PREFIX: &str = "Knowledge: ";
pub const QUESTION_PREFIX: &str = "Question: ";
pub const ANSWER_CUE: &str = "Answer:";
pub const NEED_MORE_INFO: &str = "Do you need more information? (Yes or No)";
pub const WHAT_KIND: &str = "What kind of information do you need?";
pub const CHOOSE_SOURCE: &str = "Choose an information source from the following:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Knowledge(Vec<String>),
}

impl Segment {
    pub fn text(s: impl Into<String>) -> Self {
        Self::Text(s.into())
    }
}

/// Joins segments with `\n`. Empty text segments and empty knowledge blocks
/// are dropped, every segment is trimmed, and knowledge documents are
/// flattened to one line each.
pub fn assemble_prompt(parts: &[Segment]) -> String {
    let mut lines: Vec<String> = Vec::with_capacity(parts.len());
    for part in parts {
        match part {
            Segment::Text(t) => {
                let t = t.trim();
                if !t.is_empty() {
                    lines.push(t.to_string());
                }
            }
            Segment::Knowledge(docs) => {
                let docs: Vec<String> = docs.iter().map(|d| collapse_whitespace(d)).filter(|d| !d.is_empty()).collect();
                if !docs.is_empty() {
                    lines.push(format!("{KNOWLEDGE_PREFIX}{}", docs.join(" ")));
                }
            }
        }
    }
    lines.join("\n")
}

/// `A`, `B`, ... for each choice.
pub fn choice_letters(n: usize) -> impl Iterator<Item = char> {
    (b'A'..=b'Z').take(n).map(char::from)
}

/// The question line plus, for multiple choice, a line like `A. x B. y`.
pub fn question_segments(task: &QueryTask) -> Vec<Segment> {
    let mut out = alloc::vec![Segment::Text(format!("{QUESTION_PREFIX}{}", task.question.trim()))];
    if let AnswerFormat::MultipleChoice(choices) = &task.answer_format {
        let line: Vec<String> =
            choice_letters(choices.len()).zip(choices).map(|(l, c)| format!("{l}. {}", c.trim())).collect();
        out.push(Segment::Text(line.join(" ")));
    }
    out
}

/// The explicit-selection line listing every card description.
pub fn choose_source_line<'a>(descriptions: impl IntoIterator<Item = &'a str>) -> String {
    let list: Vec<&str> = descriptions.into_iter().collect();
    format!("{CHOOSE_SOURCE} {}.", list.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Yes,
    No,
}

/// A parsed gate reply. Anything other than a leading yes/no reads as `No`
/// and is flagged ambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateAnswer {
    pub gate: Gate,
    pub ambiguous: bool,
}

pub fn parse_yes_no(response: &str) -> GateAnswer {
    let first = response
        .split_whitespace()
        .next()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .unwrap_or_default();
    match first.as_str() {
        "yes" => GateAnswer { gate: Gate::Yes, ambiguous: false },
        "no" => GateAnswer { gate: Gate::No, ambiguous: false },
        _ => GateAnswer { gate: Gate::No, ambiguous: true },
    }
}

/// Cuts `response` at the earliest stop sequence.
pub fn truncate_at_stop<'a>(response: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| response.find(s.as_str()))
        .min()
        .unwrap_or(response.len());
    &response[..cut]
}

/// Free text: the trimmed response up to the first stop sequence.
/// Multiple choice: the first standalone uppercase choice letter, or an
/// empty string when none appears.
pub fn extract_answer(response: &str, format: &AnswerFormat, stops: &[String]) -> String {
    let text = truncate_at_stop(response.trim_start(), stops);
    match format {
        AnswerFormat::FreeText => text.trim().to_string(),
        AnswerFormat::MultipleChoice(choices) => {
            let letters: Vec<char> = choice_letters(choices.len()).collect();
            text.split(|c: char| !c.is_alphanumeric())
                .find_map(|tok| {
                    let mut chars = tok.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) if letters.contains(&c) => Some(c.to_string()),
                        _ => None,
                    }
                })
                .unwrap_or_default()
        }
    }
}
