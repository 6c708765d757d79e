//! Answer-level and label-level metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("no outcomes to score")]
    Empty,
}

/// Lowercase, drop punctuation, drop the articles `a`/`an`/`the`, collapse
/// whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered.chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
    let words: Vec<&str> = no_punct.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "the")).collect();
    words.join(" ")
}

/// 1.0 when the normalized strings are equal, else 0.0.
pub fn exact_match(prediction: &str, gold: &str) -> f64 {
    if normalize_answer(prediction) == normalize_answer(gold) {
        1.0
    } else {
        0.0
    }
}

/// Harmonic mean of token precision and recall over normalized tokens,
/// counting repeated tokens as a multiset.
pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let pred = normalize_answer(prediction);
    let gold = normalize_answer(gold);
    let pred: Vec<&str> = pred.split_whitespace().collect();
    let gold: Vec<&str> = gold.split_whitespace().collect();
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pred {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean per-class recall over the classes that occur as gold labels.
pub fn balanced_accuracy<L: Ord>(outcomes: &[(L, L)]) -> Result<f64, MetricError> {
    if outcomes.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut per_class: BTreeMap<&L, (usize, usize)> = BTreeMap::new();
    for (gold, pred) in outcomes {
        let entry = per_class.entry(gold).or_default();
        entry.1 += 1;
        if gold == pred {
            entry.0 += 1;
        }
    }
    let sum: f64 = per_class.values().map(|&(hit, total)| hit as f64 / total as f64).sum();
    Ok(sum / per_class.len() as f64)
}

/// Unweighted mean of per-class F1. The classes are `labels` plus every
/// label seen as gold or prediction, so a declared class that never occurs
/// still counts (with F1 0). Undefined precision, recall or F1 (0/0) is 0.
pub fn macro_f1<L: Ord>(outcomes: &[(L, L)], labels: &[L]) -> Result<f64, MetricError> {
    if outcomes.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut label_set: BTreeSet<&L> = labels.iter().collect();
    for (g, p) in outcomes {
        label_set.insert(g);
        label_set.insert(p);
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut sum = 0.0;
    for label in &label_set {
        let tp = outcomes.iter().filter(|(g, p)| g == *label && p == *label).count();
        let predicted = outcomes.iter().filter(|(_, p)| p == *label).count();
        let actual = outcomes.iter().filter(|(g, _)| g == *label).count();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok(sum / label_set.len() as f64)
}
