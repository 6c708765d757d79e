//! Top-k softmax sampling without replacement.
//!
//! Given scores `s_i`, the candidate set `D^k` is the `k` highest-scoring
//! items (ties by index). Each draw picks item `i` from the not-yet-drawn
//! members of `D^k` with probability `exp(s_i) / sum_j exp(s_j)`; items
//! outside `D^k` are never drawn.
//!
//! Draws are realized with the Gumbel-top-k construction: every member of
//! `D^k` gets the key `s_i + G_i` with `G_i` standard Gumbel noise, and the
//! `l` largest keys are the draws, in draw order. This has exactly the
//! sequential renormalized-softmax distribution above. It consumes one
//! `u64` per member of `D^k`, so for a fixed RNG state the draws for `l` are
//! a prefix of the draws for `l + 1`.

use alloc::vec::Vec;

use rand_core::RngCore;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("score {index} is not a finite number")]
    NonFinite { index: usize },
    #[error("candidate set size {k} is smaller than the draw count {l}")]
    CandidatesTooFew { k: usize, l: usize },
    #[error("draw count must be at least 1")]
    ZeroDraws,
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Indices of the `k` highest scores in descending score order, ties by index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Probability that each item is the *first* draw. Zero outside `D^k`.
pub fn first_draw_probabilities(scores: &[f64], k: usize) -> Vec<f64> {
    let top = top_k_indices(scores, k.min(scores.len()));
    let member_scores: Vec<f64> = top.iter().map(|&i| scores[i]).collect();
    let mut p = alloc::vec![0.0; scores.len()];
    for (&i, q) in top.iter().zip(softmax(&member_scores)) {
        p[i] = q;
    }
    p
}

/// Uniform draw in the open interval (0, 1).
fn open_unit(rng: &mut dyn RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Draws `l` distinct indices from the top-`k` candidates, in draw order.
///
/// `k` is clamped to `scores.len()`. When there are at most `l` scores,
/// every index is returned without touching the RNG.
pub fn draw_without_replacement(
    scores: &[f64],
    k: usize,
    l: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<usize>, SamplingError> {
    if l == 0 {
        return Err(SamplingError::ZeroDraws);
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(SamplingError::NonFinite { index });
    }
    if scores.len() <= l {
        return Ok(top_k_indices(scores, scores.len()));
    }
    let k = k.min(scores.len());
    if k < l {
        return Err(SamplingError::CandidatesTooFew { k, l });
    }
    let candidates = top_k_indices(scores, k);
    let keys: Vec<f64> = candidates
        .iter()
        .map(|&i| {
            let u = open_unit(rng);
            scores[i] - libm::log(-libm::log(u))
        })
        .collect();
    let order = top_k_indices(&keys, l);
    Ok(order.into_iter().map(|j| candidates[j]).collect())
}

/// Same draws as [`draw_without_replacement`], reported in descending score
/// order (ties by index) so downstream prompts do not depend on draw order.
pub fn sample_top_k(scores: &[f64], k: usize, l: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>, SamplingError> {
    let mut drawn = draw_without_replacement(scores, k, l, rng)?;
    drawn.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(drawn)
}
