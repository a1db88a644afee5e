//! Instance-level text quality metrics: n-gram diversity, coherence, and
//! generation perplexity.
//!
//! All log-probabilities are natural logarithms. Coherence and perplexity
//! consume per-token log-probabilities produced by an external scoring model;
//! which model produced them is the caller's concern.

use std::collections::HashSet;
use std::hash::Hash;

use thiserror::Error;

/// Shortest continuation for which a 4-gram exists.
pub const MIN_DIVERSITY_LEN: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("sequence of length {len} is too short for diversity (need at least {MIN_DIVERSITY_LEN} tokens)")]
    SequenceTooShort { len: usize },
    #[error("log-probability sequence is empty")]
    EmptySequence,
    #[error("log-probability at position {index} is {value}; expected a finite value <= 0")]
    InvalidLogProb { index: usize, value: f64 },
}

/// Product over n in {2, 3, 4} of distinct-to-total contiguous n-gram ratios.
///
/// A sequence of length `L` has `L - n + 1` n-grams. Tokens compare by exact
/// equality.
pub fn diversity<T: Eq + Hash>(tokens: &[T]) -> Result<f64, MetricsError> {
    if tokens.len() < MIN_DIVERSITY_LEN {
        return Err(MetricsError::SequenceTooShort { len: tokens.len() });
    }
    let mut product = 1.0;
    for n in 2..=4 {
        let total = tokens.len() - n + 1;
        let distinct: HashSet<&[T]> = tokens.windows(n).collect();
        product *= distinct.len() as f64 / total as f64;
    }
    Ok(product)
}

fn check_logprobs(logprobs: &[f64]) -> Result<(), MetricsError> {
    if logprobs.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    match logprobs
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v > 0.0)
    {
        Some((index, &value)) => Err(MetricsError::InvalidLogProb { index, value }),
        None => Ok(()),
    }
}

/// Mean token log-likelihood of a continuation given its prompt.
pub fn coherence(logprobs: &[f64]) -> Result<f64, MetricsError> {
    check_logprobs(logprobs)?;
    Ok(logprobs.iter().sum::<f64>() / logprobs.len() as f64)
}

/// `exp(-mean(logprobs))`; identical to `exp(-coherence(logprobs))`.
pub fn perplexity(logprobs: &[f64]) -> Result<f64, MetricsError> {
    coherence(logprobs).map(|c| (-c).exp())
}
