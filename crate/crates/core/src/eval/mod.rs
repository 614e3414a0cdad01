//! Closeness, diversity and quality metrics over negated sentences.

mod bleu;
mod report;
mod ted;

use thiserror::Error;

use crate::backend::ScoredSequence;
use crate::filter::{norm_levenshtein, DistanceUnit};

pub use bleu::{self_bleu, sentence_bleu};
pub use report::{build_report, Counts, EvalReport, MetricSummary, SentenceMetrics, Skipped};
pub use ted::{normalized_tree_edit_distance, sentence_tree, tree_edit_distance, LabeledTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("cannot average over an empty list of pairs")]
    NoPairs,
    #[error("cannot compute perplexity of an empty sequence")]
    EmptySequence,
}

/// Mean normalized Levenshtein distance over (original, negated) pairs.
pub fn nld_avg<S: AsRef<str>>(pairs: &[(S, S)], unit: DistanceUnit) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::NoPairs);
    }
    let sum: f64 = pairs
        .iter()
        .map(|(a, b)| norm_levenshtein(a.as_ref(), b.as_ref(), unit))
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// `exp` of the negative mean log-probability.
pub fn perplexity(scored: &ScoredSequence) -> Result<f64, EvalError> {
    if scored.logprobs.is_empty() {
        return Err(EvalError::EmptySequence);
    }
    let mean = scored.logprobs.iter().sum::<f64>() / scored.logprobs.len() as f64;
    Ok((-mean).exp())
}
