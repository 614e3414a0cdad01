//! Candidate filtering: normalization, deduplication, a closeness threshold
//! on normalized Levenshtein distance, a negation-cue requirement, and a
//! seeded uniform sample of the survivors.

pub mod cues;
pub mod levenshtein;

use std::collections::HashSet;
use std::convert::Infallible;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cues::{CueClass, CueLexicon, CueSpan, LexiconError};
pub use levenshtein::{edit_distance, levenshtein, norm_levenshtein, DistanceUnit};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    Config(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Number of negations kept per sentence.
    pub epsilon: usize,
    /// Candidates must be strictly closer than this normalized distance.
    pub threshold: f64,
    pub distance_unit: DistanceUnit,
    pub rng_seed: u64,
    /// Replaces the bundled lexicon when set.
    pub cue_lexicon_path: Option<String>,
    /// `optional` lexicon cues to switch on, e.g. "lack of".
    pub optional_cues: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            epsilon: 10,
            threshold: 0.5,
            distance_unit: DistanceUnit::Token,
            rng_seed: 0,
            cue_lexicon_path: None,
            optional_cues: Vec::new(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.epsilon < 1 {
            return Err(FilterError::Config("epsilon must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(FilterError::Config(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Loads the configured lexicon and enables the requested optional cues.
    pub fn load_lexicon(&self) -> Result<CueLexicon, FilterError> {
        let mut lex = match &self.cue_lexicon_path {
            Some(path) => CueLexicon::from_path(path)?,
            None => CueLexicon::bundled().clone(),
        };
        for cue in &self.optional_cues {
            lex.enable_optional(cue)?;
        }
        Ok(lex)
    }
}

/// Anything that can find negation cues in a sentence.
pub trait CueDetector {
    type Error;
    fn detect(&self, text: &str) -> Result<Vec<CueSpan>, Self::Error>;
}

impl CueDetector for CueLexicon {
    type Error = Infallible;
    fn detect(&self, text: &str) -> Result<Vec<CueSpan>, Infallible> {
        Ok(self.detect_cues(text))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropReason {
    Empty,
    Duplicate,
    TooFar,
    NoCue,
    SampledOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptNegation {
    pub sentence: String,
    pub distance: f64,
    pub cues: Vec<CueSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub sentence: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredSet {
    pub original: String,
    pub kept: Vec<KeptNegation>,
    pub rejected: Vec<Dropped>,
}

impl FilteredSet {
    pub fn kept_sentences(&self) -> Vec<&str> {
        self.kept.iter().map(|k| k.sentence.as_str()).collect()
    }
}

/// Lowercases, trims, and strips a trailing run of sentence punctuation.
pub fn normalize(s: &str) -> String {
    s.trim()
        .to_lowercase()
        .trim_end_matches(['.', '!', '?'])
        .trim_end()
        .to_string()
}

/// Filters one sentence's candidates with the bundled-style lexicon.
pub fn filter_candidates(original: &str, candidates: &[String], cfg: &FilterConfig, lexicon: &CueLexicon) -> FilteredSet {
    match filter_with(original, candidates, cfg, lexicon) {
        Ok(set) => set,
        Err(never) => match never {},
    }
}

/// Filtering with any cue detector. Kept sentences are the candidates'
/// surface forms (trimmed), in candidate order.
pub fn filter_with<D: CueDetector>(
    original: &str,
    candidates: &[String],
    cfg: &FilterConfig,
    detector: &D,
) -> Result<FilteredSet, D::Error> {
    let norm_original = normalize(original);
    let mut rejected = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut close: Vec<(String, f64)> = Vec::new();

    for cand in candidates {
        let norm = normalize(cand);
        let surface = cand.trim().to_string();
        if norm.is_empty() {
            rejected.push(Dropped {
                sentence: surface,
                reason: DropReason::Empty,
            });
            continue;
        }
        if seen.contains(&norm) {
            rejected.push(Dropped {
                sentence: surface,
                reason: DropReason::Duplicate,
            });
            continue;
        }
        let d = norm_levenshtein(&norm, &norm_original, cfg.distance_unit);
        if d < cfg.threshold {
            seen.insert(norm);
            close.push((surface, d));
        } else {
            rejected.push(Dropped {
                sentence: surface,
                reason: DropReason::TooFar,
            });
        }
    }

    let mut survivors = Vec::new();
    for (sentence, distance) in close {
        let cues = detector.detect(&sentence)?;
        if cues.is_empty() {
            rejected.push(Dropped {
                sentence,
                reason: DropReason::NoCue,
            });
        } else {
            survivors.push(KeptNegation {
                sentence,
                distance,
                cues,
            });
        }
    }

    let kept = if survivors.len() > cfg.epsilon {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut picked = sample(&mut rng, survivors.len(), cfg.epsilon).into_vec();
        picked.sort_unstable();
        let picked: HashSet<usize> = picked.into_iter().collect();
        let mut kept = Vec::with_capacity(cfg.epsilon);
        for (i, k) in survivors.into_iter().enumerate() {
            if picked.contains(&i) {
                kept.push(k);
            } else {
                rejected.push(Dropped {
                    sentence: k.sentence,
                    reason: DropReason::SampledOut,
                });
            }
        }
        kept
    } else {
        survivors
    };

    Ok(FilteredSet {
        original: original.to_string(),
        kept,
        rejected,
    })
}
