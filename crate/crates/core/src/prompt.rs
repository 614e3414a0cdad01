//! Prompt format for the fill-in-the-blank generator and parsing of its
//! `[ANSWER]`-separated completions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("masked sentence contains no {0} marker")]
    NoBlank(String),
    #[error("prompt text must be a single line")]
    MultiLine,
    #[error("special tokens {0:?} and {1:?} collide")]
    TokenCollision(String, String),
    #[error("expected {expected} answers, got {actual}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("not a prompt in the expected format: {0}")]
    Malformed(String),
}

/// Marker strings shared by the prompt builder, the completion parser and
/// the generator backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecialTokens {
    pub blank: String,
    pub sep: String,
    pub answer: String,
    pub empty: String,
    pub perturb: String,
    pub neg_code: String,
    pub eos: String,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        SpecialTokens {
            blank: "[BLANK]".into(),
            sep: "[SEP]".into(),
            answer: "[ANSWER]".into(),
            empty: "[EMPTY]".into(),
            perturb: "<|perturb|>".into(),
            neg_code: "[negation]".into(),
            eos: "<|endoftext|>".into(),
        }
    }
}

impl SpecialTokens {
    fn all(&self) -> [&str; 7] {
        [
            &self.blank,
            &self.sep,
            &self.answer,
            &self.empty,
            &self.perturb,
            &self.neg_code,
            &self.eos,
        ]
    }

    /// Tokens must be nonempty, distinct, and none may contain another.
    pub fn validate(&self) -> Result<(), PromptError> {
        let all = self.all();
        for (i, a) in all.iter().enumerate() {
            if a.is_empty() {
                return Err(PromptError::TokenCollision(a.to_string(), String::new()));
            }
            for b in &all[i + 1..] {
                if a.contains(b) || b.contains(a) {
                    return Err(PromptError::TokenCollision(a.to_string(), b.to_string()));
                }
            }
        }
        Ok(())
    }

    fn contains_marker(&self, s: &str) -> bool {
        s.contains(&self.blank) || s.contains(&self.sep)
    }
}

/// `{original} {PERTURB} {NEG_CODE} {masked} {SEP}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptString(String);

impl PromptString {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Wraps prompt text produced elsewhere, e.g. read back from a record.
    pub fn from_raw(text: impl Into<String>) -> Self {
        PromptString(text.into())
    }

    /// Splits the prompt back into (original, masked).
    pub fn split<'a>(&'a self, toks: &SpecialTokens) -> Result<(&'a str, &'a str), PromptError> {
        let body = self
            .0
            .strip_suffix(&toks.sep)
            .ok_or_else(|| PromptError::Malformed("missing trailing separator".into()))?
            .trim_end();
        let control = format!(" {} {} ", toks.perturb, toks.neg_code);
        let (original, masked) = body
            .split_once(&control)
            .ok_or_else(|| PromptError::Malformed("missing control code".into()))?;
        Ok((original, masked))
    }
}

pub fn build_prompt(original: &str, masked: &str, toks: &SpecialTokens) -> Result<PromptString, PromptError> {
    if !masked.contains(&toks.blank) {
        return Err(PromptError::NoBlank(toks.blank.clone()));
    }
    if original.contains('\n') || masked.contains('\n') {
        return Err(PromptError::MultiLine);
    }
    Ok(PromptString(format!(
        "{} {} {} {} {}",
        original.trim(),
        toks.perturb,
        toks.neg_code,
        masked.trim(),
        toks.sep
    )))
}

/// Formats fills the way the generator is trained to emit them.
pub fn format_answers(answers: &[String], toks: &SpecialTokens) -> String {
    let mut out = String::new();
    for a in answers {
        if a.is_empty() {
            out.push_str(&toks.empty);
        } else {
            out.push_str(a);
        }
        out.push(' ');
        out.push_str(&toks.answer);
        out.push(' ');
    }
    out.trim_end().to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    CountMismatch,
    DegenerateSymbols,
    EmptyRaw,
    /// An answer echoed a blank or separator marker.
    LeakedMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: RejectReason,
    pub detail: String,
}

/// Splits a raw completion into one answer per blank.
///
/// Text after EOS is dropped, `[EMPTY]` becomes the empty fill, and a
/// trailing separator with nothing after it is ignored.
pub fn parse_completion(raw: &str, blank_count: usize, toks: &SpecialTokens) -> Result<Vec<String>, Rejection> {
    let reject = |reason, detail: String| Rejection { reason, detail };
    let body = match raw.find(&toks.eos) {
        Some(pos) => &raw[..pos],
        None => raw,
    };
    if body.trim().is_empty() {
        return Err(reject(RejectReason::EmptyRaw, "no text before end of sequence".into()));
    }
    let mut parts: Vec<&str> = body.split(&toks.answer).map(str::trim).collect();
    if parts.len() > 1 && parts.last().is_some_and(|p| p.is_empty()) {
        parts.pop();
    }
    let mut answers = Vec::with_capacity(parts.len());
    for part in parts {
        if toks.contains_marker(part) {
            return Err(reject(RejectReason::LeakedMarker, part.to_string()));
        }
        let answer = if part == toks.empty { "" } else { part };
        if !answer.is_empty() && is_degenerate(answer) {
            return Err(reject(RejectReason::DegenerateSymbols, answer.to_string()));
        }
        answers.push(answer.to_string());
    }
    if answers.len() != blank_count {
        return Err(reject(
            RejectReason::CountMismatch,
            format!("expected {blank_count} answers, got {}", answers.len()),
        ));
    }
    Ok(answers)
}

/// Symbol-heavy or looping text. Three shapes count: fewer than 40% word
/// characters, a substring of three or more characters repeated four times
/// back to back, or a run of six or more identical punctuation characters.
pub fn is_degenerate(answer: &str) -> bool {
    let chars: Vec<char> = answer.chars().collect();
    if chars.is_empty() {
        return false;
    }
    let wordish = chars
        .iter()
        .filter(|c| c.is_alphanumeric() || matches!(c, '\'' | '’' | '-' | ' '))
        .count();
    if (wordish as f64) < 0.4 * chars.len() as f64 {
        return true;
    }
    let mut run = 1;
    for w in chars.windows(2) {
        if w[0] == w[1] && !w[0].is_alphanumeric() && !w[0].is_whitespace() {
            run += 1;
            if run >= 6 {
                return true;
            }
        } else {
            run = 1;
        }
    }
    has_tandem_repeat(&chars, 3, 4)
}

fn has_tandem_repeat(chars: &[char], min_unit: usize, times: usize) -> bool {
    let n = chars.len();
    for unit in min_unit..=n / times {
        for start in 0..=n - unit * times {
            let first = &chars[start..start + unit];
            if (1..times).all(|k| &chars[start + k * unit..start + (k + 1) * unit] == first) {
                return true;
            }
        }
    }
    false
}

/// Replacement behavior for [`fill_blanks_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillOptions {
    /// Upper-case the first letter when the first blank opens the sentence.
    pub restore_capitalization: bool,
}

impl Default for FillOptions {
    fn default() -> Self {
        FillOptions {
            restore_capitalization: true,
        }
    }
}

pub fn fill_blanks(masked: &str, answers: &[String], toks: &SpecialTokens) -> Result<String, PromptError> {
    fill_blanks_with(masked, answers, toks, FillOptions::default())
}

/// Replaces the i-th blank with the i-th answer. An empty answer removes the
/// blank together with the surrounding extra whitespace.
pub fn fill_blanks_with(
    masked: &str,
    answers: &[String],
    toks: &SpecialTokens,
    opts: FillOptions,
) -> Result<String, PromptError> {
    let pieces: Vec<&str> = masked.split(toks.blank.as_str()).collect();
    if pieces.len() != answers.len() + 1 {
        return Err(PromptError::CountMismatch {
            expected: pieces.len() - 1,
            actual: answers.len(),
        });
    }
    let initial_blank = pieces[0].trim().is_empty() && pieces.len() > 1;
    let mut out = String::from(pieces[0]);
    for (answer, right) in answers.iter().zip(&pieces[1..]) {
        let answer = answer.trim();
        if answer.is_empty() {
            let kept = out.trim_end().len();
            out.truncate(kept);
            let right = right.trim_start();
            let glue = !out.is_empty()
                && !right.is_empty()
                && !right.starts_with(['.', ',', ';', ':', '!', '?', ')']);
            if glue {
                out.push(' ');
            }
            out.push_str(right);
        } else {
            out.push_str(answer);
            out.push_str(right);
        }
    }
    let mut out = out.trim().to_string();
    if opts.restore_capitalization && initial_blank {
        if let Some(first) = out.chars().next() {
            if first.is_lowercase() {
                let upper: String = first.to_uppercase().collect();
                out.replace_range(..first.len_utf8(), &upper);
            }
        }
    }
    Ok(out)
}
