//! Blank placement: six POS/dependency rules pick tokens where a negation
//! can be introduced, and proposals combine up to two blanks per sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{DepSentence, SpanRange, SyntaxError, Token};

pub const BLANK: &str = "[BLANK]";

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("determiner at token {0} has no following token")]
    DegenerateDeterminer(usize),
    #[error("invalid mask config: {0}")]
    Config(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    #[serde(rename = "WHOLE")]
    Whole,
}

impl RuleId {
    pub const TOKEN_RULES: [RuleId; 6] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
    ];

    /// Whether the rule's POS/dependency predicate holds on `tok`.
    pub fn holds(self, tok: &Token) -> bool {
        let deprel = tok.deprel.as_str();
        match self {
            RuleId::R1 => tok.upos == "VERB" || tok.upos == "AUX",
            RuleId::R2 => tok.upos == "DET" && base_relation(deprel) == "det",
            RuleId::R3 => deprel.contains("subj") || deprel.contains("obj"),
            RuleId::R4 => tok.upos == "ADV" && base_relation(deprel) == "advmod",
            RuleId::R5 => tok.upos == "ADJ",
            RuleId::R6 => tok.upos == "ADP" && matches!(base_relation(deprel), "prep" | "case"),
            RuleId::Whole => false,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleId::Whole => f.write_str("WHOLE"),
            r => write!(f, "{r:?}"),
        }
    }
}

// "nsubj:pass" -> "nsubj"
fn base_relation(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum Granularity {
    #[default]
    #[serde(alias = "token")]
    Token,
    #[serde(alias = "subtree")]
    Subtree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub granularity: Granularity,
    pub max_blanks_per_proposal: usize,
    pub max_proposals: usize,
    pub include_whole_sentence: bool,
    pub enabled_rules: BTreeSet<RuleId>,
    pub rng_seed: u64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            granularity: Granularity::Token,
            max_blanks_per_proposal: 2,
            max_proposals: 6,
            include_whole_sentence: true,
            enabled_rules: RuleId::TOKEN_RULES.into_iter().collect(),
            rng_seed: 0,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<(), MaskError> {
        if self.max_blanks_per_proposal < 1 {
            return Err(MaskError::Config("max_blanks_per_proposal must be >= 1".into()));
        }
        if self.max_proposals < 1 {
            return Err(MaskError::Config("max_proposals must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSpan {
    pub start: usize,
    pub end: usize,
    pub rule: RuleId,
    /// Surface text the blank replaced.
    pub text: String,
}

impl MaskedSpan {
    pub fn range(&self) -> SpanRange {
        SpanRange {
            start: self.start,
            end: self.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskProposal {
    pub sent_id: String,
    pub granularity: Granularity,
    pub spans: Vec<MaskedSpan>,
    pub masked_text: String,
    /// The last blank is followed only by punctuation, a placement that
    /// tends to produce degenerate fills.
    #[serde(default)]
    pub terminal_blank: bool,
}

impl MaskProposal {
    pub fn blank_count(&self) -> usize {
        self.spans.len()
    }

    pub fn span_texts(&self) -> Vec<String> {
        self.spans.iter().map(|s| s.text.clone()).collect()
    }

    pub fn is_whole_sentence(&self) -> bool {
        self.spans.len() == 1 && self.spans[0].rule == RuleId::Whole
    }

    /// Positional replacement of each blank by `fills`, without any spacing or
    /// case repair. With the original span texts this yields the source sentence.
    pub fn reconstruct(&self, fills: &[String]) -> Option<String> {
        let pieces: Vec<&str> = self.masked_text.split(BLANK).collect();
        if pieces.len() != fills.len() + 1 {
            return None;
        }
        let mut out = String::from(pieces[0]);
        for (fill, piece) in fills.iter().zip(&pieces[1..]) {
            out.push_str(fill);
            out.push_str(piece);
        }
        Some(out)
    }
}

/// Every (token, rule) pair whose predicate holds, ordered by token then rule.
///
/// R6 is reported like the other rules; [`propose_masks`] only uses it at
/// subtree granularity.
pub fn match_rules(sent: &DepSentence) -> Vec<(usize, RuleId)> {
    let mut out = Vec::new();
    for tok in sent.tokens() {
        for rule in RuleId::TOKEN_RULES {
            if rule.holds(tok) {
                out.push((tok.index, rule));
            }
        }
    }
    out
}

/// The surface span a matched token blanks out.
pub fn expand_target(
    sent: &DepSentence,
    index: usize,
    rule: RuleId,
    granularity: Granularity,
) -> Result<SpanRange, MaskError> {
    let tok = sent.token(index)?;
    if rule == RuleId::Whole {
        return Ok(sent.full_span());
    }
    match granularity {
        Granularity::Token => {
            if rule == RuleId::R2 {
                if index >= sent.len() {
                    return Err(MaskError::DegenerateDeterminer(index));
                }
                Ok(SpanRange {
                    start: index,
                    end: index + 1,
                })
            } else {
                Ok(SpanRange::single(index))
            }
        }
        Granularity::Subtree => {
            // determiners and case markers hang off the phrase head they introduce
            let phrase_head = match rule {
                RuleId::R2 if tok.head != 0 => tok.head,
                RuleId::R6 if base_relation(&tok.deprel) == "case" && tok.head != 0 => tok.head,
                _ => index,
            };
            Ok(sent.subtree_span(phrase_head)?)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    span: SpanRange,
    rule: RuleId,
}

/// Builds masked-sentence proposals for one sentence.
///
/// Candidate spans are taken round-robin across rules (token order within a
/// rule). When a round has more candidates than the remaining budget, a
/// seeded shuffle decides which of them make it. Every other proposal pairs
/// its span with a second, non-adjacent span from a different rule when one
/// exists. The whole-sentence proposal comes last and is outside the budget.
pub fn propose_masks(sent: &DepSentence, cfg: &MaskConfig) -> Result<Vec<MaskProposal>, MaskError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let full = sent.full_span();

    let mut matches: Vec<(usize, RuleId)> = match_rules(sent)
        .into_iter()
        .filter(|(_, r)| cfg.enabled_rules.contains(r))
        .filter(|(_, r)| *r != RuleId::R6 || cfg.granularity == Granularity::Subtree)
        .collect();
    matches.sort_by_key(|&(idx, rule)| (rule, idx));

    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<RuleId, Vec<Candidate>> = BTreeMap::new();
    for (idx, rule) in matches {
        let span = match expand_target(sent, idx, rule, cfg.granularity) {
            Ok(span) => span,
            Err(MaskError::DegenerateDeterminer(_)) => continue,
            Err(e) => return Err(e),
        };
        if cfg.include_whole_sentence && span == full {
            continue;
        }
        if seen.insert(span) {
            groups.entry(rule).or_default().push(Candidate { span, rule });
        }
    }

    // full round-robin order, used for partner search
    let rounds = groups.values().map(Vec::len).max().unwrap_or(0);
    let mut ordered = Vec::new();
    let mut primaries = Vec::new();
    for round in 0..rounds {
        let mut tier: Vec<Candidate> = groups.values().filter_map(|g| g.get(round).copied()).collect();
        ordered.extend(tier.iter().copied());
        let room = cfg.max_proposals.saturating_sub(primaries.len());
        if room == 0 {
            continue;
        }
        if tier.len() > room {
            tier.shuffle(&mut rng);
            tier.truncate(room);
            tier.sort_by_key(|c| c.rule);
        }
        primaries.extend(tier);
    }

    let mut proposals = Vec::new();
    let mut emitted: BTreeSet<Vec<SpanRange>> = BTreeSet::new();
    for (slot, primary) in primaries.iter().enumerate() {
        let want = 1 + slot % cfg.max_blanks_per_proposal;
        let mut chosen = vec![*primary];
        if want > 1 {
            let start = ordered
                .iter()
                .position(|c| c.span == primary.span)
                .unwrap_or(0);
            for pass_allows_same_rule in [false, true] {
                for off in 1..ordered.len() {
                    if chosen.len() >= want {
                        break;
                    }
                    let c = ordered[(start + off) % ordered.len()];
                    let clash = chosen.iter().any(|k| k.span.abuts(&c.span));
                    let same_rule = chosen.iter().any(|k| k.rule == c.rule);
                    if !clash && (pass_allows_same_rule || !same_rule) {
                        chosen.push(c);
                    }
                }
            }
        }
        chosen.sort_by_key(|c| c.span);
        let key: Vec<SpanRange> = chosen.iter().map(|c| c.span).collect();
        if !emitted.insert(key) {
            let single = vec![primary.span];
            if !emitted.insert(single) {
                continue;
            }
            chosen = vec![*primary];
        }
        proposals.push(build_proposal(sent, &chosen, cfg.granularity)?);
    }

    if cfg.include_whole_sentence {
        let whole = Candidate {
            span: full,
            rule: RuleId::Whole,
        };
        proposals.push(build_proposal(sent, &[whole], cfg.granularity)?);
    }
    Ok(proposals)
}

fn build_proposal(
    sent: &DepSentence,
    chosen: &[Candidate],
    granularity: Granularity,
) -> Result<MaskProposal, MaskError> {
    let mut exclude = BTreeSet::new();
    let mut insert = BTreeMap::new();
    let mut spans = Vec::with_capacity(chosen.len());
    for c in chosen {
        exclude.extend(c.span.indices());
        insert.insert(c.span, BLANK.to_string());
        spans.push(MaskedSpan {
            start: c.span.start,
            end: c.span.end,
            rule: c.rule,
            text: sent.span_text(c.span)?,
        });
    }
    let masked_text = sent.render_text(&exclude, &insert)?;
    let last_end = chosen.iter().map(|c| c.span.end).max().unwrap_or(0);
    let whole = chosen.len() == 1 && chosen[0].rule == RuleId::Whole;
    let terminal_blank = !whole
        && sent.tokens()[last_end..]
            .iter()
            .all(|t| t.upos == "PUNCT");
    Ok(MaskProposal {
        sent_id: sent.sent_id().to_string(),
        granularity,
        spans,
        masked_text,
        terminal_blank,
    })
}
