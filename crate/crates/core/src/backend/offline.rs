use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{apply_stops, Backend, BackendError, Capability, SamplingParams, ScoredSequence};
use crate::filter::CueLexicon;
use crate::prompt::{PromptString, SpecialTokens};

/// (auxiliary, contraction, uncontracted negation)
const AUXILIARIES: &[(&str, Option<&str>, &str)] = &[
    ("is", Some("isn't"), "is not"),
    ("are", Some("aren't"), "are not"),
    ("was", Some("wasn't"), "was not"),
    ("were", Some("weren't"), "were not"),
    ("am", None, "am not"),
    ("do", Some("don't"), "do not"),
    ("does", Some("doesn't"), "does not"),
    ("did", Some("didn't"), "did not"),
    ("has", Some("hasn't"), "has not"),
    ("have", Some("haven't"), "have not"),
    ("had", Some("hadn't"), "had not"),
    ("can", Some("can't"), "cannot"),
    ("could", Some("couldn't"), "could not"),
    ("will", Some("won't"), "will not"),
    ("would", Some("wouldn't"), "would not"),
    ("should", Some("shouldn't"), "should not"),
    ("must", Some("mustn't"), "must not"),
    ("may", None, "may not"),
    ("might", None, "might not"),
    ("shall", None, "shall not"),
];

const PRONOUNS: &[(&str, &[&str])] = &[
    ("they", &["none of them", "no one"]),
    ("them", &["no one", "none of them"]),
    ("we", &["none of us", "no one"]),
    ("us", &["none of us", "no one"]),
    ("he", &["no one", "nobody"]),
    ("she", &["no one", "nobody"]),
    ("i", &["no one", "nobody"]),
    ("you", &["none of you", "no one"]),
    ("him", &["no one", "nobody"]),
    ("me", &["no one", "nobody"]),
    ("everybody", &["nobody", "no one"]),
    ("everyone", &["nobody", "no one"]),
    ("somebody", &["nobody", "no one"]),
    ("someone", &["nobody", "no one"]),
    ("everything", &["nothing"]),
    ("something", &["nothing"]),
    ("all", &["none"]),
];

const ADVERBS: &[(&str, &[&str])] = &[
    ("always", &["never"]),
    ("ever", &["never"]),
    ("sometimes", &["never", "rarely"]),
    ("often", &["rarely", "seldom", "never"]),
    ("usually", &["rarely", "seldom"]),
    ("frequently", &["rarely"]),
    ("already", &["not yet"]),
    ("still", &["no longer"]),
    ("everywhere", &["nowhere"]),
    ("somewhere", &["nowhere"]),
];

const IRREGULAR_PAST: &[(&str, &str)] = &[
    ("ate", "eat"),
    ("began", "begin"),
    ("bought", "buy"),
    ("brought", "bring"),
    ("built", "build"),
    ("came", "come"),
    ("caught", "catch"),
    ("chose", "choose"),
    ("drank", "drink"),
    ("drove", "drive"),
    ("fell", "fall"),
    ("felt", "feel"),
    ("flew", "fly"),
    ("forgot", "forget"),
    ("fought", "fight"),
    ("found", "find"),
    ("gave", "give"),
    ("got", "get"),
    ("grew", "grow"),
    ("heard", "hear"),
    ("held", "hold"),
    ("kept", "keep"),
    ("knew", "know"),
    ("led", "lead"),
    ("left", "leave"),
    ("lost", "lose"),
    ("made", "make"),
    ("meant", "mean"),
    ("met", "meet"),
    ("paid", "pay"),
    ("ran", "run"),
    ("rode", "ride"),
    ("rose", "rise"),
    ("said", "say"),
    ("sang", "sing"),
    ("sat", "sit"),
    ("saw", "see"),
    ("sent", "send"),
    ("slept", "sleep"),
    ("sold", "sell"),
    ("spent", "spend"),
    ("spoke", "speak"),
    ("stood", "stand"),
    ("swam", "swim"),
    ("taught", "teach"),
    ("thought", "think"),
    ("threw", "throw"),
    ("told", "tell"),
    ("took", "take"),
    ("understood", "understand"),
    ("went", "go"),
    ("woke", "wake"),
    ("won", "win"),
    ("wore", "wear"),
    ("wrote", "write"),
];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "his", "her", "their", "my", "your", "our", "its",
    "some", "every", "each", "any",
];

const POSSESSIVES: &[&str] = &["his", "her", "their", "my", "your", "our", "its"];

const PREPOSITIONS: &[&str] = &[
    "to", "of", "in", "on", "at", "for", "with", "by", "from", "into", "about", "over", "under", "after",
    "before", "through", "during",
];

const SUBJECT_PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "this", "that", "everyone", "everybody", "someone", "somebody",
];

/// Verb forms that cannot follow a singular subject.
const PLURAL_AGREEMENT: &[&str] = &["are", "were", "have", "do", "am", "aren't", "weren't", "haven't", "don't"];

const COMMON_ADJECTIVES: &[&str] = &[
    "old", "new", "young", "big", "small", "little", "large", "good", "bad", "great", "simple", "bright",
    "dark", "long", "short", "high", "low", "hot", "cold", "warm", "cool", "fresh", "whole", "last", "first",
    "next", "other", "same", "few", "many", "red", "blue", "green", "black", "white", "local", "free", "nice",
];

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("child", "children"),
    ("person", "people"),
    ("man", "men"),
    ("woman", "women"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("mouse", "mice"),
];

const ADJECTIVE_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "ible", "ent", "ant", "ic", "ical", "ish"];

const NOT_ADVERBS: &[&str] = &["only", "family", "reply", "supply", "apply", "rely", "fly", "july", "italy"];

fn lookup<'a, T: Copy>(table: &'a [(&'a str, T)], word: &str) -> Option<T> {
    table.iter().find(|(w, _)| *w == word).map(|(_, v)| *v)
}

fn auxiliary(word: &str) -> Option<(Option<&'static str>, &'static str)> {
    AUXILIARIES.iter().find(|(w, _, _)| *w == word).map(|(_, c, n)| (*c, *n))
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Third-person singular to base form.
fn strip_s(v: &str) -> String {
    if let Some(stem) = v.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for ending in ["sses", "shes", "ches", "xes", "zes", "oes"] {
        if v.ends_with(ending) {
            return v[..v.len() - 2].to_string();
        }
    }
    v[..v.len() - 1].to_string()
}

/// Regular past tense to base form.
fn strip_ed(v: &str) -> String {
    if let Some(stem) = v.strip_suffix("ied") {
        return format!("{stem}y");
    }
    let stem = &v[..v.len() - 2];
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == chars[n - 2] && !is_vowel(chars[n - 1]) && !matches!(chars[n - 1], 'l' | 's' | 'z' | 'f')
    {
        return stem[..stem.len() - 1].to_string();
    }
    if chars.last() == Some(&'e') {
        return format!("{stem}e");
    }
    if matches!(chars.last(), Some('v' | 'z' | 'c' | 'u')) {
        return format!("{stem}e");
    }
    // consonant-vowel-consonant endings usually dropped a silent e ("hoped", "smiled")
    let cvc = n >= 3 && !is_vowel(chars[n - 3]) && is_vowel(chars[n - 2]) && !is_vowel(chars[n - 1]);
    let unstressed = n >= 4 && matches!(chars[n - 1], 'r' | 'n' | 't');
    if cvc && !unstressed && !matches!(chars[n - 1], 'w' | 'x' | 'y') {
        return format!("{stem}e");
    }
    stem.to_string()
}

fn pluralize(noun: &str) -> String {
    if let Some(plural) = lookup(IRREGULAR_PLURALS, noun) {
        return plural.to_string();
    }
    if IRREGULAR_PLURALS.iter().any(|(_, p)| *p == noun) {
        return noun.to_string();
    }
    let chars: Vec<char> = noun.chars().collect();
    let n = chars.len();
    if noun.ends_with('s') {
        noun.to_string()
    } else if n >= 2 && chars[n - 1] == 'y' && !is_vowel(chars[n - 2]) {
        format!("{}ies", &noun[..noun.len() - 1])
    } else if noun.ends_with("sh") || noun.ends_with("ch") || noun.ends_with('x') || noun.ends_with('z') {
        format!("{noun}es")
    } else {
        format!("{noun}s")
    }
}

fn bare_lower(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'').to_lowercase()
}

/// Splits trailing punctuation off a word.
fn split_punct(word: &str) -> (&str, &str) {
    let cut = word.trim_end_matches(|c: char| !c.is_alphanumeric() && c != '\'').len();
    word.split_at(cut)
}

/// Words around a blank, lowercased and without punctuation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Slot<'a> {
    pub prev: Option<&'a str>,
    pub prev2: Option<&'a str>,
    pub next: Option<&'a str>,
}

impl<'a> Slot<'a> {
    pub fn after(prev: &'a str) -> Self {
        Slot {
            prev: Some(prev),
            ..Slot::default()
        }
    }

    /// Whether a finite verb may stand here: after a subject pronoun, after
    /// a determiner and one word, or with no left context at all.
    fn verb_position(&self) -> bool {
        match (self.prev, self.prev2) {
            (None, _) => true,
            (Some(p), _) if SUBJECT_PRONOUNS.contains(&p) => true,
            (Some(p), _) if lookup(ADVERBS, p).is_some() || PREPOSITIONS.contains(&p) => false,
            (Some(p), Some(d)) => DETERMINERS.contains(&d) && !COMMON_ADJECTIVES.contains(&p),
            (Some(_), None) => true,
        }
    }
}

/// Rule-table negator used when no generator model is available.
#[derive(Debug, Clone)]
pub struct OfflineNegator {
    lexicon: CueLexicon,
}

impl Default for OfflineNegator {
    fn default() -> Self {
        OfflineNegator {
            lexicon: CueLexicon::bundled().clone(),
        }
    }
}

impl OfflineNegator {
    pub fn new(lexicon: CueLexicon) -> Self {
        OfflineNegator { lexicon }
    }

    fn verb_variants(&self, w: &str) -> Vec<String> {
        if let Some(base) = lookup(IRREGULAR_PAST, w) {
            return vec![format!("did not {base}"), format!("never {w}")];
        }
        let len = w.chars().count();
        if len > 4 && w.ends_with("ed") {
            return vec![format!("did not {}", strip_ed(w)), format!("never {w}")];
        }
        if len > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
            return vec![format!("does not {}", strip_s(w)), format!("never {w}")];
        }
        Vec::new()
    }

    fn adjective_variants(&self, w: &str) -> Vec<String> {
        if let Some(neg) = self.lexicon.negated_form(w) {
            return vec![format!("not {w}"), neg.to_string()];
        }
        Vec::new()
    }

    /// Fills for a one-word span.
    fn word_variants(&self, word: &str, slot: Slot<'_>) -> Vec<String> {
        let prev = slot.prev;
        let w = word.to_lowercase();
        if !w.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '-') || w.is_empty() {
            return Vec::new();
        }
        if let Some(fills) = lookup(PRONOUNS, &w) {
            let plural_verb = slot.next.is_some_and(|n| PLURAL_AGREEMENT.contains(&n));
            return fills
                .iter()
                .filter(|f| !plural_verb || f.starts_with("none of"))
                .map(|s| s.to_string())
                .collect();
        }
        if let Some((contracted, uncontracted)) = auxiliary(&w) {
            let mut out: Vec<String> = contracted.iter().map(|s| s.to_string()).collect();
            out.push(uncontracted.to_string());
            out.push(format!("never {w}"));
            return out;
        }
        if let Some(fills) = lookup(ADVERBS, &w) {
            return fills.iter().map(|s| s.to_string()).collect();
        }
        let perfect = prev.is_some_and(|p| matches!(p, "have" | "has" | "had"));
        let adjective = if perfect { Vec::new() } else { self.adjective_variants(&w) };
        if !adjective.is_empty() {
            return adjective;
        }
        let after_determiner = prev.is_some_and(|p| DETERMINERS.contains(&p) || PREPOSITIONS.contains(&p));
        if after_determiner {
            return Vec::new();
        }
        if prev.is_some_and(|p| auxiliary(p).is_some() || p == "be" || p == "been" || p == "to") {
            return vec![format!("not {w}"), format!("never {w}")];
        }
        if w.len() > 4 && w.ends_with("ing") {
            return vec![format!("not {w}")];
        }
        if w.len() > 3 && w.ends_with("ly") && !NOT_ADVERBS.contains(&w.as_str()) {
            return vec![format!("not {w}")];
        }
        if slot.verb_position() {
            let verb = self.verb_variants(&w);
            if !verb.is_empty() {
                return verb;
            }
        }
        if ADJECTIVE_SUFFIXES.iter().any(|s| w.len() > s.len() + 2 && w.ends_with(s)) {
            return vec![format!("not {w}")];
        }
        Vec::new()
    }

    fn determiner_phrase(&self, words: &[&str]) -> Vec<String> {
        let det = words[0].to_lowercase();
        let rest = words[1..].join(" ");
        let (body, punct) = split_punct(&rest);
        let head_start = body.rfind(' ').map_or(0, |i| i + 1);
        let head = &body[head_start..];
        if head.is_empty() || !head.chars().all(char::is_alphabetic) {
            return Vec::new();
        }
        let mut out = vec![format!("no {body}{punct}")];
        let lower = head.to_lowercase();
        let nominal = !COMMON_ADJECTIVES.contains(&lower.as_str())
            && !lower.ends_with("ing")
            && self.lexicon.negated_form(&lower).is_none()
            && !ADJECTIVE_SUFFIXES.iter().any(|s| lower.len() > s.len() + 2 && lower.ends_with(s));
        if nominal {
            let plural = format!("{}{}", &body[..head_start], pluralize(head));
            let of = if POSSESSIVES.contains(&det.as_str()) { det } else { "the".to_string() };
            out.push(format!("none of {of} {plural}{punct}"));
        }
        out
    }

    /// Applies the first rule that matches some word of a multi-word text.
    fn rewrite(&self, text: &str) -> Vec<String> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            return Vec::new();
        }
        let lower: Vec<String> = words.iter().map(|w| split_punct(w).0.to_lowercase()).collect();
        let replace_at = |i: usize, fills: Vec<String>| -> Vec<String> {
            let (body, punct) = split_punct(words[i]);
            fills
                .into_iter()
                .map(|fill| {
                    let fill = if i == 0 && body.starts_with(char::is_uppercase) { capitalize(&fill) } else { fill };
                    let mut out: Vec<String> = words.iter().map(|w| w.to_string()).collect();
                    out[i] = format!("{fill}{punct}");
                    out.join(" ")
                })
                .collect()
        };
        let verb_slot = |i: usize| -> bool {
            if i == 0 {
                return false;
            }
            let prev = lower[i - 1].as_str();
            SUBJECT_PRONOUNS.contains(&prev)
                || (i == 1 && words[0].starts_with(char::is_uppercase) && !DETERMINERS.contains(&prev))
                || (i >= 2 && DETERMINERS.contains(&lower[i - 2].as_str()) && !PREPOSITIONS.contains(&prev))
        };

        let passes: [&dyn Fn(usize) -> Vec<String>; 5] = [
            &|i| match auxiliary(&lower[i]) {
                Some(_) => self.word_variants(&lower[i], Slot::default()),
                None => Vec::new(),
            },
            &|i| match lookup(PRONOUNS, &lower[i]) {
                Some(_) if !matches!(lower[i].as_str(), "i" | "you" | "me" | "us" | "him" | "them" | "all") => {
                    self.word_variants(&lower[i], Slot::default())
                }
                _ => Vec::new(),
            },
            &|i| lookup(ADVERBS, &lower[i]).map_or_else(Vec::new, |f| f.iter().map(|s| s.to_string()).collect()),
            &|i| if verb_slot(i) { self.verb_variants(&lower[i]) } else { Vec::new() },
            &|i| self.adjective_variants(&lower[i]),
        ];
        for pass in passes {
            for i in 0..words.len() {
                let fills = pass(i);
                if !fills.is_empty() {
                    return replace_at(i, fills);
                }
            }
        }
        if words.len() >= 2 && DETERMINERS.contains(&lower[0].as_str()) {
            let phrase = self.determiner_phrase(&words[..2]);
            if let Some(no_form) = phrase.into_iter().next() {
                let no_form = if words[0].starts_with(char::is_uppercase) { capitalize(&no_form) } else { no_form };
                let mut out = vec![no_form];
                out.extend(words[2..].iter().map(|w| w.to_string()));
                return vec![out.join(" ")];
            }
        }
        Vec::new()
    }

    /// Candidate fills for one masked span.
    pub fn span_variants(&self, span: &str, slot: Slot<'_>) -> Vec<String> {
        let words: Vec<&str> = span.split_whitespace().collect();
        match words.len() {
            0 => Vec::new(),
            1 => self.word_variants(words[0], slot),
            _ if DETERMINERS.contains(&words[0].to_lowercase().as_str()) && words.len() <= 4 => {
                self.determiner_phrase(&words)
            }
            _ => self.rewrite(span),
        }
    }

    /// Completions for a masked sentence whose blanks held `span_texts`.
    /// Each completion negates one blank and restores the others.
    pub fn negate(&self, masked: &str, span_texts: &[String], toks: &SpecialTokens) -> Vec<String> {
        let pieces: Vec<&str> = masked.split(toks.blank.as_str()).collect();
        if pieces.len() != span_texts.len() + 1 {
            return Vec::new();
        }
        let whole = span_texts.len() == 1 && masked.trim() == toks.blank;
        let mut out = Vec::new();
        for (k, span) in span_texts.iter().enumerate() {
            let before: Vec<String> = pieces[k].split_whitespace().rev().take(2).map(bare_lower).collect();
            let next = pieces[k + 1].split_whitespace().next().map(bare_lower);
            let slot = Slot {
                prev: before.first().map(String::as_str).filter(|w| !w.is_empty()),
                prev2: before.get(1).map(String::as_str).filter(|w| !w.is_empty()),
                next: next.as_deref().filter(|w| !w.is_empty()),
            };
            let fills = if whole {
                self.rewrite(span)
            } else {
                self.span_variants(span, slot)
            };
            for fill in fills {
                let answers: Vec<String> = span_texts
                    .iter()
                    .enumerate()
                    .map(|(j, s)| if j == k { fill.clone() } else { s.clone() })
                    .collect();
                out.push(
                    answers
                        .iter()
                        .map(|a| format!("{a} {}", toks.answer))
                        .collect::<Vec<_>>()
                        .join(" "),
                );
            }
        }
        out
    }
}

fn shared_negator() -> &'static OfflineNegator {
    static NEGATOR: OnceLock<OfflineNegator> = OnceLock::new();
    NEGATOR.get_or_init(OfflineNegator::default)
}

/// Rule-table completions with the default markers and bundled lexicon.
pub fn offline_negate(masked: &str, span_texts: &[String]) -> Vec<String> {
    shared_negator().negate(masked, span_texts, &SpecialTokens::default())
}

/// Recovers the text each blank replaced by aligning `masked` with `original`.
pub(crate) fn align_spans(original: &str, masked: &str, blank: &str) -> Option<Vec<String>> {
    let pieces: Vec<&str> = masked.split(blank).map(str::trim).collect();
    if pieces.len() < 2 {
        return None;
    }
    let original = original.trim();
    let mut rest = original.strip_prefix(pieces[0])?;
    let mut spans = Vec::with_capacity(pieces.len() - 1);
    for (k, piece) in pieces[1..].iter().enumerate() {
        let last = k + 2 == pieces.len();
        let (span, after) = if piece.is_empty() && last {
            (rest, "")
        } else if last {
            let at = rest.len().checked_sub(piece.len())?;
            if !rest.is_char_boundary(at) || &rest[at..] != *piece {
                return None;
            }
            (&rest[..at], "")
        } else {
            let at = rest.find(piece)?;
            (&rest[..at], &rest[at + piece.len()..])
        };
        spans.push(span.trim().to_string());
        rest = after;
    }
    Some(spans)
}

/// Deterministic backend built on [`OfflineNegator`].
#[derive(Debug, Clone)]
pub struct OfflineBackend {
    negator: OfflineNegator,
    toks: SpecialTokens,
    capabilities: BTreeSet<Capability>,
}

impl OfflineBackend {
    pub fn new(toks: SpecialTokens) -> Self {
        OfflineBackend::with_negator(OfflineNegator::default(), toks)
    }

    pub fn with_negator(negator: OfflineNegator, toks: SpecialTokens) -> Self {
        OfflineBackend {
            negator,
            toks,
            capabilities: BTreeSet::from([Capability::Generate]),
        }
    }
}

impl Backend for OfflineBackend {
    fn capabilities(&self) -> &BTreeSet<Capability> {
        &self.capabilities
    }

    fn generate(&self, prompt: &PromptString, params: &SamplingParams) -> Result<Vec<String>, BackendError> {
        params.validate()?;
        let (original, masked) = prompt.split(&self.toks).map_err(|e| BackendError::InvalidParams(e.to_string()))?;
        let Some(spans) = align_spans(original, masked, &self.toks.blank) else {
            return Ok(Vec::new());
        };
        let mut completions = self.negator.negate(masked, &spans, &self.toks);
        if completions.len() > params.num_return {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut picked = sample(&mut rng, completions.len(), params.num_return).into_vec();
            picked.sort_unstable();
            completions = picked.into_iter().map(|i| completions[i].clone()).collect();
        }
        Ok(apply_stops(completions, params))
    }

    fn score(&self, _text: &str) -> Result<ScoredSequence, BackendError> {
        Err(BackendError::Unsupported(Capability::Score))
    }
}
