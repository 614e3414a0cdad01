//! Lexicon- and morphology-based negation cue detection.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUNDLED: &str = include_str!("../../data/cues.tsv");

// longest first so "non-" wins over "non"
const PREFIXES: [&str; 8] = ["non-", "non", "dis", "un", "in", "im", "il", "ir"];
const SUFFIX: &str = "less";
const MIN_STEM: usize = 3;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("reading lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown optional cue {0:?}")]
    UnknownOptional(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CueClass {
    Verbal,
    Nonverbal,
    Affixal,
    Multiword,
}

/// A detected cue. Offsets count characters; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueSpan {
    pub start: usize,
    pub end: usize,
    pub cue_text: String,
    pub cue_class: CueClass,
}

#[derive(Debug, Clone, Default)]
pub struct CueLexicon {
    verbal: HashSet<String>,
    nonverbal: HashSet<String>,
    multiword: Vec<Vec<String>>,
    optional: Vec<(Vec<String>, bool)>,
    nonnegating: Vec<Vec<String>>,
    affixal: HashSet<String>,
    prefix_stems: HashSet<String>,
    suffix_stems: HashSet<String>,
    notcue: HashSet<String>,
    // base word -> its affixally negated form, e.g. "comfortable" -> "uncomfortable"
    negated_forms: HashMap<String, String>,
}

fn words_of(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.to_lowercase()).collect()
}

fn strip_prefix(word: &str) -> Option<&str> {
    PREFIXES.iter().find_map(|p| {
        word.strip_prefix(p)
            .map(|rest| rest.trim_start_matches('-'))
            .filter(|rest| rest.chars().count() >= MIN_STEM)
    })
}

fn strip_suffix(word: &str) -> Option<&str> {
    word.strip_suffix(SUFFIX)
        .filter(|stem| stem.chars().count() >= MIN_STEM)
}

/// Spelling repairs tried on a stripped stem.
fn stem_variants(stem: &str) -> Vec<String> {
    let mut out = vec![stem.to_string(), format!("{stem}e")];
    if let Some(s) = stem.strip_suffix('i') {
        out.push(format!("{s}y"));
    }
    let chars: Vec<char> = stem.chars().collect();
    if let [.., a, b] = chars.as_slice() {
        if a == b && !"aeiou".contains(*b) {
            out.push(chars[..chars.len() - 1].iter().collect());
        }
    }
    if let Some(s) = stem.strip_suffix("ily") {
        out.push(format!("{s}y"));
    }
    if let Some(s) = stem.strip_suffix("ally") {
        out.push(s.to_string());
    }
    if let Some(s) = stem.strip_suffix("ly") {
        out.push(s.to_string());
    }
    if let Some(s) = stem.strip_suffix("iness") {
        out.push(format!("{s}y"));
    }
    if let Some(s) = stem.strip_suffix("ness") {
        out.push(s.to_string());
    }
    out
}

impl CueLexicon {
    /// The lexicon shipped with the crate.
    pub fn bundled() -> &'static CueLexicon {
        static LEXICON: OnceLock<CueLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| CueLexicon::parse(BUNDLED).expect("bundled lexicon parses"))
    }

    pub fn bundled_text() -> &'static str {
        BUNDLED
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<CueLexicon, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        CueLexicon::parse(&text)
    }

    pub fn parse(text: &str) -> Result<CueLexicon, LexiconError> {
        let mut lex = CueLexicon::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (class, cue) = line.split_once('\t').ok_or_else(|| LexiconError::Syntax {
                line: lineno + 1,
                message: "expected class<TAB>cue".into(),
            })?;
            let cue = cue.trim().to_lowercase().replace('’', "'");
            if cue.is_empty() {
                return Err(LexiconError::Syntax {
                    line: lineno + 1,
                    message: "empty cue".into(),
                });
            }
            match class.trim() {
                "verbal" => {
                    lex.verbal.insert(cue);
                }
                "nonverbal" => {
                    lex.nonverbal.insert(cue);
                }
                "multiword" => lex.multiword.push(words_of(&cue)),
                "optional" => lex.optional.push((words_of(&cue), false)),
                "nonnegating" => lex.nonnegating.push(words_of(&cue)),
                "affixal" => lex.add_affixal(cue),
                "stem" => {
                    lex.prefix_stems.insert(cue);
                }
                "notcue" => {
                    lex.notcue.insert(cue);
                }
                other => {
                    return Err(LexiconError::Syntax {
                        line: lineno + 1,
                        message: format!("unknown cue class {other:?}"),
                    })
                }
            }
        }
        // longest sequences first
        lex.multiword.sort_by_key(|w| std::cmp::Reverse(w.len()));
        lex.optional.sort_by_key(|w| std::cmp::Reverse(w.0.len()));
        Ok(lex)
    }

    fn add_affixal(&mut self, word: String) {
        if let Some(stem) = strip_suffix(&word) {
            let stem = stem.to_string();
            self.negated_forms
                .entry(format!("{stem}ful"))
                .or_insert_with(|| word.clone());
            self.negated_forms.entry(stem.clone()).or_insert_with(|| word.clone());
            self.suffix_stems.insert(stem);
        } else if let Some(stem) = strip_prefix(&word) {
            let stem = stem.to_string();
            self.negated_forms.entry(stem.clone()).or_insert_with(|| word.clone());
            self.prefix_stems.insert(stem);
        }
        self.affixal.insert(word);
    }

    /// Turns on an `optional` multiword cue such as "lack of".
    pub fn enable_optional(&mut self, cue: &str) -> Result<(), LexiconError> {
        let wanted = words_of(cue);
        let entry = self
            .optional
            .iter_mut()
            .find(|(w, _)| *w == wanted)
            .ok_or_else(|| LexiconError::UnknownOptional(cue.to_string()))?;
        entry.1 = true;
        Ok(())
    }

    /// Affixally negated form of `base` when the lexicon knows one.
    pub fn negated_form(&self, base: &str) -> Option<&str> {
        self.negated_forms.get(&base.to_lowercase()).map(String::as_str)
    }

    pub fn is_affixal_negation(&self, word: &str) -> bool {
        let word = word.to_lowercase();
        if self.notcue.contains(&word) {
            return false;
        }
        if self.affixal.contains(&word) {
            return true;
        }
        if let Some(stem) = strip_suffix(&word) {
            if stem_variants(stem).iter().any(|v| self.suffix_stems.contains(v)) {
                return true;
            }
        }
        PREFIXES.iter().any(|p| {
            word.strip_prefix(p)
                .map(|rest| rest.trim_start_matches('-'))
                .filter(|rest| rest.chars().count() >= MIN_STEM)
                .is_some_and(|rest| stem_variants(rest).iter().any(|v| self.prefix_stems.contains(v)))
        })
    }

    fn single_word_class(&self, word: &str) -> Option<CueClass> {
        if self.verbal.contains(word) || word.ends_with("n't") {
            Some(CueClass::Verbal)
        } else if self.nonverbal.contains(word) {
            Some(CueClass::Nonverbal)
        } else if self.is_affixal_negation(word) {
            Some(CueClass::Affixal)
        } else {
            None
        }
    }

    /// Cues in `text`, left to right. Single-word cues only match whole words.
    pub fn detect_cues(&self, text: &str) -> Vec<CueSpan> {
        let chars: Vec<char> = text.chars().collect();
        let words = split_words(&chars);
        let lower: Vec<String> = words
            .iter()
            .map(|&(s, e)| chars[s..e].iter().collect::<String>().to_lowercase().replace('’', "'"))
            .collect();

        let seq_at = |i: usize, seq: &[String]| -> bool {
            i + seq.len() <= lower.len() && lower[i..i + seq.len()] == *seq
        };
        let span = |first: usize, last: usize, class: CueClass| CueSpan {
            start: words[first].0,
            end: words[last].1,
            cue_text: chars[words[first].0..words[last].1].iter().collect(),
            cue_class: class,
        };

        let mut out = Vec::new();
        let mut i = 0;
        'scan: while i < lower.len() {
            if let Some(seq) = self.nonnegating.iter().find(|s| seq_at(i, s)) {
                i += seq.len();
                continue;
            }
            let enabled = self.optional.iter().filter(|(_, on)| *on).map(|(s, _)| s);
            for seq in self.multiword.iter().chain(enabled) {
                if seq_at(i, seq) {
                    out.push(span(i, i + seq.len() - 1, CueClass::Multiword));
                    i += seq.len();
                    continue 'scan;
                }
            }
            if let Some(class) = self.single_word_class(&lower[i]) {
                out.push(span(i, i, class));
            }
            i += 1;
        }
        out
    }
}

/// Word boundaries as (start, end) char offsets. Apostrophes and hyphens
/// belong to a word when followed by a letter or digit.
fn split_words(chars: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let c = chars[i];
            let joiner = matches!(c, '\'' | '’' | '-')
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            if c.is_alphanumeric() || joiner {
                i += 1;
            } else {
                break;
            }
        }
        out.push((start, i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cues(text: &str) -> Vec<(String, CueClass)> {
        CueLexicon::bundled()
            .detect_cues(text)
            .into_iter()
            .map(|c| (c.cue_text, c.cue_class))
            .collect()
    }

    #[test]
    fn table_examples() {
        assert_eq!(
            cues("She is never happy to lend a helping hand to her friends"),
            vec![("never".into(), CueClass::Nonverbal)]
        );
        assert_eq!(
            cues("The water in the lake was impure, making it unsafe for drinking"),
            vec![("impure".into(), CueClass::Affixal), ("unsafe".into(), CueClass::Affixal)]
        );
        assert!(cues("The sun is up").is_empty());
    }

    #[test]
    fn verbal_and_multiword() {
        assert_eq!(cues("We didn't go"), vec![("didn't".into(), CueClass::Verbal)]);
        assert_eq!(cues("She won’t come"), vec![("won’t".into(), CueClass::Verbal)]);
        assert_eq!(cues("We did n't go"), vec![("n't".into(), CueClass::Verbal)]);
        assert_eq!(cues("No one came"), vec![("No one".into(), CueClass::Multiword)]);
        assert_eq!(cues("He no longer works"), vec![("no longer".into(), CueClass::Multiword)]);
        assert!(cues("It is not only cheap but good").is_empty());
        assert_eq!(cues("I cannot"), vec![("cannot".into(), CueClass::Verbal)]);
    }

    #[test]
    fn offsets_are_characters() {
        let text = "Café is not open";
        let found = CueLexicon::bundled().detect_cues(text);
        assert_eq!(found.len(), 1);
        let c = &found[0];
        assert_eq!((c.start, c.end), (8, 11));
        let sub: String = text.chars().skip(c.start).take(c.end - c.start).collect();
        assert_eq!(sub, c.cue_text);
    }

    #[test]
    fn affix_detection_uses_stems() {
        let lex = CueLexicon::bundled();
        for w in ["indifferent", "dispirited", "non-existent", "hopeless", "penniless", "unhappily", "Unsafe", "unloyal"] {
            assert!(lex.is_affixal_negation(w), "{w}");
        }
        let plain = [
            "under", "until", "unless", "unit", "union", "unique", "uncle", "universe", "income", "inform", "insure",
            "indeed", "inside", "instead", "interest", "invest", "index", "important", "impress", "improve", "import",
            "impact", "illness", "illusion", "iron", "irritate", "discount", "discover", "discuss", "dismiss",
            "display", "distance", "disease", "dish", "disk", "none", "nonetheless", "bless", "less", "unlike",
            "invaluable", "industry", "instance", "involve", "increase", "insect", "impose", "dispute", "dispatch",
            "challenges", "remained", "despite", "cause", "loyal", "struggles", "adversity", "sun",
        ];
        for w in plain {
            assert!(!lex.is_affixal_negation(w), "{w}");
        }
    }

    #[test]
    fn negated_forms() {
        let lex = CueLexicon::bundled();
        assert_eq!(lex.negated_form("comfortable"), Some("uncomfortable"));
        assert_eq!(lex.negated_form("useful"), Some("useless"));
        assert_eq!(lex.negated_form("pure"), Some("impure"));
        assert_eq!(lex.negated_form("zzz"), None);
    }

    #[test]
    fn optional_cues_toggle() {
        let mut lex = CueLexicon::bundled().clone();
        let s = "despite lack of challenges";
        assert!(lex.detect_cues(s).is_empty());
        lex.enable_optional("lack of").unwrap();
        assert_eq!(lex.detect_cues(s)[0].cue_text, "lack of");
        assert!(lex.enable_optional("nope").is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(CueLexicon::parse("verbal not\n").is_err());
        assert!(CueLexicon::parse("weird\tx\n").is_err());
        let lex = CueLexicon::parse("# c\nverbal\tnot\n").unwrap();
        assert_eq!(lex.detect_cues("not").len(), 1);
    }
}
