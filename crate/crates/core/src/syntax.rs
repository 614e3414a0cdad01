//! Dependency sentences read from CoNLL-U, and the tree queries the masking
//! rules and the syntactic metric need.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("sentence {sentence}, line {line}: {message}")]
    Parse {
        sentence: String,
        line: usize,
        message: String,
    },
    #[error("sentence {sentence}: {message}")]
    Tree { sentence: String, message: String },
    #[error("token index {index} out of range 1..={len}")]
    InvalidIndex { index: usize, len: usize },
    #[error("invalid span [{start}, {end}] for a sentence of {len} tokens")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("overlapping insert spans [{}, {}] and [{}, {}]", .0.start, .0.end, .1.start, .1.end)]
    OverlappingSpans(SpanRange, SpanRange),
}

/// One syntactic word of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position.
    pub index: usize,
    pub surface: String,
    pub upos: String,
    pub deprel: String,
    /// Governing token, 0 for the root.
    pub head: usize,
    pub space_after: bool,
}

/// Inclusive range of 1-based token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanRange {
    pub start: usize,
    pub end: usize,
}

impl SpanRange {
    pub fn new(start: usize, end: usize, len: usize) -> Result<Self, SyntaxError> {
        if start == 0 || start > end || end > len {
            return Err(SyntaxError::InvalidSpan { start, end, len });
        }
        Ok(SpanRange { start, end })
    }

    pub fn single(index: usize) -> Self {
        SpanRange {
            start: index,
            end: index,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn overlaps(&self, other: &SpanRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// True when the spans overlap or touch with no token in between.
    pub fn abuts(&self, other: &SpanRange) -> bool {
        self.start <= other.end + 1 && other.start <= self.end + 1
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

impl fmt::Display for SpanRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// A validated dependency tree over a tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepSentence {
    sent_id: String,
    raw_text: String,
    tokens: Vec<Token>,
    root: usize,
    // children[i] holds the dependents of token i + 1 in surface order
    children: Vec<Vec<usize>>,
}

impl DepSentence {
    /// Validates index contiguity, head ranges, a single root and acyclicity.
    /// `raw_text` defaults to the detokenized token sequence.
    pub fn new(
        sent_id: impl Into<String>,
        tokens: Vec<Token>,
        raw_text: Option<String>,
    ) -> Result<Self, SyntaxError> {
        let sent_id = sent_id.into();
        let tree_err = |message: String| SyntaxError::Tree {
            sentence: sent_id.clone(),
            message,
        };
        let n = tokens.len();
        if n == 0 {
            return Err(tree_err("sentence has no tokens".into()));
        }
        let mut roots = Vec::new();
        for (pos, tok) in tokens.iter().enumerate() {
            if tok.index != pos + 1 {
                return Err(tree_err(format!(
                    "token ids are not contiguous: expected {}, found {}",
                    pos + 1,
                    tok.index
                )));
            }
            if tok.head > n {
                return Err(tree_err(format!(
                    "token {} has head {} outside 0..={}",
                    tok.index, tok.head, n
                )));
            }
            if tok.head == tok.index {
                return Err(tree_err(format!("token {} is its own head", tok.index)));
            }
            if tok.head == 0 {
                roots.push(tok.index);
            }
        }
        if roots.len() != 1 {
            return Err(tree_err(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        // every head chain must reach the root within n steps
        for tok in &tokens {
            let mut cur = tok.index;
            let mut steps = 0;
            while cur != 0 {
                if steps > n {
                    return Err(tree_err(format!(
                        "cyclic head links through token {}",
                        tok.index
                    )));
                }
                cur = tokens[cur - 1].head;
                steps += 1;
            }
        }
        let mut children = vec![Vec::new(); n];
        for tok in &tokens {
            if tok.head != 0 {
                children[tok.head - 1].push(tok.index);
            }
        }
        let mut sent = DepSentence {
            sent_id,
            raw_text: String::new(),
            tokens,
            root: roots[0],
            children,
        };
        sent.raw_text = match raw_text {
            Some(t) => t,
            None => sent.text(),
        };
        Ok(sent)
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    /// Text from the `# text` comment when present, otherwise the detokenized tokens.
    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn full_span(&self) -> SpanRange {
        SpanRange {
            start: 1,
            end: self.len(),
        }
    }

    pub fn token(&self, index: usize) -> Result<&Token, SyntaxError> {
        self.check(index)?;
        Ok(&self.tokens[index - 1])
    }

    pub fn children(&self, index: usize) -> Result<&[usize], SyntaxError> {
        self.check(index)?;
        Ok(&self.children[index - 1])
    }

    fn check(&self, index: usize) -> Result<(), SyntaxError> {
        if index == 0 || index > self.len() {
            return Err(SyntaxError::InvalidIndex {
                index,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// `index` plus every token whose head chain passes through it.
    pub fn descendants(&self, index: usize) -> Result<BTreeSet<usize>, SyntaxError> {
        self.check(index)?;
        let mut out = BTreeSet::new();
        let mut stack = vec![index];
        while let Some(i) = stack.pop() {
            out.insert(i);
            stack.extend(self.children[i - 1].iter().copied());
        }
        Ok(out)
    }

    /// Contiguous cover of the subtree rooted at `index`. Non-projective
    /// subtrees are widened to their [min, max] hull.
    pub fn subtree_span(&self, index: usize) -> Result<SpanRange, SyntaxError> {
        let desc = self.descendants(index)?;
        let start = *desc.first().expect("descendants contains index");
        let end = *desc.last().expect("descendants contains index");
        Ok(SpanRange { start, end })
    }

    /// Detokenized sentence honoring `space_after`.
    pub fn text(&self) -> String {
        self.render_text(&BTreeSet::new(), &BTreeMap::new())
            .expect("rendering without inserts cannot fail")
    }

    /// Surface text of a span, with internal spacing preserved.
    pub fn span_text(&self, span: SpanRange) -> Result<String, SyntaxError> {
        SpanRange::new(span.start, span.end, self.len())?;
        let mut out = String::new();
        for i in span.indices() {
            let tok = &self.tokens[i - 1];
            out.push_str(&tok.surface);
            if i != span.end && tok.space_after {
                out.push(' ');
            }
        }
        Ok(out)
    }

    /// Renders the sentence with `exclude`d tokens dropped and each `insert`
    /// string placed at its span start. The spacing after an insert is the
    /// `space_after` of the span's last token.
    pub fn render_text(
        &self,
        exclude: &BTreeSet<usize>,
        insert: &BTreeMap<SpanRange, String>,
    ) -> Result<String, SyntaxError> {
        let mut prev: Option<&SpanRange> = None;
        for span in insert.keys() {
            SpanRange::new(span.start, span.end, self.len())?;
            if let Some(p) = prev {
                if p.overlaps(span) {
                    return Err(SyntaxError::OverlappingSpans(*p, *span));
                }
            }
            prev = Some(span);
        }
        let mut starts: BTreeMap<usize, (&SpanRange, &String)> = BTreeMap::new();
        for (span, s) in insert {
            starts.insert(span.start, (span, s));
        }

        let mut pieces: Vec<(&str, bool)> = Vec::with_capacity(self.len());
        for tok in &self.tokens {
            if let Some((span, s)) = starts.get(&tok.index) {
                pieces.push((s.as_str(), self.tokens[span.end - 1].space_after));
            }
            if !exclude.contains(&tok.index) {
                pieces.push((tok.surface.as_str(), tok.space_after));
            }
        }

        let mut out = String::new();
        let mut pending_space = false;
        for (text, space_after) in pieces {
            let text = text.trim();
            if text.is_empty() {
                pending_space |= space_after;
                continue;
            }
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            out.push_str(text);
            pending_space = space_after;
        }
        Ok(out)
    }
}

fn parse_err(sentence: &str, line: usize, message: impl Into<String>) -> SyntaxError {
    SyntaxError::Parse {
        sentence: sentence.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads every sentence block of a CoNLL-U document.
///
/// Multiword token ranges (`3-4`) and empty nodes (`5.1`) are skipped.
/// Sentences without a `# sent_id` comment are named `s{n}` by block order.
pub fn parse_conllu(text: &str) -> Result<Vec<DepSentence>, SyntaxError> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !block.is_empty() {
                out.push(parse_block(&block, out.len() + 1)?);
                block.clear();
            }
        } else {
            block.push((lineno + 1, line));
        }
    }
    if !block.is_empty() {
        out.push(parse_block(&block, out.len() + 1)?);
    }
    Ok(out)
}

fn parse_block(lines: &[(usize, &str)], ordinal: usize) -> Result<DepSentence, SyntaxError> {
    let mut sent_id = None;
    let mut raw_text = None;
    for (_, line) in lines {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => sent_id = Some(value.trim().to_string()),
                    "text" => raw_text = Some(value.trim().to_string()),
                    _ => {}
                }
            }
        }
    }
    let sent_id = sent_id.unwrap_or_else(|| format!("s{ordinal}"));

    let mut tokens = Vec::new();
    for &(lineno, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(parse_err(
                &sent_id,
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(&sent_id, lineno, format!("non-integer id {:?}", cols[0])))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| parse_err(&sent_id, lineno, format!("non-integer head {:?}", cols[6])))?;
        let space_after = !cols[9].split('|').any(|m| m == "SpaceAfter=No");
        tokens.push(Token {
            index,
            surface: cols[1].to_string(),
            upos: cols[3].to_string(),
            deprel: cols[7].to_string(),
            head,
            space_after,
        });
    }
    let last_line = lines.last().map(|l| l.0).unwrap_or(0);
    DepSentence::new(sent_id.clone(), tokens, raw_text).map_err(|e| match e {
        SyntaxError::Tree { sentence, message } => SyntaxError::Parse {
            sentence,
            line: last_line,
            message,
        },
        other => other,
    })
}

/// Serializes a sentence back to a CoNLL-U block (unknown columns as `_`).
pub fn to_conllu(sent: &DepSentence) -> String {
    let mut out = format!("# sent_id = {}\n# text = {}\n", sent.sent_id(), sent.raw_text());
    for t in sent.tokens() {
        let misc = if t.space_after { "_" } else { "SpaceAfter=No" };
        out.push_str(&format!(
            "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t{}\n",
            t.index, t.surface, t.upos, t.head, t.deprel, misc
        ));
    }
    out
}
