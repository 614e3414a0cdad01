//! C ABI over the negforge library.
//!
//! Every fallible function returns an [`NfStatus`] and writes its result
//! through an out pointer. On failure, [`nf_last_error`] describes the
//! problem for the calling thread. Strings returned through `char **` are
//! owned by the caller and must be released with [`nf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use negforge::eval::{perplexity, self_bleu, sentence_tree, tree_edit_distance};
use negforge::filter::{norm_levenshtein, DistanceUnit};
use negforge::{
    build_prompt, filter_candidates, parse_conllu, propose_masks, CueLexicon, DepSentence, FilterConfig, MaskConfig,
    ScoredSequence, SpecialTokens,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// A string argument was not UTF-8.
    InvalidUtf8 = 2,
    /// CoNLL-U or JSON input could not be parsed.
    ParseError = 3,
    /// An argument was out of range or otherwise unusable.
    InvalidArgument = 4,
    /// A configuration object was rejected.
    ConfigError = 5,
    /// The library panicked; the handle involved should be discarded.
    Internal = 6,
}

/// Token unit for edit distances.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfDistanceUnit {
    Token = 0,
    Char = 1,
}

/// Parsed CoNLL-U sentences.
pub struct NfCorpus {
    sentences: Vec<DepSentence>,
}

/// A filter configuration together with its cue lexicon.
pub struct NfFilter {
    config: FilterConfig,
    lexicon: CueLexicon,
}

struct Failure(NfStatus, String);

impl Failure {
    fn new(status: NfStatus, message: impl Into<String>) -> Self {
        Failure(status, message.into())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let clean = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NfStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            NfStatus::Internal
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(NfStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(NfStatus::InvalidUtf8, format!("{name}: {e}")))
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn optional_text<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, name).map(Some)
    }
}

/// # Safety
/// `out` is null or valid for one write.
unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(NfStatus::NullArgument, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `out` is null or valid for one write.
unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::new(NfStatus::Internal, "result holds a NUL byte"))?;
    write_out(out, c.into_raw())
}

fn parse_json<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(s).map_err(|e| Failure::new(NfStatus::ParseError, format!("{what}: {e}")))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string(value).map_err(|e| Failure::new(NfStatus::Internal, e.to_string()))
}

fn single_sentence(conllu: &str, what: &str) -> Result<DepSentence, Failure> {
    let mut sents = parse_conllu(conllu).map_err(|e| Failure::new(NfStatus::ParseError, e.to_string()))?;
    if sents.len() != 1 {
        return Err(Failure::new(
            NfStatus::InvalidArgument,
            format!("{what} holds {} sentences, expected 1", sents.len()),
        ));
    }
    Ok(sents.remove(0))
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, empty after a success.
/// Valid until the next call into the library on the same thread; do not free.
#[no_mangle]
pub extern "C" fn nf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a pointer previously returned through a `char **` out
/// parameter and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a CoNLL-U document into a corpus handle.
///
/// # Safety
/// `conllu` is a NUL-terminated string; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_corpus_parse_conllu(conllu: *const c_char, out: *mut *mut NfCorpus) -> NfStatus {
    run(|| {
        let text = text(conllu, "conllu")?;
        let sentences = parse_conllu(text).map_err(|e| Failure::new(NfStatus::ParseError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(NfCorpus { sentences })))
    })
}

/// Number of sentences in the corpus; 0 for null.
///
/// # Safety
/// `corpus` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nf_corpus_len(corpus: *const NfCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.sentences.len())
}

/// Mask proposals for sentence `index` (0-based) as a JSON array.
/// `config_json` is a mask configuration object or null for defaults.
///
/// # Safety
/// `corpus` is a live handle; `config_json` is null or NUL-terminated;
/// `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_corpus_propose_masks_json(
    corpus: *const NfCorpus,
    index: usize,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> NfStatus {
    run(|| {
        let corpus = corpus
            .as_ref()
            .ok_or_else(|| Failure::new(NfStatus::NullArgument, "corpus is null"))?;
        let sent = corpus.sentences.get(index).ok_or_else(|| {
            Failure::new(
                NfStatus::InvalidArgument,
                format!("index {index} out of range for {} sentences", corpus.sentences.len()),
            )
        })?;
        let cfg: MaskConfig = match optional_text(config_json, "config_json")? {
            Some(s) => parse_json(s, "mask config")?,
            None => MaskConfig::default(),
        };
        let proposals = propose_masks(sent, &cfg).map_err(|e| Failure::new(NfStatus::ConfigError, e.to_string()))?;
        write_string(out, to_json(&proposals)?)
    })
}

/// Releases a corpus. Null is ignored.
///
/// # Safety
/// `corpus` is null or a handle from [`nf_corpus_parse_conllu`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_corpus_free(corpus: *mut NfCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Creates a filter from a JSON filter configuration, or defaults when null.
/// A `cue_lexicon_path` in the configuration is loaded here.
///
/// # Safety
/// `config_json` is null or NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_filter_new(config_json: *const c_char, out: *mut *mut NfFilter) -> NfStatus {
    run(|| {
        let config: FilterConfig = match optional_text(config_json, "config_json")? {
            Some(s) => parse_json(s, "filter config")?,
            None => FilterConfig::default(),
        };
        config
            .validate()
            .map_err(|e| Failure::new(NfStatus::ConfigError, e.to_string()))?;
        let lexicon = config
            .load_lexicon()
            .map_err(|e| Failure::new(NfStatus::ConfigError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(NfFilter { config, lexicon })))
    })
}

/// Filters candidate negations of `original`. `candidates_json` is a JSON
/// array of strings; the result is the filtered set as JSON.
///
/// # Safety
/// `filter` is a live handle; the strings are NUL-terminated; `out` is
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_filter_run_json(
    filter: *const NfFilter,
    original: *const c_char,
    candidates_json: *const c_char,
    out: *mut *mut c_char,
) -> NfStatus {
    run(|| {
        let filter = filter
            .as_ref()
            .ok_or_else(|| Failure::new(NfStatus::NullArgument, "filter is null"))?;
        let original = text(original, "original")?;
        let candidates: Vec<String> = parse_json(text(candidates_json, "candidates_json")?, "candidates")?;
        let set = filter_candidates(original, &candidates, &filter.config, &filter.lexicon);
        write_string(out, to_json(&set)?)
    })
}

/// Releases a filter. Null is ignored.
///
/// # Safety
/// `filter` is null or a handle from [`nf_filter_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_filter_free(filter: *mut NfFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Edit distance divided by the longer length.
///
/// # Safety
/// `a` and `b` are NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_norm_levenshtein(
    a: *const c_char,
    b: *const c_char,
    unit: NfDistanceUnit,
    out: *mut f64,
) -> NfStatus {
    run(|| {
        let unit = match unit {
            NfDistanceUnit::Token => DistanceUnit::Token,
            NfDistanceUnit::Char => DistanceUnit::Char,
        };
        write_out(out, norm_levenshtein(text(a, "a")?, text(b, "b")?, unit))
    })
}

/// Self-BLEU of a JSON array of sentences. Needs at least two sentences.
///
/// # Safety
/// `sentences_json` is NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_self_bleu(sentences_json: *const c_char, max_n: usize, out: *mut f64) -> NfStatus {
    run(|| {
        let set: Vec<String> = parse_json(text(sentences_json, "sentences_json")?, "sentences")?;
        if max_n == 0 {
            return Err(Failure::new(NfStatus::InvalidArgument, "max_n must be >= 1"));
        }
        let value = self_bleu(&set, max_n)
            .ok_or_else(|| Failure::new(NfStatus::InvalidArgument, "self-BLEU needs at least two sentences"))?;
        write_out(out, value)
    })
}

/// Perplexity from `len` natural-log token probabilities.
///
/// # Safety
/// `logprobs` points to `len` readable doubles; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_perplexity(logprobs: *const f64, len: usize, out: *mut f64) -> NfStatus {
    run(|| {
        if logprobs.is_null() {
            return Err(Failure::new(NfStatus::NullArgument, "logprobs is null"));
        }
        let lps = std::slice::from_raw_parts(logprobs, len).to_vec();
        let seq = ScoredSequence::new(vec![String::new(); len], lps)
            .map_err(|e| Failure::new(NfStatus::InvalidArgument, e.to_string()))?;
        let ppl = perplexity(&seq).map_err(|e| Failure::new(NfStatus::InvalidArgument, e.to_string()))?;
        write_out(out, ppl)
    })
}

/// Tree edit distance between the UPOS-labeled dependency trees of two
/// single-sentence CoNLL-U documents.
///
/// # Safety
/// `a` and `b` are NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_tree_edit_distance_conllu(
    a: *const c_char,
    b: *const c_char,
    out: *mut usize,
) -> NfStatus {
    run(|| {
        let ta = sentence_tree(&single_sentence(text(a, "a")?, "a")?);
        let tb = sentence_tree(&single_sentence(text(b, "b")?, "b")?);
        write_out(out, tree_edit_distance(&ta, &tb))
    })
}

/// Builds a generation prompt with the default special tokens.
///
/// # Safety
/// `original` and `masked` are NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_build_prompt(
    original: *const c_char,
    masked: *const c_char,
    out: *mut *mut c_char,
) -> NfStatus {
    run(|| {
        let prompt = build_prompt(text(original, "original")?, text(masked, "masked")?, &SpecialTokens::default())
            .map_err(|e| Failure::new(NfStatus::InvalidArgument, e.to_string()))?;
        write_string(out, prompt.as_str().to_string())
    })
}

/// Negation cues found in `text` by the bundled lexicon, as a JSON array.
///
/// # Safety
/// `sentence` is NUL-terminated; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn nf_detect_cues_json(sentence: *const c_char, out: *mut *mut c_char) -> NfStatus {
    run(|| {
        let cues = CueLexicon::bundled().detect_cues(text(sentence, "sentence")?);
        write_string(out, to_json(&cues)?)
    })
}
