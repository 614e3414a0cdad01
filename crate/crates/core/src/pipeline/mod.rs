//! Corpus-level stages over JSONL records: mask, augment, filter, eval.

mod config;
mod record;
mod stages;

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::info;
use rayon::{ThreadPool, ThreadPoolBuilder};
use thiserror::Error;

use crate::backend::{connect, Backend, BackendError};
use crate::eval::EvalReport;
use crate::filter::FilterError;
use crate::syntax::{parse_conllu, to_conllu, DepSentence, SyntaxError};

pub use config::{sentence_seed, EvalOptions, IoPaths, Overrides, RunConfig};
pub use record::{Completion, CorpusRecord, Generation};
pub use stages::{augment_one, augment_records, evaluate_records, filter_records, mask_records, StageSummary};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Lexicon(#[from] FilterError),
    #[error("backend failed on {sent_id}: {source}")]
    Backend { sent_id: String, source: BackendError },
}

impl PipelineError {
    pub(crate) fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 input/output, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Io { .. } | PipelineError::Input { .. } | PipelineError::Syntax(_) | PipelineError::Lexicon(_) => 2,
            PipelineError::Backend { .. } => 3,
        }
    }
}

fn display_path(path: Option<&Path>) -> String {
    path.map_or_else(|| "<stdin>".to_string(), |p| p.display().to_string())
}

fn read_text(path: Option<&Path>) -> Result<String, PipelineError> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| PipelineError::io(p, e)),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| PipelineError::io("<stdin>", e))?;
            Ok(s)
        }
    }
}

/// Records from CoNLL-U text, one per sentence.
pub fn records_from_conllu(text: &str) -> Result<Vec<CorpusRecord>, SyntaxError> {
    Ok(parse_conllu(text)?
        .into_iter()
        .map(|s| {
            let mut rec = CorpusRecord::new(s.sent_id(), s.text());
            rec.conllu = Some(to_conllu(&s));
            rec
        })
        .collect())
}

/// Records from JSONL text; blank lines are skipped.
pub fn records_from_jsonl(text: &str, source: &str) -> Result<Vec<CorpusRecord>, PipelineError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| PipelineError::Input {
            path: source.to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads CoNLL-U or JSONL, telling them apart by the first non-blank character.
pub fn read_records(path: Option<&Path>) -> Result<Vec<CorpusRecord>, PipelineError> {
    let text = read_text(path)?;
    let source = display_path(path);
    let records = if text.trim_start().starts_with('{') {
        records_from_jsonl(&text, &source)?
    } else {
        records_from_conllu(&text)?
    };
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.sent_id.as_str()) {
            return Err(PipelineError::Input {
                path: source,
                line: 0,
                message: format!("duplicate sent_id {:?}", r.sent_id),
            });
        }
    }
    Ok(records)
}

fn record_line(rec: &CorpusRecord) -> String {
    serde_json::to_string(rec).expect("records serialize to JSON")
}

/// Writes records as JSONL to `path`, or stdout when absent.
pub fn write_records(path: Option<&Path>, records: &[CorpusRecord]) -> Result<(), PipelineError> {
    let target = display_path(path).replace("<stdin>", "<stdout>");
    let err = |e| PipelineError::io(&target, e);
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(err)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for r in records {
        writeln!(out, "{}", record_line(r)).map_err(err)?;
    }
    out.flush().map_err(err)
}

/// Parses keyed by their `# text` comment, or by detokenized text without one.
pub fn load_parses(path: &Path) -> Result<HashMap<String, DepSentence>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(parse_conllu(&text)?
        .into_iter()
        .map(|s| (s.raw_text().trim().to_string(), s))
        .collect())
}

pub fn thread_pool(workers: usize) -> Result<ThreadPool, PipelineError> {
    ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))
}

fn backend_for(cfg: &RunConfig) -> Result<Box<dyn Backend>, PipelineError> {
    connect(&cfg.backend, &cfg.tokens).map_err(|e| PipelineError::Config(e.to_string()))
}

pub fn cursor_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".cursor");
    PathBuf::from(name)
}

/// Mask stage: input CoNLL-U or JSONL with `conllu`, output JSONL with proposals.
pub fn cmd_mask(cfg: &RunConfig) -> Result<StageSummary, PipelineError> {
    let records = read_records(cfg.io.input.as_deref())?;
    let pool = thread_pool(cfg.workers)?;
    let records = mask_records(records, cfg, &pool);
    write_records(cfg.io.output.as_deref(), &records)?;
    Ok(StageSummary::of(&records))
}

/// Augment stage. With an output file the stage is resumable: finished
/// sent_ids are appended to `{output}.cursor`, a rerun skips them, and the
/// cursor is removed once every record is written.
pub fn cmd_augment(cfg: &RunConfig) -> Result<StageSummary, PipelineError> {
    let records = read_records(cfg.io.input.as_deref())?;
    let backend = backend_for(cfg)?;
    let lexicon = cfg.filter.load_lexicon()?;
    let pool = thread_pool(cfg.workers)?;
    let mut summary = StageSummary::default();

    let Some(output) = cfg.io.output.as_deref() else {
        let mut done = Vec::new();
        augment_records(records, cfg, backend.as_ref(), &lexicon, &pool, |r| {
            done.push(r);
            Ok(())
        })?;
        write_records(None, &done)?;
        return Ok(StageSummary::of(&done));
    };

    let cursor = cursor_path(output);
    let (completed, out_file) = if cursor.exists() {
        let f = File::open(&cursor).map_err(|e| PipelineError::io(&cursor, e))?;
        let ids: HashSet<String> = BufReader::new(f)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::io(&cursor, e))?;
        info!("resuming: {} records already written", ids.len());
        let out = OpenOptions::new()
            .append(true)
            .create(true)
            .open(output)
            .map_err(|e| PipelineError::io(output, e))?;
        (ids, out)
    } else {
        let out = File::create(output).map_err(|e| PipelineError::io(output, e))?;
        File::create(&cursor).map_err(|e| PipelineError::io(&cursor, e))?;
        (HashSet::new(), out)
    };
    let mut out = BufWriter::new(out_file);
    let mut cursor_file = OpenOptions::new()
        .append(true)
        .open(&cursor)
        .map_err(|e| PipelineError::io(&cursor, e))?;

    let pending: Vec<CorpusRecord> = records.into_iter().filter(|r| !completed.contains(&r.sent_id)).collect();
    summary.sentences = completed.len();
    augment_records(pending, cfg, backend.as_ref(), &lexicon, &pool, |r| {
        writeln!(out, "{}", record_line(&r))
            .and_then(|_| out.flush())
            .map_err(|e| PipelineError::io(output, e))?;
        writeln!(cursor_file, "{}", r.sent_id).map_err(|e| PipelineError::io(&cursor, e))?;
        merge(&mut summary, StageSummary::of(std::slice::from_ref(&r)));
        Ok(())
    })?;
    drop(cursor_file);
    fs::remove_file(&cursor).map_err(|e| PipelineError::io(&cursor, e))?;
    Ok(summary)
}

fn merge(into: &mut StageSummary, one: StageSummary) {
    into.sentences += one.sentences;
    into.failed += one.failed;
    into.proposals += one.proposals;
    into.completions += one.completions;
    for (k, v) in one.rejected_completions {
        *into.rejected_completions.entry(k).or_default() += v;
    }
    into.candidates += one.candidates;
    into.kept += one.kept;
    into.with_kept += one.with_kept;
    for (k, v) in one.dropped {
        *into.dropped.entry(k).or_default() += v;
    }
}

/// Filter stage: re-runs filtering over stored generations.
pub fn cmd_filter(cfg: &RunConfig) -> Result<StageSummary, PipelineError> {
    let records = read_records(cfg.io.input.as_deref())?;
    let lexicon = cfg.filter.load_lexicon()?;
    let pool = thread_pool(cfg.workers)?;
    let records = filter_records(records, cfg, &lexicon, &pool);
    write_records(cfg.io.output.as_deref(), &records)?;
    Ok(StageSummary::of(&records))
}

fn report_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes to JSON") + "\n"
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| PipelineError::io(p, e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| PipelineError::io("<stdout>", e)),
    }
}

fn evaluate(records: &[CorpusRecord], cfg: &RunConfig) -> Result<EvalReport, PipelineError> {
    let parses = match &cfg.io.parses {
        Some(p) => load_parses(p)?,
        None => HashMap::new(),
    };
    let backend = backend_for(cfg)?;
    let pool = thread_pool(cfg.workers)?;
    Ok(evaluate_records(records, cfg, Some(backend.as_ref()), &parses, &pool))
}

/// Eval stage: writes the report JSON to `report`, else `output`, else stdout.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport, PipelineError> {
    let records = read_records(cfg.io.input.as_deref())?;
    let report = evaluate(&records, cfg)?;
    write_text(cfg.io.report.as_deref().or(cfg.io.output.as_deref()), &report_json(&report))?;
    Ok(report)
}

/// Mask, augment and evaluate in one pass. Records go to `output`, the
/// report to `report` when set.
pub fn cmd_run(cfg: &RunConfig) -> Result<(StageSummary, EvalReport), PipelineError> {
    let records = read_records(cfg.io.input.as_deref())?;
    let backend = backend_for(cfg)?;
    let lexicon = cfg.filter.load_lexicon()?;
    let pool = thread_pool(cfg.workers)?;
    let masked = mask_records(records, cfg, &pool);
    let mut done = Vec::with_capacity(masked.len());
    augment_records(masked, cfg, backend.as_ref(), &lexicon, &pool, |r| {
        done.push(r);
        Ok(())
    })?;
    write_records(cfg.io.output.as_deref(), &done)?;
    let report = evaluate(&done, cfg)?;
    if let Some(p) = cfg.io.report.as_deref() {
        write_text(Some(p), &report_json(&report))?;
    }
    Ok((StageSummary::of(&done), report))
}

/// The report as written by [`cmd_eval`].
pub fn render_report(report: &EvalReport) -> String {
    report_json(report)
}
