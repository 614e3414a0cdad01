use std::collections::{BTreeMap, HashMap};
use std::fmt;

use log::{debug, warn};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use super::config::{sentence_seed, RunConfig};
use super::record::{Completion, CorpusRecord, Generation};
use super::PipelineError;
use crate::backend::{Backend, BackendError, Capability};
use crate::eval::{
    build_report, nld_avg, normalized_tree_edit_distance, perplexity, self_bleu, sentence_tree, tree_edit_distance,
    EvalReport, SentenceMetrics,
};
use crate::filter::{filter_candidates, normalize, CueLexicon, DropReason, FilterConfig};
use crate::mask::{propose_masks, MaskConfig, BLANK};
use crate::prompt::{build_prompt, fill_blanks, parse_completion, RejectReason};
use crate::syntax::{parse_conllu, DepSentence};

/// Counts reported after a stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageSummary {
    pub sentences: usize,
    pub failed: usize,
    pub proposals: usize,
    pub completions: usize,
    pub rejected_completions: BTreeMap<RejectReason, usize>,
    pub candidates: usize,
    pub kept: usize,
    pub with_kept: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl StageSummary {
    fn absorb(&mut self, rec: &CorpusRecord) {
        self.sentences += 1;
        if !rec.errors.is_empty() {
            self.failed += 1;
        }
        self.proposals += rec.proposals.as_ref().map_or(0, Vec::len);
        for g in rec.generations.iter().flatten() {
            for c in &g.completions {
                self.completions += 1;
                if let Some(r) = &c.rejected {
                    *self.rejected_completions.entry(r.reason).or_default() += 1;
                }
            }
        }
        self.candidates += rec.candidates().len();
        if let Some(f) = &rec.filtered {
            self.kept += f.kept.len();
            self.with_kept += usize::from(!f.kept.is_empty());
            for d in &f.rejected {
                *self.dropped.entry(d.reason).or_default() += 1;
            }
        }
    }

    pub fn of(records: &[CorpusRecord]) -> StageSummary {
        let mut s = StageSummary::default();
        for r in records {
            s.absorb(r);
        }
        s
    }
}

impl fmt::Display for StageSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} sentences", self.sentences)?;
        if self.failed > 0 {
            write!(f, " ({} with errors)", self.failed)?;
        }
        write!(f, ", {} proposals", self.proposals)?;
        if self.completions > 0 {
            write!(f, ", {} completions", self.completions)?;
            for (reason, n) in &self.rejected_completions {
                write!(f, " [{reason:?}: {n}]")?;
            }
        }
        if self.candidates > 0 || self.kept > 0 {
            write!(
                f,
                ", {} candidates, {} kept ({} sentences with at least one)",
                self.candidates, self.kept, self.with_kept
            )?;
            for (reason, n) in &self.dropped {
                write!(f, " [{reason:?}: {n}]")?;
            }
        }
        Ok(())
    }
}

fn first_sentence(rec: &CorpusRecord) -> Result<Option<DepSentence>, String> {
    let Some(block) = &rec.conllu else {
        return Ok(None);
    };
    let mut sents = parse_conllu(block).map_err(|e| e.to_string())?;
    match sents.len() {
        0 => Err("conllu block holds no sentence".into()),
        1 => Ok(Some(sents.remove(0))),
        n => Err(format!("conllu block holds {n} sentences")),
    }
}

fn mask_one(mut rec: CorpusRecord, cfg: &RunConfig) -> CorpusRecord {
    let sent = match first_sentence(&rec) {
        Ok(Some(s)) => s,
        Ok(None) => {
            rec.errors.push("no conllu parse to mask".into());
            return rec;
        }
        Err(e) => {
            rec.errors.push(e);
            return rec;
        }
    };
    if sent.text() != rec.text {
        warn!("{}: record text differs from its parse; masks follow the parse", rec.sent_id);
    }
    let mask_cfg = MaskConfig {
        rng_seed: cfg.mask.rng_seed ^ sentence_seed(cfg.global_seed, &rec.sent_id),
        ..cfg.mask.clone()
    };
    match propose_masks(&sent, &mask_cfg) {
        Ok(p) => rec.proposals = Some(p),
        Err(e) => rec.errors.push(e.to_string()),
    }
    rec
}

/// Adds mask proposals to every record that carries a parse.
pub fn mask_records(records: Vec<CorpusRecord>, cfg: &RunConfig, pool: &ThreadPool) -> Vec<CorpusRecord> {
    pool.install(|| records.into_par_iter().map(|r| mask_one(r, cfg)).collect())
}

fn filter_config(cfg: &RunConfig, sent_id: &str) -> FilterConfig {
    FilterConfig {
        rng_seed: cfg.filter.rng_seed ^ sentence_seed(cfg.global_seed, sent_id),
        ..cfg.filter.clone()
    }
}

fn refilter(rec: &mut CorpusRecord, cfg: &RunConfig, lexicon: &CueLexicon) {
    let candidates = rec.candidates();
    rec.filtered = Some(filter_candidates(&rec.text, &candidates, &filter_config(cfg, &rec.sent_id), lexicon));
}

/// Generates, parses, fills and filters negations for one record.
pub fn augment_one(
    mut rec: CorpusRecord,
    cfg: &RunConfig,
    backend: &dyn Backend,
    lexicon: &CueLexicon,
) -> Result<CorpusRecord, BackendError> {
    let Some(proposals) = rec.proposals.clone() else {
        return Ok(rec);
    };
    let toks = &cfg.tokens;
    let params = crate::backend::SamplingParams {
        seed: cfg.sampling.seed ^ sentence_seed(cfg.global_seed, &rec.sent_id),
        ..cfg.sampling.clone()
    };
    let mut generations = Vec::with_capacity(proposals.len());
    for (i, proposal) in proposals.iter().enumerate() {
        let masked = proposal.masked_text.replace(BLANK, &toks.blank);
        let prompt = match build_prompt(&rec.text, &masked, toks) {
            Ok(p) => p,
            Err(e) => {
                rec.errors.push(format!("proposal {i}: {e}"));
                continue;
            }
        };
        let raws = backend.generate(&prompt, &params)?;
        debug!("{} proposal {i}: {} completions", rec.sent_id, raws.len());
        let completions = raws
            .into_iter()
            .map(|raw| match parse_completion(&raw, proposal.blank_count(), toks) {
                Ok(answers) => match fill_blanks(&masked, &answers, toks) {
                    Ok(sentence) => Completion {
                        raw,
                        sentence: Some(sentence),
                        rejected: None,
                    },
                    Err(e) => Completion {
                        raw,
                        sentence: None,
                        rejected: Some(crate::prompt::Rejection {
                            reason: RejectReason::CountMismatch,
                            detail: e.to_string(),
                        }),
                    },
                },
                Err(rejection) => Completion {
                    raw,
                    sentence: None,
                    rejected: Some(rejection),
                },
            })
            .collect();
        generations.push(Generation {
            proposal: i,
            prompt,
            completions,
        });
    }
    rec.generations = Some(generations);
    refilter(&mut rec, cfg, lexicon);
    Ok(rec)
}

/// Augments records in input order, handing each finished record to `emit`.
/// Work is done in parallel batches; the first backend failure stops the
/// stage after emitting every record that precedes it.
pub fn augment_records<F>(
    records: Vec<CorpusRecord>,
    cfg: &RunConfig,
    backend: &dyn Backend,
    lexicon: &CueLexicon,
    pool: &ThreadPool,
    mut emit: F,
) -> Result<(), PipelineError>
where
    F: FnMut(CorpusRecord) -> Result<(), PipelineError>,
{
    let batch = pool.current_num_threads().max(1) * 8;
    let mut records = records.into_iter().peekable();
    while records.peek().is_some() {
        let chunk: Vec<CorpusRecord> = records.by_ref().take(batch).collect();
        let results: Vec<Result<CorpusRecord, (String, BackendError)>> = pool.install(|| {
            chunk
                .into_par_iter()
                .map(|r| {
                    let id = r.sent_id.clone();
                    augment_one(r, cfg, backend, lexicon).map_err(|e| (id, e))
                })
                .collect()
        });
        for res in results {
            match res {
                Ok(rec) => emit(rec)?,
                Err((id, e)) => return Err(PipelineError::Backend { sent_id: id, source: e }),
            }
        }
    }
    Ok(())
}

/// Recomputes `filtered` from stored generations without generating again.
pub fn filter_records(records: Vec<CorpusRecord>, cfg: &RunConfig, lexicon: &CueLexicon, pool: &ThreadPool) -> Vec<CorpusRecord> {
    pool.install(|| {
        records
            .into_par_iter()
            .map(|mut r| {
                if r.generations.is_some() {
                    refilter(&mut r, cfg, lexicon);
                }
                r
            })
            .collect()
    })
}

fn metrics_for(
    rec: &CorpusRecord,
    cfg: &RunConfig,
    scorer: Option<&dyn Backend>,
    parses: &HashMap<String, DepSentence>,
) -> Option<SentenceMetrics> {
    let filtered = rec.filtered.as_ref()?;
    let kept: Vec<String> = filtered.kept.iter().map(|k| k.sentence.clone()).collect();
    let mut m = SentenceMetrics::default();
    match kept.len() {
        0 => m.skipped.empty_sets += 1,
        1 => m.skipped.singleton_sets += 1,
        _ => m.self_bleu = self_bleu(&kept, cfg.eval.self_bleu_max_n),
    }
    let original_tree = first_sentence(rec).ok().flatten().map(|s| sentence_tree(&s));
    let original_norm = normalize(&rec.text);
    for sentence in &kept {
        let pair = [(rec.text.as_str(), sentence.as_str())];
        if let Ok(d) = nld_avg(&pair, cfg.eval.distance_unit) {
            m.nld.push(d);
        }
        let tree = if normalize(sentence) == original_norm {
            original_tree.clone()
        } else {
            parses.get(sentence.trim()).map(sentence_tree)
        };
        match (&original_tree, tree) {
            (Some(a), Some(b)) => m.syntactic.push(if cfg.eval.normalized_ted {
                normalized_tree_edit_distance(a, &b)
            } else {
                tree_edit_distance(a, &b) as f64
            }),
            _ => m.skipped.no_parse += 1,
        }
        match scorer {
            Some(b) => match b.score(sentence).map_err(|e| e.to_string()).and_then(|s| perplexity(&s).map_err(|e| e.to_string())) {
                Ok(p) => m.ppl.push(p),
                Err(e) => {
                    debug!("{}: scoring failed: {e}", rec.sent_id);
                    m.skipped.unscored += 1;
                }
            },
            None => m.skipped.unscored += 1,
        }
    }
    Some(m)
}

/// Computes the corpus report over records that have a filtered set.
/// Perplexity needs a backend with the scoring capability.
pub fn evaluate_records(
    records: &[CorpusRecord],
    cfg: &RunConfig,
    backend: Option<&dyn Backend>,
    parses: &HashMap<String, DepSentence>,
    pool: &ThreadPool,
) -> EvalReport {
    let scorer = backend.filter(|b| b.supports(Capability::Score));
    let items: Vec<SentenceMetrics> = pool.install(|| {
        records
            .par_iter()
            .filter_map(|r| metrics_for(r, cfg, scorer, parses))
            .collect()
    });
    build_report(&items, scorer.is_some())
}
