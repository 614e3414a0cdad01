use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Metric values for one original sentence and its kept negations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SentenceMetrics {
    pub nld: Vec<f64>,
    pub syntactic: Vec<f64>,
    pub self_bleu: Option<f64>,
    pub ppl: Vec<f64>,
    pub skipped: Skipped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    /// Sentences with nothing kept.
    pub empty_sets: usize,
    /// Kept sets of one sentence, which have no Self-BLEU.
    pub singleton_sets: usize,
    /// Negations without a parse for the syntactic distance.
    pub no_parse: usize,
    /// Negations the scoring backend did not score.
    pub unscored: usize,
}

impl Skipped {
    fn add(&mut self, other: &Skipped) {
        self.empty_sets += other.empty_sets;
        self.singleton_sets += other.singleton_sets;
        self.no_parse += other.no_parse;
        self.unscored += other.unscored;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub sentences: usize,
    pub pairs: usize,
    pub sets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub n: usize,
}

impl MetricSummary {
    fn over<'a>(values: impl Iterator<Item = &'a f64>) -> Option<MetricSummary> {
        let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| MetricSummary { mean: sum / n as f64, n })
    }
}

/// Corpus-level closeness, diversity and quality columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nld: Option<MetricSummary>,
    pub syntactic: Option<MetricSummary>,
    pub self_bleu: Option<MetricSummary>,
    pub ppl: Option<MetricSummary>,
    /// Needs an external classifier; never computed locally.
    pub fluency: Option<MetricSummary>,
    /// Needs an external classifier; never computed locally.
    pub grammar: Option<MetricSummary>,
    pub counts: Counts,
    pub skipped: Skipped,
}

/// Aggregates per-sentence metrics. Perplexity is absent unless a scoring
/// backend was available.
pub fn build_report(items: &[SentenceMetrics], scoring_available: bool) -> EvalReport {
    let mut skipped = Skipped::default();
    for it in items {
        skipped.add(&it.skipped);
    }
    let ppl = if scoring_available {
        MetricSummary::over(items.iter().flat_map(|it| it.ppl.iter()))
    } else {
        None
    };
    let self_bleu_values: Vec<f64> = items.iter().filter_map(|it| it.self_bleu).collect();
    EvalReport {
        nld: MetricSummary::over(items.iter().flat_map(|it| it.nld.iter())),
        syntactic: MetricSummary::over(items.iter().flat_map(|it| it.syntactic.iter())),
        self_bleu: MetricSummary::over(self_bleu_values.iter()),
        ppl,
        fluency: None,
        grammar: None,
        counts: Counts {
            sentences: items.len(),
            pairs: items.iter().map(|it| it.nld.len()).sum(),
            sets: self_bleu_values.len(),
        },
        skipped,
    }
}

impl EvalReport {
    /// Aligned plain-text table, one metric per row.
    pub fn to_table(&self) -> String {
        let rows = [
            ("NLD", self.nld),
            ("Syntactic", self.syntactic),
            ("Self-BLEU", self.self_bleu),
            ("Fluency", self.fluency),
            ("Grammar", self.grammar),
            ("PPL", self.ppl),
        ];
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>12} {:>6}", "metric", "mean", "n");
        for (name, summary) in rows {
            match summary {
                Some(s) => {
                    let _ = writeln!(out, "{:<10} {:>12.3} {:>6}", name, s.mean, s.n);
                }
                None => {
                    let _ = writeln!(out, "{:<10} {:>12} {:>6}", name, "-", 0);
                }
            }
        }
        let _ = writeln!(
            out,
            "sentences={} pairs={} sets={} skipped: empty={} singleton={} no_parse={} unscored={}",
            self.counts.sentences,
            self.counts.pairs,
            self.counts.sets,
            self.skipped.empty_sets,
            self.skipped.singleton_sets,
            self.skipped.no_parse,
            self.skipped.unscored
        );
        out
    }
}
