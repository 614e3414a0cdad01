use std::collections::HashMap;

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU of `hypothesis` against `references`, whitespace tokens.
///
/// Uniform weights over orders `1..=min(max_n, |hypothesis|)`, clipped counts
/// against the per-reference maximum, brevity penalty against the closest
/// reference length, and add-one smoothing for orders above 1 that have no
/// match. A hypothesis sharing no unigram with any reference scores 0.
pub fn sentence_bleu(hypothesis: &str, references: &[&str], max_n: usize) -> f64 {
    let hyp: Vec<&str> = hypothesis.split_whitespace().collect();
    let refs: Vec<Vec<&str>> = references.iter().map(|r| r.split_whitespace().collect()).collect();
    if hyp.is_empty() || refs.is_empty() || max_n == 0 {
        return 0.0;
    }
    let orders = max_n.min(hyp.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let hyp_counts = ngram_counts(&hyp, n);
        let mut max_ref: HashMap<&[&str], usize> = HashMap::new();
        for r in &refs {
            for (gram, c) in ngram_counts(r, n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        let total: usize = hyp_counts.values().sum();
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if matched > 0 {
            matched as f64 / total as f64
        } else if n == 1 {
            return 0.0;
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += precision.ln();
    }
    let c = hyp.len() as f64;
    let r = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(hyp.len()), len))
        .unwrap_or(0) as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / orders as f64).exp()
}

/// Mean BLEU of each sentence against all the others. `None` for fewer than two.
pub fn self_bleu(set: &[String], max_n: usize) -> Option<f64> {
    if set.len() < 2 {
        return None;
    }
    let total: f64 = (0..set.len())
        .map(|i| {
            let others: Vec<&str> = set
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, s)| s.as_str())
                .collect();
            sentence_bleu(&set[i], &others, max_n)
        })
        .sum();
    Some(total / set.len() as f64)
}
