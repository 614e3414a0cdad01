//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any FAIL.

mod common;

use std::collections::HashSet;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use negforge::eval::{nld_avg, perplexity, self_bleu, tree_edit_distance};
use negforge::filter::{edit_distance, normalize, norm_levenshtein, DistanceUnit};
use negforge::mask::match_rules;
use negforge::pipeline::{cmd_run, CorpusRecord, Overrides, RunConfig};
use negforge::prompt::RejectReason;
use negforge::{parse_completion, parse_conllu, propose_masks, Granularity, MaskConfig, ScoredSequence, SpecialTokens};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{edit_oracle, random_sentence, random_tree, to_labeled, trees_of_size, ScriptSearch};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rule_fixture() -> Outcome {
    let text = fs::read_to_string(common::fixture("rules.conllu")).map_err(|e| e.to_string())?;
    let expected = fs::read_to_string(common::fixture("rules.expected")).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let sents = parse_conllu(&text).map_err(|e| e.to_string())?;
    let got: Vec<String> = sents
        .iter()
        .map(|s| {
            let pairs: Vec<String> = match_rules(s).iter().map(|(i, r)| format!("{i}:{r}")).collect();
            format!("{}\t{}", s.sent_id(), pairs.join(" "))
        })
        .collect();
    let elapsed = start.elapsed();
    let want: Vec<&str> = expected.lines().filter(|l| !l.trim().is_empty()).collect();
    ensure(sents.len() == 12, || format!("{} sentences in fixture", sents.len()))?;
    for (g, w) in got.iter().zip(&want) {
        ensure(g == w, || format!("got {g:?}, want {w:?}"))?;
    }
    ensure(got.len() == want.len(), || "line count differs".into())?;
    let apple = sents.iter().any(|s| s.raw_text() == "She was eating an apple.");
    ensure(apple, || "worked example missing".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("12 sentences match in {elapsed:?}"))
}

fn mask_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut proposals = 0;
    for id in 0..1000 {
        let sent = random_sentence(&mut rng, id);
        let original = sent.text();
        for granularity in [Granularity::Token, Granularity::Subtree] {
            let cfg = MaskConfig {
                granularity,
                rng_seed: id as u64,
                max_proposals: 12,
                ..MaskConfig::default()
            };
            let props = propose_masks(&sent, &cfg).map_err(|e| e.to_string())?;
            for p in props {
                proposals += 1;
                let back = p.reconstruct(&p.span_texts());
                ensure(back.as_deref() == Some(original.as_str()), || {
                    format!("{original:?} -> {:?} -> {back:?}", p.masked_text)
                })?;
            }
        }
    }
    Ok(format!("1000 sentences, {proposals} proposals, 0 failures"))
}

/// Runs the filter stage through the binary and checks the kept set has no
/// normalized duplicates and a cue in every sentence.
fn replay_kept(config: Option<&str>) -> Result<HashSet<String>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("filtered.jsonl");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_negforge"));
    cmd.args(["filter", "--threshold", "0.5", "--epsilon", "10", "-i"])
        .arg(common::fixture("loyal_generations.jsonl"))
        .arg("-o")
        .arg(&out);
    if let Some(json) = config {
        let path = dir.path().join("cfg.json");
        fs::write(&path, json).map_err(|e| e.to_string())?;
        cmd.arg("--config").arg(path);
    }
    let status = cmd.output().map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    let rec: CorpusRecord =
        serde_json::from_str(&fs::read_to_string(&out).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let set = rec.filtered.ok_or("no filtered set")?;
    let kept: Vec<String> = set.kept.iter().map(|k| normalize(&k.sentence)).collect();
    let unique: HashSet<String> = kept.iter().cloned().collect();
    ensure(unique.len() == kept.len(), || "duplicate after normalization".into())?;
    ensure(set.kept.iter().all(|k| !k.cues.is_empty()), || "kept sentence without cue".into())?;
    Ok(unique)
}

fn filter_replay() -> Outcome {
    let expected: HashSet<String> = fs::read_to_string(common::fixture("loyal_filtered.txt"))
        .map_err(|e| e.to_string())?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(normalize)
        .collect();
    let ours = replay_kept(None)?;
    ensure(ours == expected, || {
        format!(
            "missing {:?}, extra {:?}",
            expected.difference(&ours).collect::<Vec<_>>(),
            ours.difference(&expected).collect::<Vec<_>>()
        )
    })?;
    let widened = replay_kept(Some(r#"{"filter": {"optional_cues": ["lack of"]}}"#))?;
    let extra: Vec<&String> = widened.difference(&expected).collect();
    ensure(extra.iter().all(|s| s.contains("lack of")), || format!("unexpected extras {extra:?}"))?;
    Ok(format!(
        "{} kept, equal to the reference set; with \"lack of\" on, {} extra all carry that cue",
        ours.len(),
        extra.len()
    ))
}

fn levenshtein_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet: Vec<char> = "abcdé ".chars().collect();
    let vocab = ["the", "cat", "not", "sat", "no", "mat"];
    for _ in 0..10_000 {
        let a: String = (0..rng.random_range(0..=8)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        let b: String = (0..rng.random_range(0..=8)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let got = edit_distance(&a, &b, DistanceUnit::Char);
        ensure(got == edit_oracle(&ca, &cb), || format!("char {a:?} {b:?}: {got}"))?;

        let ta: Vec<&str> = (0..rng.random_range(0..=6)).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
        let tb: Vec<&str> = (0..rng.random_range(0..=6)).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
        let got = edit_distance(&ta.join(" "), &tb.join(" "), DistanceUnit::Token);
        ensure(got == edit_oracle(&ta, &tb), || format!("token {ta:?} {tb:?}: {got}"))?;
    }
    let ks = edit_distance("kitten", "sitting", DistanceUnit::Char);
    ensure(ks == 3, || format!("kitten/sitting = {ks}"))?;
    Ok("10000 char + 10000 token pairs agree; kitten/sitting = 3".into())
}

fn ted_oracle() -> Outcome {
    let small: Vec<_> = (1..=4).flat_map(|n| trees_of_size(n, 2)).collect();
    let labeled: Vec<_> = small.iter().map(to_labeled).collect();
    let mut search = ScriptSearch::new(2, 4);
    let n = small.len();
    let mut d = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in 0..n {
            let got = tree_edit_distance(&labeled[i], &labeled[j]);
            let want = search.distance(&small[i], &small[j]);
            ensure(got == want, || {
                format!("{} vs {}: {got}, search {want}", labeled[i].to_brackets(), labeled[j].to_brackets())
            })?;
            d[i][j] = got;
        }
    }
    for i in 0..n {
        ensure(d[i][i] == 0, || "d(t, t) != 0".into())?;
        for j in 0..n {
            ensure(d[i][j] == d[j][i], || "asymmetric".into())?;
            ensure(i == j || d[i][j] > 0, || "distinct trees at distance 0".into())?;
            for k in 0..n {
                ensure(d[i][k] <= d[i][j] + d[j][k], || "triangle inequality".into())?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut search5 = ScriptSearch::new(2, 5);
    let sources: Vec<_> = (0..20).map(|_| random_tree(&mut rng, 5, 2)).collect();
    for case in 0..500 {
        let a = &sources[case % sources.len()];
        let b = random_tree(&mut rng, 5, 2);
        let got = tree_edit_distance(&to_labeled(a), &to_labeled(&b));
        let want = search5.distance(a, &b);
        ensure(got == want, || format!("5-node case {case}: {got} vs {want}"))?;
    }
    Ok(format!("{} pairs of <=4-node trees and 500 5-node pairs agree; axioms hold", n * n))
}

fn metric_formulas() -> Outcome {
    let ln2 = std::f64::consts::LN_2;
    let seq = ScoredSequence::new(vec!["a".into(); 7], vec![-ln2; 7]).map_err(|e| e.to_string())?;
    let ppl = perplexity(&seq).map_err(|e| e.to_string())?;
    ensure((ppl - 2.0).abs() <= 1e-12, || format!("ppl {ppl}"))?;
    for k in 2..6 {
        let set = vec!["They weren't cooking dinner .".to_string(); k];
        let sb = self_bleu(&set, 4).ok_or("self-bleu undefined")?;
        ensure((sb - 1.0).abs() <= 1e-9, || format!("self-bleu of {k} copies = {sb}"))?;
    }
    let pairs = [("The cat sat.", "The cat sat."), ("a b c", "a b c")];
    let nld = nld_avg(&pairs, DistanceUnit::Token).map_err(|e| e.to_string())?;
    ensure(nld == 0.0, || format!("nld {nld}"))?;
    Ok(format!("ppl = {ppl}, self-bleu = 1, nld = 0"))
}

fn offline_config(dir: &std::path::Path, name: &str) -> Result<RunConfig, String> {
    RunConfig::resolve(
        None,
        Overrides {
            seed: Some(13),
            offline: true,
            input: Some(common::demo_corpus()),
            output: Some(dir.join(name)),
            ..Overrides::default()
        },
    )
    .map_err(|e| e.to_string())
}

struct DemoRun {
    sentences: usize,
    with_kept: usize,
    mean_nld: f64,
}

fn demo_run() -> Result<DemoRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    cmd_run(&offline_config(dir.path(), "a.jsonl")?).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    cmd_run(&offline_config(dir.path(), "b.jsonl")?).map_err(|e| e.to_string())?;
    let a = fs::read(dir.path().join("a.jsonl")).map_err(|e| e.to_string())?;
    let b = fs::read(dir.path().join("b.jsonl")).map_err(|e| e.to_string())?;
    ensure(a == b, || "runs differ".into())?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    let mut run = DemoRun {
        sentences: 0,
        with_kept: 0,
        mean_nld: 0.0,
    };
    let mut pairs = Vec::new();
    for line in String::from_utf8_lossy(&a).lines() {
        let rec: CorpusRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        run.sentences += 1;
        let set = rec.filtered.ok_or("record without filtered set")?;
        run.with_kept += usize::from(!set.kept.is_empty());
        for k in &set.kept {
            // the filter compares normalized forms
            let d = norm_levenshtein(&normalize(&k.sentence), &normalize(&rec.text), DistanceUnit::Token);
            ensure(d < 0.5, || format!("{:?} at {d}", k.sentence))?;
            ensure(!k.cues.is_empty(), || format!("{:?} has no cue", k.sentence))?;
            pairs.push((rec.text.clone(), k.sentence.clone()));
        }
    }
    run.mean_nld = nld_avg(&pairs, DistanceUnit::Token).map_err(|e| e.to_string())?;
    Ok(run)
}

fn offline_end_to_end(run: &Result<DemoRun, String>) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    let share = run.with_kept as f64 / run.sentences as f64;
    ensure(run.sentences == 25, || format!("{} sentences", run.sentences))?;
    ensure(share >= 0.8, || format!("{:.0}% with a kept negation", share * 100.0))?;
    Ok(format!("{}/{} sentences with kept negations; byte-identical reruns", run.with_kept, run.sentences))
}

fn degenerate_guard() -> Outcome {
    let toks = SpecialTokens::default();
    let strings = [
        "|> [|> [|> [|> [|> [|> [|> [|> [|> [|> [|>",
        "not a young woman.......... not a young woman.............. not a young woman........",
    ];
    for s in strings {
        for raw in [s.to_string(), format!("{s} [ANSWER]")] {
            let r = parse_completion(&raw, 1, &toks);
            let reason = r.as_ref().err().map(|e| e.reason);
            ensure(reason == Some(RejectReason::DegenerateSymbols), || format!("{raw:?} -> {r:?}"))?;
        }
    }
    Ok("both strings rejected as degenerate".into())
}

fn nld_trend(run: &Result<DemoRun, String>) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    ensure(run.mean_nld < 0.35, || format!("mean NLD {:.3}", run.mean_nld))?;
    Ok(format!("mean NLD {:.3} < 0.35", run.mean_nld))
}

fn main() -> ExitCode {
    let demo = demo_run();
    let results: Vec<(&str, Outcome)> = vec![
        ("rule fixture suite", rule_fixture()),
        ("mask round-trip", mask_round_trip()),
        ("filter replay", filter_replay()),
        ("levenshtein oracle", levenshtein_oracle()),
        ("tree edit distance oracle", ted_oracle()),
        ("metric formulas", metric_formulas()),
        ("offline end-to-end", offline_end_to_end(&demo)),
        ("degenerate-output guard", degenerate_guard()),
        ("closeness trend", nld_trend(&demo)),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
