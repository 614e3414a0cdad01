mod common;

use std::fs;
use std::path::Path;

use negforge::mask::RuleId;
use negforge::pipeline::{cmd_augment, cmd_eval, cmd_filter, cmd_mask, cmd_run, cursor_path, CorpusRecord, Overrides, RunConfig};
use negforge::Granularity;

fn config(input: &Path, output: &Path, tweak: impl FnOnce(&mut Overrides)) -> RunConfig {
    let mut o = Overrides {
        seed: Some(13),
        offline: true,
        input: Some(input.to_path_buf()),
        output: Some(output.to_path_buf()),
        ..Overrides::default()
    };
    tweak(&mut o);
    RunConfig::resolve(None, o).unwrap()
}

fn records(path: &Path) -> Vec<CorpusRecord> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let demo = common::demo_corpus();
    let one = dir.path().join("one.jsonl");
    let many = dir.path().join("many.jsonl");
    cmd_run(&config(&demo, &one, |o| o.workers = Some(1))).unwrap();
    cmd_run(&config(&demo, &many, |o| o.workers = Some(6))).unwrap();
    assert_eq!(fs::read(one).unwrap(), fs::read(many).unwrap());
}

#[test]
fn seeds_change_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let demo = common::demo_corpus();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    cmd_run(&config(&demo, &a, |o| o.epsilon = Some(2))).unwrap();
    cmd_run(&config(&demo, &b, |o| {
        o.epsilon = Some(2);
        o.seed = Some(99);
    }))
    .unwrap();
    assert_ne!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn stages_compose_to_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let demo = common::demo_corpus();
    let masked = dir.path().join("masked.jsonl");
    let augmented = dir.path().join("augmented.jsonl");
    let refiltered = dir.path().join("refiltered.jsonl");
    let full = dir.path().join("full.jsonl");
    cmd_mask(&config(&demo, &masked, |_| {})).unwrap();
    cmd_augment(&config(&masked, &augmented, |_| {})).unwrap();
    cmd_filter(&config(&augmented, &refiltered, |_| {})).unwrap();
    let (_, run_report) = cmd_run(&config(&demo, &full, |_| {})).unwrap();
    assert_eq!(fs::read(&augmented).unwrap(), fs::read(&full).unwrap());
    assert_eq!(fs::read(&refiltered).unwrap(), fs::read(&full).unwrap());

    let report_path = dir.path().join("report.json");
    let eval_report = cmd_eval(&config(&augmented, &report_path, |_| {})).unwrap();
    assert_eq!(eval_report, run_report);
    assert!(fs::read_to_string(report_path).unwrap().contains("\"nld\""));
}

#[test]
fn example_negation_is_kept() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    cmd_run(&config(&common::demo_corpus(), &out, |_| {})).unwrap();
    let recs = records(&out);
    let first = &recs[0];
    assert_eq!(first.text, "They were cooking dinner and serving it to their guests.");
    let kept = first.filtered.as_ref().unwrap().kept_sentences();
    assert!(kept.contains(&"They weren't cooking dinner and serving it to their guests."), "{kept:?}");
}

#[test]
fn epsilon_bounds_each_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    cmd_run(&config(&common::demo_corpus(), &out, |o| o.epsilon = Some(1))).unwrap();
    for rec in records(&out) {
        assert_eq!(rec.filtered.unwrap().kept.len(), 1, "{}", rec.sent_id);
    }
}

#[test]
fn subtree_granularity_uses_preposition_rule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let cfg = config(&common::fixture("rules.conllu"), &out, |o| {
        o.granularity = Some(Granularity::Subtree)
    });
    cmd_mask(&cfg).unwrap();
    let rules: Vec<RuleId> = records(&out)
        .iter()
        .flat_map(|r| r.proposals.clone().unwrap())
        .flat_map(|p| p.spans.into_iter().map(|s| s.rule))
        .collect();
    assert!(rules.contains(&RuleId::R6));

    let token_out = dir.path().join("token.jsonl");
    cmd_mask(&config(&common::fixture("rules.conllu"), &token_out, |_| {})).unwrap();
    let token_rules: Vec<RuleId> = records(&token_out)
        .iter()
        .flat_map(|r| r.proposals.clone().unwrap())
        .flat_map(|p| p.spans.into_iter().map(|s| s.rule))
        .collect();
    assert!(!token_rules.contains(&RuleId::R6));
}

#[test]
fn augment_resumes_from_cursor() {
    let dir = tempfile::tempdir().unwrap();
    let masked = dir.path().join("masked.jsonl");
    let out = dir.path().join("aug.jsonl");
    let reference = dir.path().join("reference.jsonl");
    cmd_mask(&config(&common::demo_corpus(), &masked, |_| {})).unwrap();
    cmd_augment(&config(&masked, &reference, |_| {})).unwrap();
    assert!(!cursor_path(&reference).exists());

    // simulate an interrupted run that finished ten records
    let full = fs::read_to_string(&reference).unwrap();
    let done: Vec<&str> = full.lines().take(10).collect();
    fs::write(&out, done.join("\n") + "\n").unwrap();
    let ids: Vec<String> = done
        .iter()
        .map(|l| serde_json::from_str::<CorpusRecord>(l).unwrap().sent_id)
        .collect();
    fs::write(cursor_path(&out), ids.join("\n") + "\n").unwrap();

    let summary = cmd_augment(&config(&masked, &out, |_| {})).unwrap();
    assert_eq!(summary.sentences, 25);
    assert_eq!(fs::read_to_string(&out).unwrap(), full);
    assert!(!cursor_path(&out).exists());
}

#[test]
fn records_without_parse_are_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let out = dir.path().join("out.jsonl");
    fs::write(
        &input,
        "{\"sent_id\":\"x\",\"text\":\"No parse here.\",\"label\":\"keep-me\"}\n",
    )
    .unwrap();
    let summary = cmd_mask(&config(&input, &out, |_| {})).unwrap();
    assert_eq!(summary.failed, 1);
    let recs = records(&out);
    assert_eq!(recs[0].errors.len(), 1);
    assert_eq!(recs[0].extra["label"], "keep-me");
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    fs::write(&input, "{\"sent_id\":\"x\",\"text\":\"a\"}\n{\"sent_id\":\"x\",\"text\":\"b\"}\n").unwrap();
    let err = cmd_mask(&config(&input, &dir.path().join("o.jsonl"), |_| {})).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
