mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::Arc;

use common::{snapshot, toy_config, MockModel, NoNetwork};
use psv_cli::artifacts::{self as art, EvalRow, ScoreRow};
use psv_cli::config::{Overrides, Predictor, Stage, StakeholderSource};
use psv_cli::pipeline::Pipeline;
use psv_core::aggregate::Family;
use psv_core::graph::ArgumentConcepts;
use psv_core::signature::SignatureFilter;

fn offline(dir: &std::path::Path) -> Pipeline {
    Pipeline::new(toy_config(dir, &Overrides::default()), Arc::new(NoNetwork)).unwrap()
}

#[test]
fn align_writes_one_record_per_argument() {
    let dir = tempfile::tempdir().unwrap();
    let p = offline(dir.path());
    let out = p.run_stage(Stage::Align).unwrap();
    let records: Vec<ArgumentConcepts> = art::read_jsonl(&out[0]).unwrap();
    let hunting = records
        .iter()
        .filter(|r| r.argument_id.starts_with("ah-"))
        .count();
    assert_eq!(hunting, 10);
    assert_eq!(records.len(), 16);
    assert!(records.iter().all(|r| !r.concepts.is_empty()));
}

#[test]
fn rerunning_a_stage_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = offline(dir.path());
    p.run_all().unwrap();
    let first = snapshot(&p.config().paths.out_dir);
    for stage in Stage::ALL {
        p.run_stage(stage).unwrap();
    }
    assert_eq!(first, snapshot(&p.config().paths.out_dir));
}

#[test]
fn missing_embedding_file_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), &Overrides::default());
    std::fs::remove_file(&cfg.paths.embeddings).unwrap();
    let err = Pipeline::new(cfg.clone(), Arc::new(NoNetwork)).err().unwrap();
    assert!(err.to_string().contains("embeddings"), "{err}");
    assert!(!cfg.paths.out_dir.exists());
}

#[test]
fn downstream_stage_without_upstream_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let err = offline(dir.path()).run_stage(Stage::Signature).unwrap_err();
    assert!(format!("{err:#}").contains("run `psv align` first"), "{err:#}");
}

#[test]
fn changed_input_makes_downstream_stale() {
    let dir = tempfile::tempdir().unwrap();
    let p = offline(dir.path());
    p.run_stage(Stage::Align).unwrap();
    p.run_stage(Stage::Signature).unwrap();
    let mut corpus = std::fs::read_to_string(&p.config().paths.corpus).unwrap();
    corpus.push('\n');
    std::fs::write(&p.config().paths.corpus, corpus).unwrap();
    let err = format!("{:#}", p.run_stage(Stage::Psv).unwrap_err());
    assert!(err.contains("stale") && err.contains("re-run `psv"), "{err}");
}

#[test]
fn changed_settings_make_downstream_stale() {
    let dir = tempfile::tempdir().unwrap();
    let p = offline(dir.path());
    p.run_stage(Stage::Align).unwrap();
    p.run_stage(Stage::Signature).unwrap();
    let mut cfg = p.config().clone();
    cfg.k = 3;
    let q = Pipeline::new(cfg, Arc::new(NoNetwork)).unwrap();
    let err = format!("{:#}", q.run_stage(Stage::Psv).unwrap_err());
    assert!(err.contains("re-run `psv signature`"), "{err}");
    // Upstream settings that did not change keep the alignment valid.
    q.run_stage(Stage::Signature).unwrap();
    q.run_stage(Stage::Psv).unwrap();
}

#[test]
fn scores_contain_exactly_the_configured_families() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        families: Some(vec![Family::S0, Family::P0]),
        ..Overrides::default()
    };
    let p = Pipeline::new(toy_config(dir.path(), &overrides), Arc::new(NoNetwork)).unwrap();
    for stage in [Stage::Align, Stage::Signature, Stage::Psv, Stage::Scores] {
        p.run_stage(stage).unwrap();
    }
    let rows: Vec<ScoreRow> = art::read_csv(&p.config().paths.out_dir.join(art::SCORES)).unwrap();
    let families: BTreeSet<Family> = rows.iter().map(|r| r.family).collect();
    assert_eq!(families, BTreeSet::from([Family::S0, Family::P0]));
    // 10 + 6 arguments: 45 + 15 pairs, each with three channels per family.
    let global = rows.iter().filter(|r| r.concept == art::GLOBAL).count();
    assert_eq!(global, 60 * 3 * 2);
}

#[test]
fn eval_without_annotations_runs_same_side_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(dir.path(), &Overrides::default());
    cfg.paths.annotations = None;
    let p = Pipeline::new(cfg, Arc::new(NoNetwork)).unwrap();
    for stage in [
        Stage::Align,
        Stage::Signature,
        Stage::Psv,
        Stage::Scores,
        Stage::Eval,
    ] {
        p.run_stage(stage).unwrap();
    }
    let rows: Vec<EvalRow> = art::read_csv(&p.config().paths.out_dir.join(art::EVAL)).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.protocol == "same_side"));
    // Every family defines agreement and disagreement; S0 and P0 add orthogonality.
    assert_eq!(rows.len(), 6 * 2 + 2);
}

#[test]
fn eval_tables_follow_the_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = offline(dir.path());
    p.run_all().unwrap();
    let md = std::fs::read_to_string(p.config().paths.out_dir.join(art::EVAL_TABLES)).unwrap();
    assert!(md.starts_with("<!-- provenance "));
    assert!(md.contains("| Global | S | "));
    assert!(md.contains("| Same Stance | P0 | "));
    assert!(md.contains(" -- "));
    assert!(md.contains("*0."));
    let rows: Vec<EvalRow> = art::read_csv(&p.config().paths.out_dir.join(art::EVAL)).unwrap();
    let protocols: BTreeSet<&str> = rows.iter().map(|r| r.protocol.as_str()).collect();
    for expected in [
        "signature",
        "stance",
        "reliability",
        "global",
        "perspectivized",
        "same_side",
    ] {
        assert!(protocols.contains(expected), "missing {expected}");
    }
}

#[test]
fn llm_run_uses_cache_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        predictor: Some(Predictor::LlmZero),
        filters: Some(vec![SignatureFilter::Relevance, SignatureFilter::Hypernym]),
        ..Overrides::default()
    };
    let mut cfg = toy_config(dir.path(), &overrides);
    cfg.stakeholder_source = StakeholderSource::Llm;
    cfg.pairwise_ablation = true;
    let model = MockModel::new();
    let cold = Pipeline::new(cfg.clone(), model.clone()).unwrap();
    cold.run_all().unwrap();
    assert!(cold.network_calls() > 0);
    assert_eq!(cold.network_calls(), model.calls());
    let md = std::fs::read_to_string(cfg.paths.out_dir.join(art::EVAL_TABLES)).unwrap();
    assert!(md.contains("| Perspectivized | w/o PSV |"));
    assert!(md.contains("| all | -both |"));

    let warm = Pipeline::new(cfg.clone(), Arc::new(NoNetwork)).unwrap();
    warm.run_all().unwrap();
    assert_eq!(warm.network_calls(), 0);

    let purged = warm.purge_cache().unwrap();
    assert!(purged > 0);
    let again = Pipeline::new(cfg, model.clone()).unwrap();
    again.run_stage(Stage::Stakeholders).unwrap();
    assert!(again.network_calls() > 0);
}

#[test]
fn report_family_must_be_scored() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        families: Some(vec![Family::S]),
        ..Overrides::default()
    };
    let p = Pipeline::new(toy_config(dir.path(), &overrides), Arc::new(NoNetwork)).unwrap();
    let err = format!("{:#}", p.run_stage(Stage::Report).unwrap_err());
    assert!(err.contains("report family P0"), "{err}");
}

#[test]
fn report_tables_cover_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = offline(dir.path());
    p.run_all().unwrap();
    let out = &p.config().paths.out_dir;
    let scatter: Vec<psv_cli::reports::ScatterRow> = art::read_csv(&out.join(art::REPORT_SCATTER)).unwrap();
    assert_eq!(scatter.len(), 60);
    let hist: Vec<psv_cli::reports::HistogramBin> = art::read_csv(&out.join(art::REPORT_HISTOGRAM)).unwrap();
    let counted: usize = hist.iter().map(|b| b.same_stance + b.different_stance).sum();
    assert_eq!(counted, 60);
    let matrix: Vec<psv_cli::reports::MatrixCell> = art::read_csv(&out.join(art::REPORT_MATRIX)).unwrap();
    // Four groups in the hunting topic, three P0 channels; the uniforms topic has no groups.
    assert_eq!(matrix.len(), 4 * 4 * 3);
    let top: Vec<psv_cli::reports::TopPerspective> = art::read_csv(&out.join(art::REPORT_TOP)).unwrap();
    assert!(top.iter().all(|t| t.rank <= 3));
    assert_eq!(top.len(), 2 * 3 * 3 * 3);
}

#[test]
fn binary_runs_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::copy_toy(dir.path());
    let out = dir.path().join("bin-out");
    let status = Command::new(env!("CARGO_BIN_EXE_psv"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args([
            "--families",
            "S0,P0",
            "--k",
            "4",
            "--predictor",
            "baseline",
            "--filters",
            "none",
        ])
        .arg("run")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(out.join(art::REPORT_MATRIX).is_file());

    let help = Command::new(env!("CARGO_BIN_EXE_psv"))
        .arg("--help")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in [
        "align",
        "signature",
        "psv",
        "scores",
        "eval",
        "stakeholders",
        "report",
        "cache-purge",
    ] {
        assert!(text.contains(cmd), "help lacks {cmd}");
    }
}

#[test]
fn import_converts_a_flat_export() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("export.jsonl");
    let lines = [
        r#"{"debate":{"q":"Should zoos close?"},"arg":"Cages are cruel.","side":"yes","who":"Visitors"}"#,
        r#"{"debate":{"q":"Should zoos close?"},"arg":"Zoos fund research.","side":"no","who":["Researchers"]}"#,
    ];
    std::fs::write(&export, lines.join("\n")).unwrap();
    let mapping = dir.path().join("mapping.toml");
    std::fs::write(
        &mapping,
        r#"topic_id = ""
argument_id = ""
question = "/debate/q"
text = "arg"
stance = "side"
stakeholders = "who"

[stance_values]
yes = "pro"
no = "con"
"#,
    )
    .unwrap();
    let out = dir.path().join("corpus.jsonl");
    let run = Command::new(env!("CARGO_BIN_EXE_psv"))
        .args([
            "import",
            "--input",
            export.to_str().unwrap(),
            "--mapping",
            mapping.to_str().unwrap(),
        ])
        .args(["--output", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let corpus = psv_core::corpus::load_corpus(&out).unwrap();
    let args = corpus.topic_arguments("should-zoos-close").unwrap();
    assert_eq!(args.len(), 2);
    assert_eq!(args[1].argument_id, "should-zoos-close-2");
    assert_eq!(
        args[1].stakeholders.as_deref(),
        Some(&["Researchers".to_string()][..])
    );
}
