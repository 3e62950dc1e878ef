//! End-to-end pipeline tests over synthetic corpora, plus exit-code and
//! artifact checks for the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use storyline_cli::{run_pipeline, PipelineConfig};
use storyline_core::bphmm::{ActivityMatrix, ActivityParams, Hyperparams};
use storyline_core::corpus::save_corpus;
use storyline_core::eval::{load_segmentation, save_segmentation, Interval, Segmentation, SequenceSegmentation};
use storyline_core::rng::{stream, tag};
use storyline_core::synth::{generate_with_theta, truth_to_corpus, SyntheticTruth};

fn planted_truth(seed: u64) -> SyntheticTruth {
    let n = 6;
    let k = 3;
    let m = 12;
    let rows: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..k).map(|a| a == i % k || a == (i + 1) % k).collect())
        .collect();
    let theta = ActivityParams {
        theta: (0..k)
            .map(|a| {
                (0..m)
                    .map(|x| if x / 4 == a { 0.85 } else { 0.05 })
                    .collect()
            })
            .collect(),
    };
    let hyper = Hyperparams::default();
    generate_with_theta(
        ActivityMatrix::new(rows),
        theta,
        &vec![40; n],
        &hyper,
        &mut stream(seed, &[tag("pipeline-truth")]),
    )
    .unwrap()
}

fn truth_segmentation(truth: &SyntheticTruth) -> Segmentation {
    Segmentation {
        sequences: truth
            .z
            .iter()
            .enumerate()
            .map(|(i, labels)| {
                let mut intervals: Vec<Interval> = Vec::new();
                for (t, &l) in labels.iter().enumerate() {
                    let label = l.to_string();
                    match intervals.last_mut() {
                        Some(iv) if iv.label == label && iv.end == t => iv.end = t + 1,
                        _ => intervals.push(Interval { start: t, end: t + 1, label }),
                    }
                }
                SequenceSegmentation {
                    id: format!("seq_{i:03}"),
                    length: labels.len(),
                    intervals,
                }
            })
            .collect(),
    }
}

fn write_fixture(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let truth = planted_truth(seed);
    let corpus = truth_to_corpus(&truth);
    let corpus_path = dir.join("corpus.jsonl");
    save_corpus(&corpus, &corpus_path).unwrap();
    let gt_path = dir.join("ground_truth.json");
    save_segmentation(&truth_segmentation(&truth), &gt_path).unwrap();
    (corpus_path, gt_path)
}

fn small_config(dir: &Path, corpus: PathBuf, gt: Option<PathBuf>, seed: u64) -> PipelineConfig {
    PipelineConfig {
        corpus,
        ground_truth: gt,
        stopwords: None,
        k_lang: 12,
        k_visual: 4,
        knn: 2,
        hyper: Hyperparams::default(),
        sweeps: 80,
        burn_in: 40,
        seed,
        describe_samples: 50,
        describe_order: 2,
        out_dir: dir.to_path_buf(),
    }
}

#[test]
fn pipeline_completes_and_emits_report() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, gt) = write_fixture(dir.path(), 11);
    let out_dir = dir.path().join("out");
    let config = small_config(&out_dir, corpus, Some(gt), 5);
    let output = run_pipeline(&config).unwrap();

    let report = output.report.expect("ground truth supplied");
    assert!(report.iou_csm > 0.0 && report.iou_csm <= 1.0);
    assert!(report.map_csm > 0.0 && report.map_csm <= 1.0);
    assert!(!output.parse.sequences.is_empty());
    assert!(!output.parse.activities.is_empty());
    // Descriptions were filled from the synthetic subtitles.
    assert!(output.parse.activities.iter().any(|a| !a.description.is_empty()));

    for artifact in [
        "01_filtered_corpus.jsonl",
        "01_filter_report.json",
        "02_vocab_language.json",
        "03_assignments.json",
        "04_vocab.json",
        "05_frames.json",
        "06_parse.json",
        "storyline.json",
        "eval_report.json",
        "storyline.svg",
    ] {
        assert!(out_dir.join(artifact).exists(), "missing {artifact}");
    }
}

#[test]
fn pipeline_rejects_bad_sweep_counts_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_fixture(dir.path(), 12);
    let out_dir = dir.path().join("out");
    let mut config = small_config(&out_dir, corpus, None, 5);
    config.sweeps = 10;
    config.burn_in = 10;
    let err = run_pipeline(&config).unwrap_err();
    assert!(err.to_string().contains("config"), "{err:#}");
    assert!(!out_dir.join("storyline.json").exists());
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, gt) = write_fixture(dir.path(), 13);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let config_a = small_config(&out_a, corpus.clone(), Some(gt.clone()), 9);
    let config_b = small_config(&out_b, corpus, Some(gt), 9);
    run_pipeline(&config_a).unwrap();
    run_pipeline(&config_b).unwrap();
    let a = fs::read(out_a.join("storyline.json")).unwrap();
    let b = fs::read(out_b.join("storyline.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stage_artifacts_reproduce_downstream_outputs() {
    // Re-running the parse from the persisted intermediate inputs must
    // reproduce the persisted parse.
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_fixture(dir.path(), 14);
    let out_dir = dir.path().join("out");
    let config = small_config(&out_dir, corpus, None, 21);
    run_pipeline(&config).unwrap();

    let filtered = storyline_core::corpus::load_corpus(&out_dir.join("01_filtered_corpus.jsonl")).unwrap();
    let vocab = storyline_core::corpus::load_vocabulary(&out_dir.join("04_vocab.json")).unwrap();
    let assignments =
        storyline_cli::pipeline::load_assignments(&out_dir.join("03_assignments.json")).unwrap();
    let frames = storyline_core::corpus::represent_frames(
        &filtered,
        &vocab,
        &storyline_cli::pipeline::assignments_to_map(&assignments),
    )
    .unwrap();
    let ids: Vec<String> = filtered.sequences.iter().map(|s| s.id.clone()).collect();
    use rand::Rng as _;
    let seed: u64 = stream(21, &[tag("parse")]).random();
    let (_, parse) = storyline_core::bphmm::run_gibbs(
        &ids,
        &frames,
        vocab.language_count(),
        config.hyper,
        config.sweeps,
        config.burn_in,
        seed,
    )
    .unwrap();
    let persisted = storyline_core::storyline::load_parse(&out_dir.join("06_parse.json")).unwrap();
    assert_eq!(parse, persisted);
}

fn storyline_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_storyline"))
}

#[test]
fn binary_full_stage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let synth = storyline_bin()
        .args(["synth", "--n", "5", "--m-atoms", "10", "--t", "30", "--seed", "3"])
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    assert!(out.join("corpus.jsonl").exists());
    assert!(out.join("ground_truth.json").exists());
    assert!(out.join("truth.json").exists());

    let atoms = storyline_bin()
        .args(["atoms", "--k-lang", "10"])
        .arg("--corpus")
        .arg(out.join("corpus.jsonl"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(atoms.status.success(), "{}", String::from_utf8_lossy(&atoms.stderr));

    let parse = storyline_bin()
        .args(["parse", "--sweeps", "40", "--burn-in", "20", "--seed", "3"])
        .arg("--corpus")
        .arg(out.join("corpus.jsonl"))
        .arg("--vocab")
        .arg(out.join("vocab.json"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(parse.status.success(), "{}", String::from_utf8_lossy(&parse.stderr));
    assert!(out.join("parse.json").exists());

    let describe = storyline_bin()
        .args(["describe", "--order", "2", "--samples", "20", "--seed", "3"])
        .arg("--parse")
        .arg(out.join("parse.json"))
        .arg("--corpus")
        .arg(out.join("corpus.jsonl"))
        .arg("--vocab")
        .arg(out.join("vocab.json"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(describe.status.success(), "{}", String::from_utf8_lossy(&describe.stderr));

    let eval = storyline_bin()
        .arg("eval")
        .arg("--truth")
        .arg(out.join("ground_truth.json"))
        .arg("--parse")
        .arg(out.join("storyline.json"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let stdout = String::from_utf8_lossy(&eval.stdout);
    assert!(stdout.contains("iou_csm"), "{stdout}");

    let render = storyline_bin()
        .arg("render")
        .arg("--parse")
        .arg(out.join("storyline.json"))
        .arg("--truth")
        .arg(out.join("ground_truth.json"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(render.status.success(), "{}", String::from_utf8_lossy(&render.stderr));
    let svg = fs::read_to_string(out.join("storyline.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    let filter = storyline_bin()
        .arg("filter")
        .arg("--corpus")
        .arg(out.join("corpus.jsonl"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(filter.status.success(), "{}", String::from_utf8_lossy(&filter.stderr));
    assert!(out.join("filter_report.json").exists());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Validation error: sweeps <= burn-in.
    let bad = storyline_bin()
        .args(["parse", "--sweeps", "5", "--burn-in", "5"])
        .args(["--corpus", "nope.jsonl", "--vocab", "nope.json"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));

    // Runtime error: missing input file.
    let missing = storyline_bin()
        .args(["parse", "--sweeps", "5", "--burn-in", "2"])
        .args(["--corpus", "nope.jsonl", "--vocab", "nope.json"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    // Usage error.
    let usage = storyline_bin().arg("unknown-subcommand").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));

    // Help exits 0.
    let help = storyline_bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn run_subcommand_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, gt) = write_fixture(dir.path(), 15);
    let out_dir = dir.path().join("out");
    let config = small_config(&out_dir, corpus, Some(gt), 17);
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let run = storyline_bin()
        .arg("run")
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out_dir.join("storyline.json").exists());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("storyline.json"));

    // Ground truth round-trips through the file format.
    let gt_loaded = load_segmentation(&dir.path().join("ground_truth.json")).unwrap();
    assert!(!gt_loaded.sequences.is_empty());
}
