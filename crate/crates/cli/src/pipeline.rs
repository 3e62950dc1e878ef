//! The staged end-to-end run: filter -> atoms -> cluster -> represent ->
//! parse -> describe (-> eval, render). Every stage persists its artifact to
//! the output directory, stages derive their randomness from the root seed
//! by name, and errors carry the failing stage.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use storyline_core::bphmm::run_gibbs;
use storyline_core::corpus::{
    load_corpus, represent_frames, save_corpus, save_vocabulary, AtomVocabulary, Corpus,
    FrameVector, VisualAssignments,
};
use storyline_core::describe::{describe_activity, train_markov_lm};
use storyline_core::eval::{evaluate, load_segmentation, save_report, EvalReport};
use storyline_core::joint_cluster::{
    build_sequence_knn, joint_cluster_extract, remove_outliers, ProposalRef, SgdConfig,
};
use storyline_core::lang_atoms::{default_stopwords, load_stopwords, select_language_atoms};
use storyline_core::rng::{stream, tag};
use storyline_core::storyline::{save_parse, StorylineParse};

use crate::config::PipelineConfig;
use crate::render::render_storyline;

#[derive(Debug, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub discarded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub sequence_id: String,
    pub frame_index: usize,
    pub proposal_index: usize,
    pub atom_id: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct FramesArtifact {
    sequences: Vec<FramesEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FramesEntry {
    id: String,
    /// One '0'/'1' string per frame, indexed by atom id.
    frames: Vec<String>,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub parse: StorylineParse,
    pub report: Option<EvalReport>,
    pub storyline_path: PathBuf,
}

/// Derives a stage-scoped seed from the root seed.
fn stage_seed(root: u64, name: &str) -> u64 {
    stream(root, &[tag(name)]).random()
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Turns extracted proposal clusters into visual atoms appended to the
/// vocabulary, plus the per-proposal assignment records.
pub fn clusters_to_assignments(
    clusters: &[Vec<ProposalRef>],
    vocab: &mut AtomVocabulary,
) -> Vec<AssignmentRecord> {
    let first_visual = vocab.len() as u32;
    vocab.extend_visual((0..clusters.len()).map(|c| format!("vis_{c}")));
    let mut records: Vec<AssignmentRecord> = clusters
        .iter()
        .enumerate()
        .flat_map(|(c, members)| {
            members.iter().map(move |p| AssignmentRecord {
                sequence_id: p.sequence_id.clone(),
                frame_index: p.frame_index,
                proposal_index: p.proposal_index,
                atom_id: first_visual + c as u32,
            })
        })
        .collect();
    records.sort();
    records
}

pub fn assignments_to_map(records: &[AssignmentRecord]) -> VisualAssignments {
    records
        .iter()
        .map(|r| {
            (
                (r.sequence_id.clone(), r.frame_index, r.proposal_index),
                r.atom_id,
            )
        })
        .collect()
}

fn frames_artifact(corpus: &Corpus, frames: &[Vec<FrameVector>]) -> FramesArtifact {
    FramesArtifact {
        sequences: corpus
            .sequences
            .iter()
            .zip(frames)
            .map(|(seq, fvs)| FramesEntry {
                id: seq.id.clone(),
                frames: fvs
                    .iter()
                    .map(|fv| fv.bits.iter().map(|&b| if b { '1' } else { '0' }).collect())
                    .collect(),
            })
            .collect(),
    }
}

/// Runs every stage over one corpus and returns the final storyline (and
/// the evaluation report when ground truth is configured). Deterministic
/// given the config and seed.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate().context("stage config")?;
    fs::create_dir_all(&config.out_dir).context("stage config")?;
    let dir = config.out_dir.as_path();

    let corpus = load_corpus(&config.corpus).context("stage load")?;

    // Outlier filtering needs at least two sequences to compare.
    let (filtered, discarded) = if corpus.sequences.len() >= 2 {
        remove_outliers(&corpus).context("stage filter")?
    } else {
        (corpus.clone(), Vec::new())
    };
    let filter_report = FilterReport {
        kept: filtered.sequences.iter().map(|s| s.id.clone()).collect(),
        discarded,
    };
    save_corpus(&filtered, &dir.join("01_filtered_corpus.jsonl")).context("stage filter")?;
    write_json(dir, "01_filter_report.json", &filter_report).context("stage filter")?;
    if filtered.sequences.is_empty() {
        anyhow::bail!("stage filter: no sequences left after outlier removal");
    }

    let stopwords = match &config.stopwords {
        Some(path) => load_stopwords(path).context("stage atoms")?,
        None => default_stopwords(),
    };
    let atoms = select_language_atoms(
        std::slice::from_ref(&filtered),
        0,
        config.k_lang,
        &stopwords,
    )
    .context("stage atoms")?;
    let mut vocab = AtomVocabulary::new(atoms).context("stage atoms")?;
    save_vocabulary(&vocab, &dir.join("02_vocab_language.json")).context("stage atoms")?;

    let has_proposals = filtered.feature_dim().is_some();
    let assignments: Vec<AssignmentRecord> = if has_proposals && filtered.sequences.len() >= 2 {
        let knn = build_sequence_knn(&filtered, config.knn).context("stage cluster")?;
        let clusters =
            joint_cluster_extract(&filtered, &knn, config.k_visual, &SgdConfig::default())
                .context("stage cluster")?;
        clusters_to_assignments(&clusters, &mut vocab)
    } else {
        Vec::new()
    };
    write_json(dir, "03_assignments.json", &assignments).context("stage cluster")?;
    save_vocabulary(&vocab, &dir.join("04_vocab.json")).context("stage cluster")?;

    let frames = represent_frames(&filtered, &vocab, &assignments_to_map(&assignments))
        .context("stage represent")?;
    write_json(dir, "05_frames.json", &frames_artifact(&filtered, &frames))
        .context("stage represent")?;

    let ids: Vec<String> = filtered.sequences.iter().map(|s| s.id.clone()).collect();
    let (_, mut parse) = run_gibbs(
        &ids,
        &frames,
        vocab.language_count(),
        config.hyper,
        config.sweeps,
        config.burn_in,
        stage_seed(config.seed, "parse"),
    )
    .context("stage parse")?;
    save_parse(&parse, &dir.join("06_parse.json")).context("stage parse")?;

    describe_parse(
        &mut parse,
        &filtered,
        &vocab,
        config.describe_order,
        config.describe_samples,
        config.seed,
    )
    .context("stage describe")?;
    let storyline_path = dir.join("storyline.json");
    save_parse(&parse, &storyline_path).context("stage describe")?;

    let report = match &config.ground_truth {
        Some(path) => {
            // Filtered-out sequences have no parse; score only the kept ones.
            let mut gt = load_segmentation(path).context("stage eval")?;
            gt.sequences.retain(|s| ids.contains(&s.id));
            let report = evaluate(&gt, &parse.to_segmentation(), &parse.to_confidences())
                .context("stage eval")?;
            save_report(&report, &dir.join("eval_report.json")).context("stage eval")?;
            Some(report)
        }
        None => None,
    };

    let truth = match &config.ground_truth {
        Some(path) => Some(load_segmentation(path).context("stage render")?),
        None => None,
    };
    let svg = render_storyline(&parse, truth.as_ref());
    fs::write(dir.join("storyline.svg"), svg).context("stage render")?;

    Ok(PipelineOutput {
        parse,
        report,
        storyline_path,
    })
}

/// Trains the subtitle language model and fills every activity's
/// description. Corpora without any subtitle tokens keep empty
/// descriptions.
pub fn describe_parse(
    parse: &mut StorylineParse,
    corpus: &Corpus,
    vocab: &AtomVocabulary,
    order: usize,
    n_samples: usize,
    seed: u64,
) -> Result<()> {
    let streams: Vec<Vec<String>> = corpus
        .sequences
        .iter()
        .flat_map(|s| &s.frames)
        .map(|f| f.subtitle_tokens.clone())
        .filter(|t| !t.is_empty())
        .collect();
    if streams.is_empty() {
        return Ok(());
    }
    let lm = train_markov_lm(&streams, order)?;
    let labels: Vec<String> = vocab.atoms()[..vocab.language_count()]
        .iter()
        .map(|a| a.label.clone())
        .collect();
    for activity in &mut parse.activities {
        let mut rng = stream(seed, &[tag("describe"), u64::from(activity.id)]);
        let best = describe_activity(
            &lm,
            &activity.theta_language,
            &labels,
            n_samples,
            &mut rng,
        )?;
        activity.description = best.tokens;
    }
    Ok(())
}

/// Re-keys assignment records onto a map for the representation stage,
/// validating nothing; `represent_frames` enforces the invariants.
pub fn load_assignments(path: &Path) -> Result<Vec<AssignmentRecord>> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Ground-truth bundle written by the synth subcommand.
#[derive(Debug, Serialize, Deserialize)]
pub struct SyntheticTruthFile {
    pub f: Vec<Vec<bool>>,
    pub theta: Vec<Vec<f64>>,
    pub z: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabeledSequences {
    pub sequences: BTreeMap<String, Vec<usize>>,
}
