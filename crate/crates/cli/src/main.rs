use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::Rng as _;

use storyline_cli::pipeline::{
    assignments_to_map, clusters_to_assignments, describe_parse, load_assignments, run_pipeline,
    FilterReport, SyntheticTruthFile,
};
use storyline_cli::render::render_storyline;
use storyline_cli::PipelineConfig;
use storyline_core::bphmm::{load_hyperparams, run_gibbs, Hyperparams};
use storyline_core::corpus::{
    load_corpus, load_vocabulary, represent_frames, save_corpus, save_vocabulary,
};
use storyline_core::eval::{
    evaluate, load_segmentation, save_report, save_segmentation, Interval, Segmentation,
    SequenceSegmentation,
};
use storyline_core::joint_cluster::{
    build_sequence_knn, joint_cluster_extract, remove_outliers, SgdConfig,
};
use storyline_core::lang_atoms::{default_stopwords, load_stopwords, select_language_atoms};
use storyline_core::rng::{stream, tag};
use storyline_core::storyline::{load_parse, save_parse};
use storyline_core::synth::{generate_corpus, sample_ibp, truth_to_corpus};

#[derive(Parser)]
#[command(name = "storyline", version, about = "Discovers shared activity steps in multi-modal sequence collections and parses every sequence over them")]
struct Cli {
    /// Pipeline configuration file (used by `run`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root random seed; stages derive their own streams from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select language atoms by tf-idf over one or more corpus files (the
    /// first file is the target collection).
    Atoms(AtomsArgs),
    /// Jointly cluster object proposals into visual atoms.
    Cluster(ClusterArgs),
    /// Remove outlier sequences by their description bag-of-words.
    Filter(FilterArgs),
    /// Discover activities and parse every sequence (MCMC).
    Parse(ParseArgs),
    /// Sample a synthetic corpus with ground-truth labels.
    Synth(SynthArgs),
    /// Generate a textual description per discovered activity.
    Describe(DescribeArgs),
    /// Score a parse against a ground-truth segmentation.
    Eval(EvalArgs),
    /// Run the full pipeline from a config file.
    Run,
    /// Render a parse as an SVG timeline.
    Render(RenderArgs),
}

#[derive(Args)]
struct AtomsArgs {
    /// Corpus files; the first is the collection atoms are selected for.
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    k_lang: usize,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Language vocabulary to extend with the discovered visual atoms.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 20)]
    k_visual: usize,
    #[arg(long, default_value_t = 5)]
    knn: usize,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Visual-atom assignments from the cluster stage.
    #[arg(long)]
    assignments: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    sweeps: u64,
    #[arg(long, default_value_t = 1000)]
    burn_in: u64,
    /// Hyperparameter file; defaults apply when absent.
    #[arg(long)]
    hyper: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of sequences.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m_atoms: usize,
    /// Frames per sequence.
    #[arg(long)]
    t: usize,
    #[arg(long)]
    hyper: Option<PathBuf>,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(long)]
    parse: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    parse: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    parse: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

enum CliError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

fn validation(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Validation(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn load_hyper(path: &Option<PathBuf>) -> Result<Hyperparams, CliError> {
    match path {
        Some(p) => load_hyperparams(p).map_err(validation),
        None => Ok(Hyperparams::default()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.clone();
    fs::create_dir_all(&out).map_err(|e| runtime(anyhow!(e)))?;
    let verbose = cli.verbose;
    let note = |msg: &str| {
        if verbose {
            eprintln!("[storyline] {msg}");
        }
    };

    match cli.command {
        Command::Atoms(args) => {
            if args.k_lang == 0 {
                return Err(validation(anyhow!("--k-lang must be positive")));
            }
            let corpora: Vec<_> = args
                .corpus
                .iter()
                .map(|p| load_corpus(p))
                .collect::<Result<_, _>>()
                .map_err(runtime)?;
            let stopwords = match &args.stopwords {
                Some(p) => load_stopwords(p).map_err(runtime)?,
                None => default_stopwords(),
            };
            let atoms =
                select_language_atoms(&corpora, 0, args.k_lang, &stopwords).map_err(runtime)?;
            note(&format!("selected {} language atoms", atoms.len()));
            let vocab = storyline_core::corpus::AtomVocabulary::new(atoms).map_err(runtime)?;
            let path = out.join("vocab_language.json");
            save_vocabulary(&vocab, &path).map_err(runtime)?;
            println!("{}", path.display());
        }
        Command::Cluster(args) => {
            if args.k_visual == 0 || args.knn == 0 {
                return Err(validation(anyhow!("--k-visual and --knn must be positive")));
            }
            let corpus = load_corpus(&args.corpus).map_err(runtime)?;
            let mut vocab = load_vocabulary(&args.vocab).map_err(runtime)?;
            let knn = build_sequence_knn(&corpus, args.knn).map_err(runtime)?;
            let clusters =
                joint_cluster_extract(&corpus, &knn, args.k_visual, &SgdConfig::default())
                    .map_err(runtime)?;
            note(&format!("extracted {} visual atoms", clusters.len()));
            let records = clusters_to_assignments(&clusters, &mut vocab);
            fs::write(
                out.join("assignments.json"),
                serde_json::to_string_pretty(&records).map_err(|e| runtime(anyhow!(e)))?,
            )
            .map_err(|e| runtime(anyhow!(e)))?;
            save_vocabulary(&vocab, &out.join("vocab.json")).map_err(runtime)?;
            println!("{}", out.join("assignments.json").display());
        }
        Command::Filter(args) => {
            let corpus = load_corpus(&args.corpus).map_err(runtime)?;
            let (kept, discarded) = remove_outliers(&corpus).map_err(runtime)?;
            let report = FilterReport {
                kept: kept.sequences.iter().map(|s| s.id.clone()).collect(),
                discarded,
            };
            save_corpus(&kept, &out.join("filtered_corpus.jsonl")).map_err(runtime)?;
            fs::write(
                out.join("filter_report.json"),
                serde_json::to_string_pretty(&report).map_err(|e| runtime(anyhow!(e)))?,
            )
            .map_err(|e| runtime(anyhow!(e)))?;
            println!(
                "{}",
                serde_json::to_string(&report).map_err(|e| runtime(anyhow!(e)))?
            );
        }
        Command::Parse(args) => {
            if args.sweeps <= args.burn_in {
                return Err(validation(anyhow!(
                    "--sweeps ({}) must exceed --burn-in ({})",
                    args.sweeps,
                    args.burn_in
                )));
            }
            let hyper = load_hyper(&args.hyper)?;
            let corpus = load_corpus(&args.corpus).map_err(runtime)?;
            let vocab = load_vocabulary(&args.vocab).map_err(runtime)?;
            let assignments = match &args.assignments {
                Some(p) => load_assignments(p).map_err(runtime)?,
                None => Vec::new(),
            };
            let frames = represent_frames(&corpus, &vocab, &assignments_to_map(&assignments))
                .map_err(runtime)?;
            let ids: Vec<String> = corpus.sequences.iter().map(|s| s.id.clone()).collect();
            let seed: u64 = stream(cli.seed, &[tag("parse")]).random();
            note(&format!("running {} sweeps", args.sweeps));
            let (_, parse) = run_gibbs(
                &ids,
                &frames,
                vocab.language_count(),
                hyper,
                args.sweeps,
                args.burn_in,
                seed,
            )
            .map_err(runtime)?;
            let path = out.join("parse.json");
            save_parse(&parse, &path).map_err(runtime)?;
            println!("{}", path.display());
        }
        Command::Synth(args) => {
            if args.n == 0 || args.m_atoms == 0 || args.t == 0 {
                return Err(validation(anyhow!("--n, --m-atoms, and --t must be positive")));
            }
            let hyper = load_hyper(&args.hyper)?;
            let mut rng = stream(cli.seed, &[tag("synth")]);
            let f = sample_ibp(args.n, hyper.gamma, &mut rng);
            let truth =
                generate_corpus(f, args.m_atoms, &vec![args.t; args.n], &hyper, &mut rng)
                    .map_err(runtime)?;
            let corpus = truth_to_corpus(&truth);
            save_corpus(&corpus, &out.join("corpus.jsonl")).map_err(runtime)?;

            let atoms: Vec<storyline_core::corpus::Atom> = (0..args.m_atoms)
                .map(|m| storyline_core::corpus::Atom {
                    id: m as u32,
                    modality: storyline_core::corpus::Modality::Language,
                    label: format!("atom_{m}"),
                })
                .collect();
            let vocab = storyline_core::corpus::AtomVocabulary::new(atoms).map_err(runtime)?;
            save_vocabulary(&vocab, &out.join("vocab.json")).map_err(runtime)?;

            let truth_file = SyntheticTruthFile {
                f: (0..truth.f.n_sequences())
                    .map(|i| truth.f.row(i).to_vec())
                    .collect(),
                theta: truth.theta.theta.clone(),
                z: truth.z.clone(),
            };
            fs::write(
                out.join("truth.json"),
                serde_json::to_string_pretty(&truth_file).map_err(|e| runtime(anyhow!(e)))?,
            )
            .map_err(|e| runtime(anyhow!(e)))?;

            let gt = truth_segmentation(&corpus, &truth.z);
            save_segmentation(&gt, &out.join("ground_truth.json")).map_err(runtime)?;
            println!("{}", out.join("corpus.jsonl").display());
        }
        Command::Describe(args) => {
            if args.order == 0 || args.samples == 0 {
                return Err(validation(anyhow!("--order and --samples must be positive")));
            }
            let mut parse = load_parse(&args.parse).map_err(runtime)?;
            let corpus = load_corpus(&args.corpus).map_err(runtime)?;
            let vocab = load_vocabulary(&args.vocab).map_err(runtime)?;
            if !corpus
                .sequences
                .iter()
                .flat_map(|s| &s.frames)
                .any(|f| !f.subtitle_tokens.is_empty())
            {
                return Err(runtime(anyhow!(
                    "corpus has no subtitle tokens to train the language model on"
                )));
            }
            describe_parse(
                &mut parse,
                &corpus,
                &vocab,
                args.order,
                args.samples,
                cli.seed,
            )
            .map_err(runtime)?;
            let path = out.join("storyline.json");
            save_parse(&parse, &path).map_err(runtime)?;
            println!("{}", path.display());
        }
        Command::Eval(args) => {
            let gt = load_segmentation(&args.truth).map_err(runtime)?;
            let parse = load_parse(&args.parse).map_err(runtime)?;
            let report = evaluate(&gt, &parse.to_segmentation(), &parse.to_confidences())
                .map_err(runtime)?;
            save_report(&report, &out.join("eval_report.json")).map_err(runtime)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| runtime(anyhow!(e)))?
            );
        }
        Command::Run => {
            let config_path = cli
                .config
                .as_ref()
                .ok_or_else(|| validation(anyhow!("`run` requires --config <path>")))?;
            let mut config = PipelineConfig::load(config_path).map_err(validation)?;
            if cli.seed != 0 {
                config.seed = cli.seed;
            }
            if cli.out.as_os_str() != "." {
                config.out_dir = cli.out.clone();
            }
            config.validate().map_err(validation)?;
            note("running pipeline");
            let output = run_pipeline(&config).map_err(runtime)?;
            if let Some(report) = &output.report {
                println!(
                    "{}",
                    serde_json::to_string_pretty(report).map_err(|e| runtime(anyhow!(e)))?
                );
            }
            println!("{}", output.storyline_path.display());
        }
        Command::Render(args) => {
            let parse = load_parse(&args.parse).map_err(runtime)?;
            let truth = match &args.truth {
                Some(p) => Some(load_segmentation(p).map_err(runtime)?),
                None => None,
            };
            let svg = render_storyline(&parse, truth.as_ref());
            let path = out.join("storyline.svg");
            fs::write(&path, svg).map_err(|e| runtime(anyhow!(e)))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

/// Ground-truth segmentation from per-sequence state paths.
fn truth_segmentation(
    corpus: &storyline_core::corpus::Corpus,
    z: &[Vec<usize>],
) -> Segmentation {
    Segmentation {
        sequences: corpus
            .sequences
            .iter()
            .zip(z)
            .map(|(seq, labels)| {
                let mut intervals: Vec<Interval> = Vec::new();
                for (t, &l) in labels.iter().enumerate() {
                    let label = l.to_string();
                    match intervals.last_mut() {
                        Some(iv) if iv.label == label && iv.end == t => iv.end = t + 1,
                        _ => intervals.push(Interval {
                            start: t,
                            end: t + 1,
                            label,
                        }),
                    }
                }
                SequenceSegmentation {
                    id: seq.id.clone(),
                    length: labels.len(),
                    intervals,
                }
            })
            .collect(),
    }
}

