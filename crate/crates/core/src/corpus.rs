//! Data model for multi-modal sequence collections: file ingestion and the
//! conversion of raw frames into binary atom-occurrence vectors.
//!
//! A corpus file is newline-delimited: one JSON object per sequence with keys
//! `id`, `description_tokens`, and `frames` (each frame carries `t`,
//! `subtitle_tokens`, `proposal_features`). A vocabulary file is a single
//! JSON object `{"atoms": [{id, modality, label}, ...]}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Language,
    Visual,
}

/// A discrete mid-level unit of observation: a salient subtitle word or a
/// cluster of object proposals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub id: u32,
    pub modality: Modality,
    pub label: String,
}

/// The ordered atom set indexing every frame vector: language atoms first
/// (indices `0..language_count`), visual atoms after.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomVocabulary {
    atoms: Vec<Atom>,
    language_count: usize,
    visual_count: usize,
}

impl AtomVocabulary {
    /// Builds a vocabulary, checking that ids are dense `0..M` and that the
    /// language block precedes the visual block.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let mut language_count = 0usize;
        let mut seen_visual = false;
        for (i, atom) in atoms.iter().enumerate() {
            if atom.id as usize != i {
                return Err(Error::InvalidVocabulary(format!(
                    "atom ids must be dense 0..M, found id {} at position {}",
                    atom.id, i
                )));
            }
            match atom.modality {
                Modality::Language => {
                    if seen_visual {
                        return Err(Error::InvalidVocabulary(
                            "language atom after a visual atom".into(),
                        ));
                    }
                    language_count += 1;
                }
                Modality::Visual => seen_visual = true,
            }
        }
        let visual_count = atoms.len() - language_count;
        Ok(Self {
            atoms,
            language_count,
            visual_count,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn language_count(&self) -> usize {
        self.language_count
    }

    pub fn visual_count(&self) -> usize {
        self.visual_count
    }

    /// Appends visual atoms (cluster labels), assigning the next dense ids.
    pub fn extend_visual<I: IntoIterator<Item = String>>(&mut self, labels: I) {
        for label in labels {
            let id = self.atoms.len() as u32;
            self.atoms.push(Atom {
                id,
                modality: Modality::Visual,
                label,
            });
            self.visual_count += 1;
        }
    }
}

/// Binary occurrence vector over the whole vocabulary, language part first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameVector {
    pub bits: Vec<bool>,
}

impl FrameVector {
    pub fn zeros(m: usize) -> Self {
        Self {
            bits: vec![false; m],
        }
    }

    pub fn from_indices(m: usize, ones: &[usize]) -> Self {
        let mut bits = vec![false; m];
        for &i in ones {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub subtitle_tokens: Vec<String>,
    pub proposal_features: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub description_tokens: Vec<String>,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// The how-to query this collection was retrieved for.
    pub category: String,
    pub sequences: Vec<SequenceRecord>,
}

impl Corpus {
    pub fn new(category: impl Into<String>, sequences: Vec<SequenceRecord>) -> Result<Self> {
        let corpus = Self {
            category: category.into(),
            sequences,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        let mut dim: Option<usize> = None;
        for seq in &self.sequences {
            if !seen.insert(seq.id.as_str()) {
                return Err(Error::DuplicateSequenceId(seq.id.clone()));
            }
            let mut prev_t = f64::NEG_INFINITY;
            for (fi, frame) in seq.frames.iter().enumerate() {
                if frame.t <= prev_t {
                    return Err(Error::NonMonotoneTimestamps {
                        sequence: seq.id.clone(),
                        frame: fi,
                    });
                }
                prev_t = frame.t;
                for feat in &frame.proposal_features {
                    match dim {
                        None => dim = Some(feat.len()),
                        Some(d) if d != feat.len() => {
                            return Err(Error::DimensionMismatch {
                                sequence: seq.id.clone(),
                                expected: d,
                                found: feat.len(),
                            });
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// Shared proposal-feature dimension, if any proposals exist.
    pub fn feature_dim(&self) -> Option<usize> {
        self.sequences
            .iter()
            .flat_map(|s| &s.frames)
            .flat_map(|f| &f.proposal_features)
            .map(Vec::len)
            .next()
    }
}

/// Loads a newline-delimited corpus file. Malformed records are rejected with
/// their line number, never skipped.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let category = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut sequences = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SequenceRecord =
            serde_json::from_str(&line).map_err(|e| Error::CorpusParse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        sequences.push(record);
    }
    Corpus::new(category, sequences)
}

/// Writes a corpus in the newline-delimited format read by [`load_corpus`].
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for seq in &corpus.sequences {
        serde_json::to_writer(&mut out, seq)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    atoms: Vec<Atom>,
}

pub fn load_vocabulary(path: &Path) -> Result<AtomVocabulary> {
    let text = fs::read_to_string(path)?;
    let file: VocabularyFile = serde_json::from_str(&text)?;
    AtomVocabulary::new(file.atoms)
}

pub fn save_vocabulary(vocab: &AtomVocabulary, path: &Path) -> Result<()> {
    let file = VocabularyFile {
        atoms: vocab.atoms().to_vec(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Assignment of individual object proposals to visual atoms, keyed by
/// (sequence id, frame index, proposal index). Proposals absent from the map
/// are unassigned.
pub type VisualAssignments = BTreeMap<(String, usize, usize), u32>;

/// Binary representation of every frame: language bit m is set iff the
/// frame's subtitles contain the label of language atom m; visual bit m is
/// set iff any of the frame's proposals is assigned to visual atom m.
/// Duplicate tokens contribute a single 1 (occurrence, not count).
pub fn represent_frames(
    corpus: &Corpus,
    vocab: &AtomVocabulary,
    visual_assignments: &VisualAssignments,
) -> Result<Vec<Vec<FrameVector>>> {
    if vocab.is_empty() {
        return Err(Error::InvalidVocabulary("empty vocabulary".into()));
    }
    let label_to_bit: BTreeMap<&str, usize> = vocab.atoms()[..vocab.language_count()]
        .iter()
        .map(|a| (a.label.as_str(), a.id as usize))
        .collect();
    let seq_index: BTreeMap<&str, usize> = corpus
        .sequences
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();

    let mut out: Vec<Vec<FrameVector>> = corpus
        .sequences
        .iter()
        .map(|seq| {
            seq.frames
                .iter()
                .map(|frame| {
                    let mut fv = FrameVector::zeros(vocab.len());
                    for token in &frame.subtitle_tokens {
                        if let Some(&bit) = label_to_bit.get(token.as_str()) {
                            fv.bits[bit] = true;
                        }
                    }
                    fv
                })
                .collect()
        })
        .collect();

    for (&(ref seq_id, frame_idx, proposal_idx), &atom_id) in visual_assignments {
        let atom = vocab
            .atoms()
            .get(atom_id as usize)
            .filter(|a| a.modality == Modality::Visual)
            .ok_or(Error::UnknownAtomId { atom: atom_id })?;
        let &si = seq_index
            .get(seq_id.as_str())
            .ok_or_else(|| Error::DanglingAssignment {
                sequence: seq_id.clone(),
                frame: frame_idx,
                proposal: proposal_idx,
            })?;
        let seq = &corpus.sequences[si];
        let valid = seq
            .frames
            .get(frame_idx)
            .is_some_and(|f| proposal_idx < f.proposal_features.len());
        if !valid {
            return Err(Error::DanglingAssignment {
                sequence: seq_id.clone(),
                frame: frame_idx,
                proposal: proposal_idx,
            });
        }
        out[si][frame_idx].bits[atom.id as usize] = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn frame(t: f64, tokens: &[&str]) -> Frame {
        Frame {
            t,
            subtitle_tokens: tokens.iter().map(|s| s.to_string()).collect(),
            proposal_features: vec![],
        }
    }

    fn seq(id: &str, frames: Vec<Frame>) -> SequenceRecord {
        SequenceRecord {
            id: id.into(),
            description_tokens: vec![],
            frames,
        }
    }

    fn lang_vocab(labels: &[&str]) -> AtomVocabulary {
        AtomVocabulary::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| Atom {
                    id: i as u32,
                    modality: Modality::Language,
                    label: l.to_string(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_two_records() {
        let dir = std::env::temp_dir().join("storyline_corpus_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("two.jsonl");
        let corpus = Corpus::new(
            "two",
            vec![
                seq("a", vec![frame(0.0, &["egg"]), frame(1.0, &["pan"])]),
                seq("b", vec![frame(0.5, &["whisk"])]),
            ],
        )
        .unwrap();
        save_corpus(&corpus, &path).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(loaded.sequences.len(), 2);
        assert_eq!(loaded.sequences, corpus.sequences);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let dir = std::env::temp_dir().join("storyline_corpus_empty");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.sequences.len(), 0);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let dir = std::env::temp_dir().join("storyline_corpus_badline");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"description_tokens\":[],\"frames\":[]}\nnot json\n",
        )
        .unwrap();
        match load_corpus(&path) {
            Err(Error::CorpusParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn mixed_feature_dimensions_rejected() {
        let mut a = seq("a", vec![frame(0.0, &[])]);
        a.frames[0].proposal_features = vec![vec![0.0; 4]];
        let mut b = seq("b", vec![frame(0.0, &[])]);
        b.frames[0].proposal_features = vec![vec![0.0; 5]];
        match Corpus::new("c", vec![a, b]) {
            Err(Error::DimensionMismatch {
                sequence,
                expected,
                found,
            }) => {
                assert_eq!(sequence, "b");
                assert_eq!((expected, found), (4, 5));
            }
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }

    #[test]
    fn non_monotone_timestamps_rejected() {
        let s = seq("a", vec![frame(1.0, &[]), frame(1.0, &[])]);
        assert!(matches!(
            Corpus::new("c", vec![s]),
            Err(Error::NonMonotoneTimestamps { .. })
        ));
    }

    #[test]
    fn language_bits_follow_occurrence() {
        let vocab = lang_vocab(&["egg", "whisk"]);
        let corpus = Corpus::new("c", vec![seq("a", vec![frame(0.0, &["egg", "pan", "egg"])])])
            .unwrap();
        let rep = represent_frames(&corpus, &vocab, &BTreeMap::new()).unwrap();
        assert_eq!(rep[0][0].bits, vec![true, false]);
    }

    #[test]
    fn empty_frame_is_all_zero() {
        let vocab = lang_vocab(&["egg", "whisk"]);
        let corpus = Corpus::new("c", vec![seq("a", vec![frame(0.0, &[])])]).unwrap();
        let rep = represent_frames(&corpus, &vocab, &BTreeMap::new()).unwrap();
        assert!(rep[0][0].bits.iter().all(|&b| !b));
    }

    // Direct evaluation of the occurrence rule on a hand-built 3-frame sequence.
    #[test]
    fn occurrence_pattern_across_frames() {
        let vocab = lang_vocab(&["egg"]);
        let corpus = Corpus::new(
            "c",
            vec![seq(
                "a",
                vec![frame(0.0, &["egg"]), frame(1.0, &["pan"]), frame(2.0, &["egg"])],
            )],
        )
        .unwrap();
        let rep = represent_frames(&corpus, &vocab, &BTreeMap::new()).unwrap();
        let pattern: Vec<bool> = rep[0].iter().map(|f| f.bits[0]).collect();
        assert_eq!(pattern, vec![true, false, true]);
    }

    #[test]
    fn visual_assignment_sets_bit_and_unknown_atom_rejected() {
        let mut atoms = lang_vocab(&["egg"]);
        atoms.extend_visual(["vis_0".to_string()]);
        let mut s = seq("a", vec![frame(0.0, &[])]);
        s.frames[0].proposal_features = vec![vec![1.0, 2.0]];
        let corpus = Corpus::new("c", vec![s]).unwrap();

        let mut assign = BTreeMap::new();
        assign.insert(("a".to_string(), 0, 0), 1u32);
        let rep = represent_frames(&corpus, &atoms, &assign).unwrap();
        assert_eq!(rep[0][0].bits, vec![false, true]);

        let mut bad = BTreeMap::new();
        bad.insert(("a".to_string(), 0, 0), 7u32);
        assert!(matches!(
            represent_frames(&corpus, &atoms, &bad),
            Err(Error::UnknownAtomId { atom: 7 })
        ));
    }

    #[test]
    fn vocabulary_partition_order_enforced() {
        let atoms = vec![
            Atom {
                id: 0,
                modality: Modality::Visual,
                label: "vis".into(),
            },
            Atom {
                id: 1,
                modality: Modality::Language,
                label: "egg".into(),
            },
        ];
        assert!(AtomVocabulary::new(atoms).is_err());
    }
}
