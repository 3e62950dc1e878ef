//! Language-atom selection: the top-K salient words of a target collection,
//! scored by tf-idf against the full set of collections.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use crate::corpus::{Atom, Corpus, Modality};
use crate::{Error, Result};

/// A standard English stop-word list (~170 entries). The tf-idf score alone
/// does not suppress function words at small collection counts, so they are
/// filtered before scoring.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an", "and", "any",
    "are", "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between",
    "both", "but", "by", "can", "cannot", "could", "couldn", "d", "did", "didn", "do", "does",
    "doesn", "doing", "don", "down", "during", "each", "few", "for", "from", "further", "had",
    "hadn", "has", "hasn", "have", "haven", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself",
    "just", "ll", "m", "ma", "me", "might", "mightn", "more", "most", "must", "mustn", "my",
    "myself", "need", "needn", "no", "nor", "not", "now", "o", "of", "off", "on", "once", "only",
    "or", "other", "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same", "shall",
    "shan", "she", "should", "shouldn", "so", "some", "such", "t", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through",
    "to", "too", "under", "until", "up", "ve", "very", "was", "wasn", "we", "were", "weren",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "won",
    "would", "wouldn", "y", "you", "your", "yours", "yourself", "yourselves", "also", "get",
    "got", "gonna", "just", "like", "really", "well", "yeah", "okay", "oh", "us",
];

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Reads a whitespace-separated stop-word file.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.split_whitespace().map(str::to_string).collect())
}

/// Per-word tf-idf bookkeeping for one target collection.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfStats {
    pub word: String,
    pub freq_in_document: u64,
    pub collections_containing: u32,
    pub total_collections: u32,
    pub score: f64,
}

/// `freq * ln(1 + total/containing)`, natural logarithm.
pub fn tfidf_score(freq: u64, total_collections: u32, collections_containing: u32) -> Result<f64> {
    if collections_containing == 0 {
        return Err(Error::TfidfDomain);
    }
    if collections_containing > total_collections {
        return Err(Error::InvalidArgument(format!(
            "collections_containing {collections_containing} > total {total_collections}"
        )));
    }
    Ok(freq as f64
        * (1.0 + f64::from(total_collections) / f64::from(collections_containing)).ln())
}

fn subtitle_words(corpus: &Corpus) -> impl Iterator<Item = &str> {
    corpus
        .sequences
        .iter()
        .flat_map(|s| &s.frames)
        .flat_map(|f| &f.subtitle_tokens)
        .map(String::as_str)
}

/// Scores every non-stop-word of the target corpus's concatenated subtitle
/// document against the full corpus set. Sorted by descending score, ties by
/// word ascending.
pub fn score_words(
    corpora: &[Corpus],
    target: usize,
    stopwords: &HashSet<String>,
) -> Result<Vec<TfidfStats>> {
    if corpora.is_empty() {
        return Err(Error::EmptyInput("no corpora"));
    }
    if target >= corpora.len() {
        return Err(Error::InvalidArgument(format!(
            "target index {target} out of range for {} corpora",
            corpora.len()
        )));
    }
    let total = corpora.len() as u32;

    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for word in subtitle_words(&corpora[target]) {
        if !stopwords.contains(word) {
            *freq.entry(word).or_insert(0) += 1;
        }
    }

    let mut containing: BTreeMap<&str, u32> = freq.keys().map(|&w| (w, 0)).collect();
    for corpus in corpora {
        let present: BTreeSet<&str> = subtitle_words(corpus)
            .filter(|w| containing.contains_key(w))
            .collect();
        for w in present {
            *containing.get_mut(w).unwrap() += 1;
        }
    }

    let mut stats: Vec<TfidfStats> = freq
        .into_iter()
        .map(|(word, f)| {
            let n_w = containing[word];
            Ok(TfidfStats {
                word: word.to_string(),
                freq_in_document: f,
                collections_containing: n_w,
                total_collections: total,
                score: tfidf_score(f, total, n_w)?,
            })
        })
        .collect::<Result<_>>()?;
    stats.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(stats)
}

/// The `k` highest-scoring words of the target collection as language atoms,
/// descending by score. Returns fewer when fewer distinct words exist.
pub fn select_language_atoms(
    corpora: &[Corpus],
    target: usize,
    k: usize,
    stopwords: &HashSet<String>,
) -> Result<Vec<Atom>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let stats = score_words(corpora, target, stopwords)?;
    Ok(stats
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, s)| Atom {
            id: i as u32,
            modality: Modality::Language,
            label: s.word,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Frame, SequenceRecord};
    use approx::assert_relative_eq;

    fn corpus_of(words: &[(&str, usize)]) -> Corpus {
        // One frame per word occurrence.
        let frames: Vec<Frame> = words
            .iter()
            .flat_map(|&(w, n)| {
                (0..n).map(move |_| Frame {
                    t: 0.0,
                    subtitle_tokens: vec![w.to_string()],
                    proposal_features: vec![],
                })
            })
            .enumerate()
            .map(|(i, mut f)| {
                f.t = i as f64;
                f
            })
            .collect();
        Corpus::new(
            "test",
            vec![SequenceRecord {
                id: "s".into(),
                description_tokens: vec![],
                frames,
            }],
        )
        .unwrap()
    }

    #[test]
    fn zero_frequency_scores_zero() {
        assert_eq!(tfidf_score(0, 17, 3).unwrap(), 0.0);
    }

    #[test]
    fn word_in_all_collections() {
        assert_relative_eq!(
            tfidf_score(5, 17, 17).unwrap(),
            5.0 * 2f64.ln(),
            max_relative = 1e-12
        );
    }

    // Direct evaluation of the tf-idf formula: 5 * ln(1 + 17/2) = 5 * ln(9.5).
    #[test]
    fn rare_word_scores_higher() {
        assert_relative_eq!(
            tfidf_score(5, 17, 2).unwrap(),
            11.256458993032478,
            max_relative = 1e-12
        );
        assert_relative_eq!(tfidf_score(5, 17, 2).unwrap(), 5.0 * 9.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn zero_containing_is_domain_error() {
        assert!(matches!(tfidf_score(5, 17, 0), Err(Error::TfidfDomain)));
    }

    // Without a stop list, "the" (500 occurrences, all 10 collections) beats
    // "whisk" (50 occurrences, 1 of 10): 500*ln(2) > 50*ln(11). With the stop
    // list applied, "whisk" wins.
    #[test]
    fn stop_words_must_be_prefiltered() {
        let mut corpora = vec![corpus_of(&[("whisk", 50), ("the", 500)])];
        for i in 0..9 {
            let mut c = corpus_of(&[("the", 1)]);
            c.sequences[0].id = format!("other{i}");
            corpora.push(c);
        }
        let none = HashSet::new();
        let stats = score_words(&corpora, 0, &none).unwrap();
        assert_eq!(stats[0].word, "the");
        assert_relative_eq!(stats[0].score, 500.0 * 2f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(stats[1].score, 50.0 * 11f64.ln(), max_relative = 1e-12);

        let atoms = select_language_atoms(&corpora, 0, 1, &default_stopwords()).unwrap();
        assert_eq!(atoms[0].label, "whisk");
    }

    #[test]
    fn ties_break_lexicographically() {
        let corpora = vec![corpus_of(&[("b", 3), ("a", 3)])];
        let atoms = select_language_atoms(&corpora, 0, 2, &HashSet::new()).unwrap();
        let labels: Vec<&str> = atoms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, vec!["a", "b"]);
    }

    #[test]
    fn k_larger_than_vocabulary_returns_all() {
        let corpora = vec![corpus_of(&[("a", 1), ("b", 2)])];
        let atoms = select_language_atoms(&corpora, 0, 100, &HashSet::new()).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].label, "b");
    }

    #[test]
    fn scores_non_increasing_and_ids_dense() {
        let corpora = vec![corpus_of(&[("a", 5), ("b", 2), ("c", 9)])];
        let stats = score_words(&corpora, 0, &HashSet::new()).unwrap();
        for w in stats.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        let atoms = select_language_atoms(&corpora, 0, 3, &HashSet::new()).unwrap();
        for (i, a) in atoms.iter().enumerate() {
            assert_eq!(a.id as usize, i);
            assert_eq!(a.modality, Modality::Language);
        }
    }

    // Monotonicity in N with n_w fixed: an unrelated collection raises scores.
    #[test]
    fn unrelated_corpus_raises_score() {
        let target = corpus_of(&[("whisk", 3)]);
        let mut unrelated = corpus_of(&[("tire", 1)]);
        unrelated.sequences[0].id = "u".into();
        let one = score_words(std::slice::from_ref(&target), 0, &HashSet::new()).unwrap();
        let two = score_words(&[target, unrelated], 0, &HashSet::new()).unwrap();
        assert!(two[0].score > one[0].score);
    }
}
