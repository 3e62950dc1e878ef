//! Order-R Markov language model over subtitles, plus ranking of sampled
//! candidate descriptions against a discovered activity's language
//! parameters. The rank of a candidate is the mean emission probability over
//! its token positions that match a language atom; candidates matching no
//! atom rank 0.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::{Error, Result};

const START: &str = "<s>";
const END: &str = "</s>";

/// Candidate description cap during sampling; chains with loops would
/// otherwise never terminate.
const MAX_DESCRIPTION_LEN: usize = 30;

#[derive(Debug, Clone)]
pub struct MarkovLm {
    order: usize,
    transitions: HashMap<Vec<String>, BTreeMap<String, u32>>,
}

impl MarkovLm {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Observed continuation counts for a context (test hook).
    pub fn counts(&self, context: &[&str]) -> Option<&BTreeMap<String, u32>> {
        let key: Vec<String> = context.iter().map(|s| s.to_string()).collect();
        self.transitions.get(&key)
    }
}

/// Counts all (context -> next) transitions over the streams, with
/// start-sentinel padding and one end sentinel per stream. Empty streams are
/// skipped; all-empty input is an error.
pub fn train_markov_lm(streams: &[Vec<String>], order: usize) -> Result<MarkovLm> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be >= 1".into()));
    }
    let mut transitions: HashMap<Vec<String>, BTreeMap<String, u32>> = HashMap::new();
    let mut any = false;
    for stream in streams {
        if stream.is_empty() {
            continue;
        }
        any = true;
        let mut context: Vec<String> = vec![START.to_string(); order];
        for token in stream.iter().map(String::as_str).chain([END]) {
            *transitions
                .entry(context.clone())
                .or_default()
                .entry(token.to_string())
                .or_insert(0) += 1;
            context.remove(0);
            context.push(token.to_string());
        }
    }
    if !any {
        return Err(Error::EmptyInput("all token streams are empty"));
    }
    Ok(MarkovLm { order, transitions })
}

/// Ancestral sample from the context-conditional empirical distributions,
/// until the end sentinel or `max_len` tokens.
pub fn sample_description<R: Rng>(lm: &MarkovLm, rng: &mut R, max_len: usize) -> Vec<String> {
    let mut context: Vec<String> = vec![START.to_string(); lm.order];
    let mut out = Vec::new();
    while out.len() < max_len {
        let Some(counts) = lm.transitions.get(&context) else {
            break;
        };
        let total: u32 = counts.values().sum();
        let mut pick = rng.random_range(0..total);
        let mut chosen = None;
        for (token, &c) in counts {
            if pick < c {
                chosen = Some(token.clone());
                break;
            }
            pick -= c;
        }
        let token = chosen.expect("nonempty count map");
        if token == END {
            break;
        }
        context.remove(0);
        context.push(token.clone());
        out.push(token);
    }
    out
}

/// Mean emission probability over the token positions that match a language
/// atom label; 0 when no position matches.
pub fn rank_description(tokens: &[String], theta_language: &[f64], atom_labels: &[String]) -> f64 {
    let index: HashMap<&str, usize> = atom_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for token in tokens {
        if let Some(&i) = index.get(token.as_str()) {
            num += theta_language[i];
            den += 1.0;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDescription {
    pub tokens: Vec<String>,
    pub rank: f64,
}

/// Samples `n_samples` candidates and keeps the highest-ranked one; rank
/// ties resolve to the shorter candidate, then lexicographically.
pub fn describe_activity<R: Rng>(
    lm: &MarkovLm,
    theta_language: &[f64],
    atom_labels: &[String],
    n_samples: usize,
    rng: &mut R,
) -> Result<RankedDescription> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let mut best: Option<RankedDescription> = None;
    for _ in 0..n_samples {
        let tokens = sample_description(lm, rng, MAX_DESCRIPTION_LEN);
        let rank = rank_description(&tokens, theta_language, atom_labels);
        let better = match &best {
            None => true,
            Some(b) => {
                rank > b.rank
                    || (rank == b.rank
                        && (tokens.len() < b.tokens.len()
                            || (tokens.len() == b.tokens.len() && tokens < b.tokens)))
            }
        };
        if better {
            best = Some(RankedDescription { tokens, rank });
        }
    }
    Ok(best.expect("n_samples >= 1"))
}
