//! Exact sampling from the generative process: IBP activity matrices,
//! prior emission/transition parameters, sticky Markov state paths, and
//! Bernoulli frames. Synthetic corpora with known ground truth are the
//! primary correctness oracle for the sampler.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Poisson};

use crate::bphmm::{ActivityMatrix, ActivityParams, Hyperparams, TransitionState, THETA_CLAMP};
use crate::corpus::{Corpus, Frame, FrameVector, SequenceRecord};
use crate::{Error, Result};

/// A generated corpus together with the latent state that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    pub f: ActivityMatrix,
    pub theta: ActivityParams,
    pub trans: TransitionState,
    pub z: Vec<Vec<usize>>,
    pub frames: Vec<Vec<FrameVector>>,
}

fn draw_poisson<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize
}

const EMPTY_ROW_RETRIES: usize = 10_000;

/// One Indian-buffet-process draw: customer 1 takes Poisson(gamma) dishes,
/// customer i takes existing dish k with probability m_k/i and Poisson(gamma/i)
/// new dishes. Rows that end empty are re-drawn (bounded retries, then one
/// forced new dish) because the downstream HMM needs a nonempty state set.
pub fn sample_ibp<R: Rng>(n_sequences: usize, gamma: f64, rng: &mut R) -> ActivityMatrix {
    sample_ibp_impl(n_sequences, gamma, true, rng)
}

/// The raw IBP draw without the empty-row guard, for distribution tests.
pub fn sample_ibp_unguarded<R: Rng>(n_sequences: usize, gamma: f64, rng: &mut R) -> ActivityMatrix {
    sample_ibp_impl(n_sequences, gamma, false, rng)
}

fn sample_ibp_impl<R: Rng>(n: usize, gamma: f64, guard: bool, rng: &mut R) -> ActivityMatrix {
    let mut rows: Vec<Vec<bool>> = Vec::with_capacity(n);
    let mut dish_counts: Vec<usize> = Vec::new();
    for i in 1..=n {
        let mut row = vec![false; dish_counts.len()];
        let mut new_dishes;
        let mut attempts = 0usize;
        loop {
            for (k, &m_k) in dish_counts.iter().enumerate() {
                row[k] = rng.random::<f64>() < m_k as f64 / i as f64;
            }
            new_dishes = draw_poisson(gamma / i as f64, rng);
            if !guard || new_dishes > 0 || row.iter().any(|&b| b) {
                break;
            }
            attempts += 1;
            if attempts >= EMPTY_ROW_RETRIES {
                new_dishes = 1;
                break;
            }
        }
        for (k, &used) in row.iter().enumerate() {
            if used {
                dish_counts[k] += 1;
            }
        }
        for _ in 0..new_dishes {
            row.push(true);
            dish_counts.push(1);
        }
        rows.push(row);
    }
    let k_total = dish_counts.len();
    for row in &mut rows {
        row.resize(k_total, false);
    }
    ActivityMatrix::new(rows)
}

/// Draws the latent chain and frames for a fixed activity matrix and fixed
/// emission parameters: per-sequence transition weights from the sticky
/// Gamma prior, states from the masked chain (uniform initial state), and
/// frame bits as independent Bernoulli draws.
pub fn generate_with_theta<R: Rng>(
    f: ActivityMatrix,
    theta: ActivityParams,
    t_frames: &[usize],
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<SyntheticTruth> {
    hyper.validate()?;
    f.validate()?;
    let n = f.n_sequences();
    let k = f.n_activities();
    if theta.n_activities() != k {
        return Err(Error::LengthMismatch {
            left: theta.n_activities(),
            right: k,
        });
    }
    if t_frames.len() != n {
        return Err(Error::LengthMismatch {
            left: t_frames.len(),
            right: n,
        });
    }
    let m = theta.n_atoms();

    let mut eta_all = Vec::with_capacity(n);
    let mut z_all = Vec::with_capacity(n);
    let mut frames_all = Vec::with_capacity(n);
    for i in 0..n {
        let mut eta = vec![0.0f64; k * k];
        for j in 0..k {
            for c in 0..k {
                let sticky = if j == c { hyper.kappa } else { 0.0 };
                eta[j * k + c] = Gamma::new(hyper.alpha + sticky, 1.0)
                    .expect("positive shape")
                    .sample(rng)
                    .max(1e-300);
            }
        }
        let active = f.active_set(i);
        let trans = TransitionState {
            eta: vec![eta.clone()],
        };
        let pi = trans.pi_rows(0, &active);

        let t_len = t_frames[i];
        let mut z = Vec::with_capacity(t_len);
        let mut frames = Vec::with_capacity(t_len);
        let mut local = if t_len > 0 {
            rng.random_range(0..active.len())
        } else {
            0
        };
        for t in 0..t_len {
            if t > 0 {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut next = active.len() - 1;
                for (idx, &p) in pi[local].iter().enumerate() {
                    acc += p;
                    if u < acc {
                        next = idx;
                        break;
                    }
                }
                local = next;
            }
            let state = active[local];
            z.push(state);
            let row = &theta.theta[state];
            let ones: Vec<usize> = (0..m).filter(|&a| rng.random::<f64>() < row[a]).collect();
            frames.push(FrameVector::from_indices(m, &ones));
        }
        eta_all.push(eta);
        z_all.push(z);
        frames_all.push(frames);
    }
    Ok(SyntheticTruth {
        f,
        theta,
        trans: TransitionState { eta: eta_all },
        z: z_all,
        frames: frames_all,
    })
}

/// Full generative draw: emission rows from the Beta prior, then
/// [`generate_with_theta`].
pub fn generate_corpus<R: Rng>(
    f: ActivityMatrix,
    m_atoms: usize,
    t_frames: &[usize],
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<SyntheticTruth> {
    hyper.validate()?;
    let beta = Beta::new(hyper.emit_a0, hyper.emit_b0)
        .map_err(|e| Error::InvalidHyperparams(e.to_string()))?;
    let theta = ActivityParams {
        theta: (0..f.n_activities())
            .map(|_| {
                (0..m_atoms)
                    .map(|_| beta.sample(rng).clamp(THETA_CLAMP.0, THETA_CLAMP.1))
                    .collect()
            })
            .collect(),
    };
    generate_with_theta(f, theta, t_frames, hyper, rng)
}

/// Renders a synthetic truth as a loadable corpus: atom `n` is a language
/// atom labeled `atom_n`, frame subtitles list the set bits, and sequence
/// descriptions list the distinct atoms the sequence ever shows.
pub fn truth_to_corpus(truth: &SyntheticTruth) -> Corpus {
    let sequences = truth
        .frames
        .iter()
        .enumerate()
        .map(|(i, frames)| {
            let mut seen: Vec<usize> = frames.iter().flat_map(|f| f.ones()).collect();
            seen.sort_unstable();
            seen.dedup();
            SequenceRecord {
                id: format!("seq_{i:03}"),
                description_tokens: seen.iter().map(|n| format!("atom_{n}")).collect(),
                frames: frames
                    .iter()
                    .enumerate()
                    .map(|(t, fv)| Frame {
                        t: t as f64,
                        subtitle_tokens: fv.ones().iter().map(|n| format!("atom_{n}")).collect(),
                        proposal_features: vec![],
                    })
                    .collect(),
            }
        })
        .collect();
    Corpus::new("synthetic", sequences).expect("generated corpus is valid")
}
