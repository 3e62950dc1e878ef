//! Log-space forward recursion over a sequence's active states, and exact
//! posterior state draws by forward-filter/backward-sample.

use rand::Rng;

use crate::corpus::FrameVector;
use crate::{Error, Result};

#[inline]
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Per-state, per-frame Bernoulli log-likelihood table (`K x T`), computed
/// from set-bit index lists: `base_k + sum_{n set} (ln th - ln(1-th))`.
pub(crate) fn log_emission_rows(
    frames: &[Vec<u16>],
    m: usize,
    thetas: &[&[f64]],
) -> Vec<Vec<f64>> {
    thetas
        .iter()
        .map(|theta| {
            debug_assert_eq!(theta.len(), m);
            let mut base = 0.0;
            let weights: Vec<f64> = theta
                .iter()
                .map(|&p| {
                    base += (1.0 - p).ln();
                    p.ln() - (1.0 - p).ln()
                })
                .collect();
            frames
                .iter()
                .map(|ones| base + ones.iter().map(|&n| weights[n as usize]).sum::<f64>())
                .collect()
        })
        .collect()
}

pub(crate) fn bits_to_indices(frames: &[FrameVector]) -> Vec<Vec<u16>> {
    frames
        .iter()
        .map(|f| f.ones().into_iter().map(|i| i as u16).collect())
        .collect()
}

fn validate_inputs(n_frames: usize, thetas: &[&[f64]], pi: &[Vec<f64>]) -> Result<()> {
    let k = thetas.len();
    if k == 0 {
        return Err(Error::EmptyInput("no active states"));
    }
    if n_frames == 0 {
        return Err(Error::EmptyInput("no frames"));
    }
    if pi.len() != k {
        return Err(Error::LengthMismatch {
            left: pi.len(),
            right: k,
        });
    }
    for row in pi {
        if row.len() != k {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: k,
            });
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("pi row sums to {s}")));
        }
    }
    Ok(())
}

/// Forward log-alphas (`T x K`) under a uniform initial distribution over
/// the active states. `log_e` is indexed `[state][frame]`.
pub(crate) fn forward_alphas(log_e: &[&[f64]], log_pi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = log_e.len();
    let t_len = log_e[0].len();
    let log_init = -(k as f64).ln();
    let mut alphas = Vec::with_capacity(t_len);
    let mut prev: Vec<f64> = (0..k).map(|s| log_init + log_e[s][0]).collect();
    alphas.push(prev.clone());
    let mut scratch = vec![0.0; k];
    for t in 1..t_len {
        let mut cur = vec![0.0; k];
        for (s, c) in cur.iter_mut().enumerate() {
            for j in 0..k {
                scratch[j] = prev[j] + log_pi[j][s];
            }
            *c = log_sum_exp(&scratch) + log_e[s][t];
        }
        alphas.push(cur.clone());
        prev = cur;
    }
    alphas
}

pub(crate) fn log_marginal_from_table(log_e: &[&[f64]], log_pi: &[Vec<f64>]) -> f64 {
    let alphas = forward_alphas(log_e, log_pi);
    log_sum_exp(alphas.last().unwrap())
}

/// Log of the marginal likelihood of one sequence: the sum over all state
/// paths of emission and transition probabilities, initial distribution
/// uniform over the active states.
pub fn log_marginal_sequence(
    frames: &[FrameVector],
    thetas: &[Vec<f64>],
    pi: &[Vec<f64>],
) -> Result<f64> {
    let theta_refs: Vec<&[f64]> = thetas.iter().map(Vec::as_slice).collect();
    validate_inputs(frames.len(), &theta_refs, pi)?;
    let m = frames[0].len();
    let bits = bits_to_indices(frames);
    let log_e = log_emission_rows(&bits, m, &theta_refs);
    let log_e_refs: Vec<&[f64]> = log_e.iter().map(Vec::as_slice).collect();
    let log_pi: Vec<Vec<f64>> = pi
        .iter()
        .map(|row| row.iter().map(|&p| p.ln()).collect())
        .collect();
    Ok(log_marginal_from_table(&log_e_refs, &log_pi))
}

/// Scaled forward pass: probability-space alphas renormalized per frame,
/// with per-frame emission scaling by the max log-emission. Requires
/// strictly positive `pi` rows (the sampler's Dirichlet draws). Returns the
/// normalized alphas and the log marginal.
pub(crate) fn scaled_forward(log_e: &[&[f64]], pi: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let k = log_e.len();
    let t_len = log_e[0].len();
    let mut alphas = Vec::with_capacity(t_len);
    let mut loglik = 0.0;
    let mut prev = vec![0.0; k];
    let mut emit = vec![0.0; k];
    for t in 0..t_len {
        let max_e = (0..k).map(|s| log_e[s][t]).fold(f64::NEG_INFINITY, f64::max);
        for (s, e) in emit.iter_mut().enumerate() {
            *e = (log_e[s][t] - max_e).exp();
        }
        let mut cur = vec![0.0; k];
        if t == 0 {
            let init = 1.0 / k as f64;
            for s in 0..k {
                cur[s] = init * emit[s];
            }
        } else {
            for (j, &pj) in prev.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let row = &pi[j];
                for (s, c) in cur.iter_mut().enumerate() {
                    *c += pj * row[s];
                }
            }
            for (s, c) in cur.iter_mut().enumerate() {
                *c *= emit[s];
            }
        }
        let norm: f64 = cur.iter().sum();
        debug_assert!(norm > 0.0, "scaled forward underflow at frame {t}");
        for c in cur.iter_mut() {
            *c /= norm;
        }
        loglik += norm.ln() + max_e;
        alphas.push(cur.clone());
        prev = cur;
    }
    (alphas, loglik)
}

pub(crate) fn scaled_log_marginal(log_e: &[&[f64]], pi: &[Vec<f64>]) -> f64 {
    scaled_forward(log_e, pi).1
}

fn sample_categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Backward ancestral draw from the scaled alphas.
pub(crate) fn scaled_sample_states<R: Rng>(
    log_e: &[&[f64]],
    pi: &[Vec<f64>],
    rng: &mut R,
) -> Vec<usize> {
    let (alphas, _) = scaled_forward(log_e, pi);
    let t_len = alphas.len();
    let k = log_e.len();
    let mut z = vec![0usize; t_len];
    z[t_len - 1] = sample_categorical(&alphas[t_len - 1], rng);
    let mut weights = vec![0.0; k];
    for t in (0..t_len - 1).rev() {
        let next = z[t + 1];
        for j in 0..k {
            weights[j] = alphas[t][j] * pi[j][next];
        }
        z[t] = sample_categorical(&weights, rng);
    }
    z
}

fn sample_categorical_from_logs<R: Rng>(logs: &[f64], rng: &mut R) -> usize {
    let total = log_sum_exp(logs);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &l) in logs.iter().enumerate() {
        acc += (l - total).exp();
        if u < acc {
            return i;
        }
    }
    logs.len() - 1
}

/// Exact posterior draw of the state path, deterministic given the rng
/// stream. Returns indices into `thetas`/`pi`.
pub(crate) fn sample_states_from_table<R: Rng>(
    log_e: &[&[f64]],
    log_pi: &[Vec<f64>],
    rng: &mut R,
) -> Vec<usize> {
    let alphas = forward_alphas(log_e, log_pi);
    let t_len = alphas.len();
    let k = log_e.len();
    let mut z = vec![0usize; t_len];
    z[t_len - 1] = sample_categorical_from_logs(&alphas[t_len - 1], rng);
    let mut logs = vec![0.0; k];
    for t in (0..t_len - 1).rev() {
        let next = z[t + 1];
        for j in 0..k {
            logs[j] = alphas[t][j] + log_pi[j][next];
        }
        z[t] = sample_categorical_from_logs(&logs, rng);
    }
    z
}

/// Posterior state-path draw for one sequence (uniform initial
/// distribution).
pub fn sample_states<R: Rng>(
    frames: &[FrameVector],
    thetas: &[Vec<f64>],
    pi: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let theta_refs: Vec<&[f64]> = thetas.iter().map(Vec::as_slice).collect();
    validate_inputs(frames.len(), &theta_refs, pi)?;
    let m = frames[0].len();
    let bits = bits_to_indices(frames);
    let log_e = log_emission_rows(&bits, m, &theta_refs);
    let log_e_refs: Vec<&[f64]> = log_e.iter().map(Vec::as_slice).collect();
    let log_pi: Vec<Vec<f64>> = pi
        .iter()
        .map(|row| row.iter().map(|&p| p.ln()).collect())
        .collect();
    Ok(sample_states_from_table(&log_e_refs, &log_pi, rng))
}
