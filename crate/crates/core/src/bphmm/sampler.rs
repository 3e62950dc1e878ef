//! MCMC moves: shared-feature flips, data-driven birth/death of
//! sequence-unique activities, state resampling, and conjugate parameter
//! updates, plus the sweep orchestration and parse extraction.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use super::forward::{
    bits_to_indices, log_emission_rows, scaled_log_marginal, scaled_sample_states,
};
use super::{ActivityModel, ActivityParams, Hyperparams, TransitionState, THETA_CLAMP};
use crate::corpus::FrameVector;
use crate::rng::{stream, tag};
use crate::storyline::{
    segments_from_labels, ActivityRecord, ExemplarRef, FrameConfidence, SequenceParse,
    StorylineParse,
};
use crate::{Error, Result};

/// Frames reduced to set-bit index lists, the sampler's working format.
#[derive(Debug, Clone)]
pub struct GibbsData {
    pub m: usize,
    pub bits: Vec<Vec<Vec<u16>>>,
}

impl GibbsData {
    pub fn from_frames(frames: &[Vec<FrameVector>]) -> Result<Self> {
        if frames.is_empty() || frames.iter().any(Vec::is_empty) {
            return Err(Error::EmptyCorpus);
        }
        let m = frames[0][0].len();
        if m > usize::from(u16::MAX) {
            return Err(Error::InvalidArgument(format!(
                "vocabulary size {m} exceeds the sampler's atom-index width"
            )));
        }
        for seq in frames {
            for f in seq {
                if f.len() != m {
                    return Err(Error::LengthMismatch {
                        left: f.len(),
                        right: m,
                    });
                }
            }
        }
        Ok(Self {
            m,
            bits: frames.iter().map(|seq| bits_to_indices(seq)).collect(),
        })
    }

    pub fn n_sequences(&self) -> usize {
        self.bits.len()
    }
}

fn draw_clamped_beta<R: Rng>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b)
        .expect("valid Beta shape")
        .sample(rng)
        .clamp(THETA_CLAMP.0, THETA_CLAMP.1)
}

fn draw_gamma<R: Rng>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("valid Gamma shape")
        .sample(rng)
        .max(1e-300)
}

fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() + ln_gamma(a + b)
        - ln_gamma(a)
        - ln_gamma(b)
}

/// Log emission table for every current column of the model, `K x T`.
fn emission_table(theta: &ActivityParams, bits: &[Vec<u16>], m: usize) -> Vec<Vec<f64>> {
    let refs: Vec<&[f64]> = theta.theta.iter().map(Vec::as_slice).collect();
    log_emission_rows(bits, m, &refs)
}

fn marginal_for_active(
    model: &ActivityModel,
    table: &[Vec<f64>],
    i: usize,
    active: &[usize],
) -> f64 {
    let rows: Vec<&[f64]> = active.iter().map(|&k| table[k].as_slice()).collect();
    let pi = model.trans.pi_rows(i, active);
    scaled_log_marginal(&rows, &pi)
}

fn insert_sorted(set: &[usize], value: usize) -> Vec<usize> {
    let mut out = set.to_vec();
    let pos = out.partition_point(|&v| v < value);
    out.insert(pos, value);
    out
}

fn remove_from(set: &[usize], value: usize) -> Vec<usize> {
    set.iter().copied().filter(|&v| v != value).collect()
}

/// One Metropolis-Hastings pass over the shared activities of sequence `i`:
/// for every column some other sequence uses, propose flipping `f_ik`. The
/// acceptance ratio combines the collapsed IBP prior ratio
/// `m_-ik / (beta_c + N - 1 - m_-ik)` with the marginal-likelihood ratio of
/// the sequence. A flip that would empty the row is never proposed.
pub fn resample_shared_features<R: Rng>(
    model: &mut ActivityModel,
    data: &GibbsData,
    i: usize,
    rng: &mut R,
) -> Result<()> {
    let n = model.n_sequences();
    let table = emission_table(&model.theta, &data.bits[i], data.m);
    let mut active = model.active_set(i);
    let mut current = marginal_for_active(model, &table, i, &active);

    for k in 0..model.n_activities() {
        let m_others = model.f.column_count_excluding(k, i);
        if m_others == 0 {
            continue;
        }
        let on = model.f.get(i, k);
        if on && active.len() == 1 {
            continue;
        }
        let flipped = if on {
            remove_from(&active, k)
        } else {
            insert_sorted(&active, k)
        };
        let proposed = marginal_for_active(model, &table, i, &flipped);
        let denom = model.hyper.beta_c + (n - 1) as f64 - m_others as f64;
        let ln_prior = if on {
            (denom / m_others as f64).ln()
        } else {
            (m_others as f64 / denom).ln()
        };
        let ln_accept = ln_prior + proposed - current;
        if rng.random::<f64>().ln() < ln_accept {
            model.f.set(i, k, !on);
            if on {
                // Stale assignments are redirected until the z stage re-draws them.
                let fallback = flipped[0];
                for z in model.z[i].iter_mut() {
                    if *z == k {
                        *z = fallback;
                    }
                }
            }
            active = flipped;
            current = proposed;
        }
    }
    Ok(())
}

/// Draws novel-activity emission parameters from a temporal window:
/// entrywise `Beta(a0 + c_n, b0 + len - c_n)` with `c_n` the count of window
/// frames carrying atom `n`.
pub fn window_theta_proposal<R: Rng>(
    frames: &[FrameVector],
    start: usize,
    len: usize,
    a0: f64,
    b0: f64,
    rng: &mut R,
) -> Vec<f64> {
    let m = frames[0].len();
    let bits = bits_to_indices(frames);
    window_draw(&bits, m, start, len, a0, b0, rng).0
}

fn window_counts(bits: &[Vec<u16>], m: usize, start: usize, len: usize) -> Vec<u32> {
    let mut counts = vec![0u32; m];
    for frame in &bits[start..start + len] {
        for &n in frame {
            counts[n as usize] += 1;
        }
    }
    counts
}

fn window_draw<R: Rng>(
    bits: &[Vec<u16>],
    m: usize,
    start: usize,
    len: usize,
    a0: f64,
    b0: f64,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let counts = window_counts(bits, m, start, len);
    let mut theta = Vec::with_capacity(m);
    let mut ln_q = 0.0;
    for &c in &counts {
        let a = a0 + f64::from(c);
        let b = b0 + (len as f64 - f64::from(c));
        let x = draw_clamped_beta(a, b, rng);
        ln_q += ln_beta_pdf(x, a, b);
        theta.push(x);
    }
    (theta, ln_q)
}

fn window_density(bits: &[Vec<u16>], m: usize, theta: &[f64], start: usize, len: usize, a0: f64, b0: f64) -> f64 {
    let counts = window_counts(bits, m, start, len);
    theta
        .iter()
        .zip(&counts)
        .map(|(&x, &c)| ln_beta_pdf(x, a0 + f64::from(c), b0 + (len as f64 - f64::from(c))))
        .sum()
}

fn ln_prior_density(theta: &[f64], a0: f64, b0: f64) -> f64 {
    theta.iter().map(|&x| ln_beta_pdf(x, a0, b0)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    BirthAccepted,
    BirthRejected,
    DeathAccepted,
    DeathRejected,
}

fn pi_rows_from(eta: &[f64], k_all: usize, active: &[usize]) -> Vec<Vec<f64>> {
    active
        .iter()
        .map(|&j| {
            let row = &eta[j * k_all..(j + 1) * k_all];
            let total: f64 = active.iter().map(|&k| row[k]).sum();
            active.iter().map(|&k| row[k] / total).collect()
        })
        .collect()
}

/// Reversible-jump birth/death of activities unique to sequence `i`. Births
/// draw parameters from a data-driven window proposal; deaths pick a unique
/// activity uniformly. The prior contributes a `Poisson(gamma * beta_c /
/// (beta_c + N - 1))` factor on the number of unique activities.
pub fn propose_novel_activity<R: Rng>(
    model: &mut ActivityModel,
    data: &GibbsData,
    i: usize,
    rng: &mut R,
) -> Result<MoveOutcome> {
    let n = model.n_sequences();
    let t_len = data.bits[i].len();
    if t_len == 0 {
        return Err(Error::EmptyInput("sequence has no frames"));
    }
    let (a0, b0) = (model.hyper.emit_a0, model.hyper.emit_b0);
    let active = model.active_set(i);
    let unique: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&k| model.f.column_count(k) == 1)
        .collect();
    let n_u = unique.len();
    let death_possible = n_u >= 1 && active.len() >= 2;
    let q_birth = if death_possible { 0.5 } else { 1.0 };
    let lambda = model.hyper.gamma * model.hyper.beta_c / (model.hyper.beta_c + (n - 1) as f64);

    let table = emission_table(&model.theta, &data.bits[i], data.m);
    let current = marginal_for_active(model, &table, i, &active);
    let k_old = model.n_activities();

    if rng.random::<f64>() < q_birth {
        let start = rng.random_range(0..t_len);
        let len = rng.random_range(1..=t_len - start);
        let (theta_star, ln_q) = window_draw(&data.bits[i], data.m, start, len, a0, b0, rng);
        let ln_p = ln_prior_density(&theta_star, a0, b0);

        // Transition weights for the new column, proposed from the prior
        // (their densities cancel in the ratio).
        let mut ext = ExtendedEta::draw(&model.trans.eta[i], k_old, &model.hyper, rng);
        let new_active = insert_sorted(&active, k_old);
        let ext_eta = ext.materialize();
        let pi = pi_rows_from(&ext_eta, k_old + 1, &new_active);
        let theta_ref: [&[f64]; 1] = [theta_star.as_slice()];
        let new_row = log_emission_rows(&data.bits[i], data.m, &theta_ref).remove(0);
        let rows: Vec<&[f64]> = new_active
            .iter()
            .map(|&k| {
                if k == k_old {
                    new_row.as_slice()
                } else {
                    table[k].as_slice()
                }
            })
            .collect();
        let proposed = scaled_log_marginal(&rows, &pi);

        let ln_accept = lambda.ln() - ((n_u + 1) as f64).ln() + (ln_p - ln_q)
            + (proposed - current)
            + 0.5f64.ln()
            - q_birth.ln();
        if rng.random::<f64>().ln() < ln_accept {
            model.push_column(i, theta_star);
            for j in 0..n {
                if j == i {
                    model.trans.eta[j] = ext.take();
                } else {
                    model.trans.eta[j] =
                        ExtendedEta::draw(&model.trans.eta[j], k_old, &model.hyper, rng).take();
                }
            }
            Ok(MoveOutcome::BirthAccepted)
        } else {
            Ok(MoveOutcome::BirthRejected)
        }
    } else {
        let victim = unique[rng.random_range(0..n_u)];
        let reduced = remove_from(&active, victim);
        let proposed = marginal_for_active(model, &table, i, &reduced);

        // Density of the reverse birth move for the victim's parameters,
        // evaluated on a freshly sampled window.
        let start = rng.random_range(0..t_len);
        let len = rng.random_range(1..=t_len - start);
        let ln_q = window_density(
            &data.bits[i],
            data.m,
            &model.theta.theta[victim],
            start,
            len,
            a0,
            b0,
        );
        let ln_p = ln_prior_density(&model.theta.theta[victim], a0, b0);

        let q_birth_after: f64 = if n_u > 1 && active.len() > 2 { 0.5 } else { 1.0 };
        let ln_accept = -lambda.ln() + (n_u as f64).ln() + (ln_q - ln_p)
            + (proposed - current)
            + q_birth_after.ln()
            - 0.5f64.ln();
        if rng.random::<f64>().ln() < ln_accept {
            model.remove_column(victim);
            Ok(MoveOutcome::DeathAccepted)
        } else {
            Ok(MoveOutcome::DeathRejected)
        }
    }
}

/// Scratch for extending one sequence's eta matrix by one column.
struct ExtendedEta {
    eta: Vec<f64>,
}

impl ExtendedEta {
    fn draw<R: Rng>(old: &[f64], k_old: usize, hyper: &Hyperparams, rng: &mut R) -> Self {
        let k_new = k_old + 1;
        let mut eta = vec![0.0; k_new * k_new];
        for j in 0..k_old {
            eta[j * k_new..j * k_new + k_old].copy_from_slice(&old[j * k_old..(j + 1) * k_old]);
            eta[j * k_new + k_old] = draw_gamma(hyper.alpha, rng);
        }
        for c in 0..k_new {
            let shape = hyper.alpha + if c == k_old { hyper.kappa } else { 0.0 };
            eta[k_old * k_new + c] = draw_gamma(shape, rng);
        }
        Self { eta }
    }

    fn materialize(&mut self) -> Vec<f64> {
        self.eta.clone()
    }

    fn take(&mut self) -> Vec<f64> {
        std::mem::take(&mut self.eta)
    }
}

/// Exact posterior redraw of sequence `i`'s state path given the current
/// parameters.
pub fn resample_states<R: Rng>(
    model: &mut ActivityModel,
    data: &GibbsData,
    i: usize,
    rng: &mut R,
) -> Result<()> {
    let active = model.active_set(i);
    let theta_refs: Vec<&[f64]> = active
        .iter()
        .map(|&k| model.theta.theta[k].as_slice())
        .collect();
    let table = log_emission_rows(&data.bits[i], data.m, &theta_refs);
    let rows: Vec<&[f64]> = table.iter().map(Vec::as_slice).collect();
    let pi = model.trans.pi_rows(i, &active);
    let local = scaled_sample_states(&rows, &pi, rng);
    model.z[i] = local.into_iter().map(|l| active[l]).collect();
    Ok(())
}

/// Conjugate emission update: `theta_kn ~ Beta(a0 + c1, b0 + c0)` with
/// c1/c0 counting assigned frames with bit n set/unset. Activities with no
/// assigned frames draw from the prior.
pub fn resample_theta<R: Rng>(model: &mut ActivityModel, data: &GibbsData, rng: &mut R) -> Result<()> {
    let k = model.n_activities();
    let m = data.m;
    let mut set_counts = vec![vec![0u32; m]; k];
    let mut totals = vec![0u32; k];
    for (i, zi) in model.z.iter().enumerate() {
        for (t, &s) in zi.iter().enumerate() {
            totals[s] += 1;
            for &n in &data.bits[i][t] {
                set_counts[s][n as usize] += 1;
            }
        }
    }
    let (a0, b0) = (model.hyper.emit_a0, model.hyper.emit_b0);
    for s in 0..k {
        for n in 0..m {
            let c1 = f64::from(set_counts[s][n]);
            let c0 = f64::from(totals[s]) - c1;
            model.theta.theta[s][n] = draw_clamped_beta(a0 + c1, b0 + c0, rng);
        }
    }
    Ok(())
}

/// Transition update for sequence `i`: active rows get
/// `pi_j ~ Dirichlet(N_jk + alpha + kappa delta_jk)` scaled by
/// `C ~ Gamma(K_+ lambda + kappa, 1)`; inactive entries are refreshed from
/// the prior (they are auxiliary variables for the flip proposals).
pub fn resample_transitions<R: Rng>(
    model: &mut ActivityModel,
    i: usize,
    rng: &mut R,
) -> Result<()> {
    let k_all = model.n_activities();
    let active = model.active_set(i);
    let ka = active.len();
    let hyper = model.hyper;
    let local: HashMap<usize, usize> = active.iter().enumerate().map(|(l, &s)| (s, l)).collect();

    let mut counts = vec![vec![0u32; ka]; ka];
    for w in model.z[i].windows(2) {
        counts[local[&w[0]]][local[&w[1]]] += 1;
    }

    let mut new_active = vec![vec![0.0; ka]; ka];
    for (lj, &j) in active.iter().enumerate() {
        let draws: Vec<f64> = active
            .iter()
            .enumerate()
            .map(|(lk, &k)| {
                let sticky = if j == k { hyper.kappa } else { 0.0 };
                draw_gamma(f64::from(counts[lj][lk]) + hyper.alpha + sticky, rng)
            })
            .collect();
        let total: f64 = draws.iter().sum();
        let scale = draw_gamma(ka as f64 * hyper.lambda + hyper.kappa, rng);
        for (lk, d) in draws.iter().enumerate() {
            new_active[lj][lk] = (d / total) * scale;
        }
    }

    let eta = &mut model.trans.eta[i];
    for j in 0..k_all {
        for k in 0..k_all {
            let entry = &mut eta[j * k_all + k];
            match (local.get(&j), local.get(&k)) {
                (Some(&lj), Some(&lk)) => *entry = new_active[lj][lk].max(1e-300),
                _ => {
                    let sticky = if j == k { hyper.kappa } else { 0.0 };
                    *entry = draw_gamma(hyper.alpha + sticky, rng);
                }
            }
        }
    }
    Ok(())
}

/// One full sweep in fixed order: per-sequence feature flips and
/// birth/death, then state paths, then emissions, then transitions, then
/// column pruning. Randomness is drawn from streams derived from
/// `(seed, sweep, stage, sequence)`.
pub fn gibbs_sweep(
    model: &mut ActivityModel,
    data: &GibbsData,
    seed: u64,
    sweep: u64,
) -> Result<()> {
    let n = model.n_sequences();
    for i in 0..n {
        let mut r = stream(seed, &[tag("features"), sweep, i as u64]);
        resample_shared_features(model, data, i, &mut r)?;
        let mut r = stream(seed, &[tag("moves"), sweep, i as u64]);
        propose_novel_activity(model, data, i, &mut r)?;
    }
    for i in 0..n {
        let mut r = stream(seed, &[tag("states"), sweep, i as u64]);
        resample_states(model, data, i, &mut r)?;
    }
    let mut r = stream(seed, &[tag("theta"), sweep]);
    resample_theta(model, data, &mut r)?;
    for i in 0..n {
        let mut r = stream(seed, &[tag("transitions"), sweep, i as u64]);
        resample_transitions(model, i, &mut r)?;
    }
    model.prune_empty_columns();
    Ok(())
}

/// Prior-draw initialization: F from the IBP (empty rows re-drawn), theta
/// from the emission prior, z uniform over each row's active set, eta from
/// the transition prior.
pub fn init_model(data: &GibbsData, hyper: Hyperparams, seed: u64) -> Result<ActivityModel> {
    hyper.validate()?;
    let n = data.n_sequences();
    let mut rng = stream(seed, &[tag("init")]);
    let f = crate::synth::sample_ibp(n, hyper.gamma, &mut rng);
    let k = f.n_activities();
    let theta = ActivityParams {
        theta: (0..k)
            .map(|_| {
                (0..data.m)
                    .map(|_| draw_clamped_beta(hyper.emit_a0, hyper.emit_b0, &mut rng))
                    .collect()
            })
            .collect(),
    };
    let eta: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut e = vec![0.0; k * k];
            for j in 0..k {
                for c in 0..k {
                    let sticky = if j == c { hyper.kappa } else { 0.0 };
                    e[j * k + c] = draw_gamma(hyper.alpha + sticky, &mut rng);
                }
            }
            e
        })
        .collect();
    let z: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let active = f.active_set(i);
            (0..data.bits[i].len())
                .map(|_| active[rng.random_range(0..active.len())])
                .collect()
        })
        .collect();
    let model = ActivityModel {
        hyper,
        f,
        theta,
        trans: TransitionState { eta },
        z,
        column_ids: (0..k as u32).collect(),
        next_column_id: k as u32,
    };
    model.validate()?;
    Ok(model)
}

/// Runs the sampler and extracts the parse: per-frame labels are the modal
/// labels over post-burn-in sweeps under the persistent column ids (columns
/// are pruned, never relabeled). Ties resolve toward the previous frame's
/// label, then the smallest id.
pub fn run_gibbs(
    ids: &[String],
    frames: &[Vec<FrameVector>],
    language_count: usize,
    hyper: Hyperparams,
    n_sweeps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<(ActivityModel, StorylineParse)> {
    if n_sweeps <= burn_in {
        return Err(Error::InvalidArgument(format!(
            "n_sweeps ({n_sweeps}) must exceed burn_in ({burn_in})"
        )));
    }
    if ids.len() != frames.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: frames.len(),
        });
    }
    let data = GibbsData::from_frames(frames)?;
    let mut model = init_model(&data, hyper, seed)?;

    let mut label_counts: Vec<Vec<HashMap<u32, u32>>> = data
        .bits
        .iter()
        .map(|seq| vec![HashMap::new(); seq.len()])
        .collect();
    let mut theta_by_id: HashMap<u32, Vec<f64>> = HashMap::new();

    for sweep in 0..n_sweeps {
        gibbs_sweep(&mut model, &data, seed, sweep)?;
        if sweep >= burn_in {
            for (i, zi) in model.z.iter().enumerate() {
                for (t, &slot) in zi.iter().enumerate() {
                    *label_counts[i][t].entry(model.column_ids[slot]).or_insert(0) += 1;
                }
            }
            for (slot, &id) in model.column_ids.iter().enumerate() {
                theta_by_id.insert(id, model.theta.theta[slot].clone());
            }
        }
    }

    let retained = (n_sweeps - burn_in) as f64;
    let mut sequences = Vec::with_capacity(ids.len());
    let mut frame_confidence = Vec::with_capacity(ids.len());
    let mut used_ids: Vec<u32> = Vec::new();
    let mut modal_by_sequence: Vec<Vec<u32>> = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let mut labels = Vec::with_capacity(label_counts[i].len());
        let mut confidences = Vec::with_capacity(label_counts[i].len());
        let mut prev: Option<u32> = None;
        for counts in &label_counts[i] {
            let best = counts.values().copied().max().unwrap();
            let mut tied: Vec<u32> = counts
                .iter()
                .filter_map(|(&id, &c)| (c == best).then_some(id))
                .collect();
            tied.sort_unstable();
            let chosen = match prev {
                Some(p) if tied.contains(&p) => p,
                _ => tied[0],
            };
            prev = Some(chosen);
            labels.push(chosen);
            let mut conf: Vec<FrameConfidence> = counts
                .iter()
                .map(|(&id, &c)| FrameConfidence {
                    activity: id,
                    p: f64::from(c) / retained,
                })
                .collect();
            conf.sort_by_key(|fc| fc.activity);
            confidences.push(conf);
        }
        for &l in &labels {
            if !used_ids.contains(&l) {
                used_ids.push(l);
            }
        }
        sequences.push(SequenceParse {
            id: id.clone(),
            segments: segments_from_labels(&labels),
        });
        modal_by_sequence.push(labels);
        frame_confidence.push(confidences);
    }
    used_ids.sort_unstable();

    let activities = used_ids
        .iter()
        .map(|&activity_id| {
            let theta = &theta_by_id[&activity_id];
            let exemplars = select_exemplars(ids, frames, &modal_by_sequence, activity_id, theta);
            ActivityRecord {
                id: activity_id,
                theta_language: theta[..language_count.min(theta.len())].to_vec(),
                theta_visual: theta[language_count.min(theta.len())..].to_vec(),
                description: Vec::new(),
                exemplars,
            }
        })
        .collect();

    let parse = StorylineParse {
        sequences,
        activities,
        frame_confidence,
    };
    Ok((model, parse))
}

/// The highest-emission-likelihood frame per sequence among those assigned
/// to the activity; the best 4 sequences win. Ties break on
/// (sequence id, frame index).
fn select_exemplars(
    ids: &[String],
    frames: &[Vec<FrameVector>],
    modal: &[Vec<u32>],
    activity_id: u32,
    theta: &[f64],
) -> Vec<ExemplarRef> {
    let mut per_sequence: Vec<(f64, &str, usize)> = Vec::new();
    for (i, labels) in modal.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (t, &l) in labels.iter().enumerate() {
            if l != activity_id {
                continue;
            }
            let ll: f64 = frames[i][t]
                .bits
                .iter()
                .zip(theta)
                .map(|(&b, &p)| if b { p.ln() } else { (1.0 - p).ln() })
                .sum();
            if best.is_none_or(|(b, _)| ll > b) {
                best = Some((ll, t));
            }
        }
        if let Some((ll, t)) = best {
            per_sequence.push((ll, &ids[i], t));
        }
    }
    per_sequence.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    per_sequence
        .into_iter()
        .take(4)
        .map(|(_, id, t)| ExemplarRef {
            sequence_id: id.to_string(),
            frame_index: t,
        })
        .collect()
}
