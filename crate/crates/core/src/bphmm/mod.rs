//! Beta-process HMM: model state and the full MCMC learning procedure.
//!
//! Every sequence exhibits a subset of globally shared activity steps (a
//! binary matrix F under an Indian-buffet-process prior) and runs an HMM
//! restricted to its active steps. Emissions are per-step Bernoulli vectors
//! over the atom vocabulary; transitions come from masked, normalized Gamma
//! weights with a sticky self-transition bonus.
//!
//! Learning alternates Metropolis-Hastings flips of shared steps,
//! data-driven birth/death of sequence-unique steps, exact
//! forward-filter/backward-sample state draws, and conjugate resampling of
//! emissions and transitions. The beta-process weights themselves are
//! collapsed out; the sharing concentration enters only through the
//! collapsed prior ratios.

mod forward;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use forward::{log_marginal_sequence, sample_states};
pub use sampler::{
    gibbs_sweep, init_model, propose_novel_activity, resample_shared_features, resample_states,
    resample_theta, resample_transitions, run_gibbs, window_theta_proposal, GibbsData,
    MoveOutcome,
};

/// Emission probabilities are clamped inside the open unit interval so
/// log-emissions stay finite.
pub const THETA_CLAMP: (f64, f64) = (1e-9, 1.0 - 1e-9);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// IBP mass: expected activities per sequence.
    pub gamma: f64,
    /// Sharing concentration of the collapsed beta process.
    pub beta_c: f64,
    /// Transition Gamma shape.
    pub alpha: f64,
    /// Sticky self-transition bonus.
    pub kappa: f64,
    /// Transition scale shape.
    pub lambda: f64,
    /// Beta prior on emissions.
    pub emit_a0: f64,
    pub emit_b0: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            beta_c: 1.0,
            alpha: 1.0,
            kappa: 25.0,
            lambda: 1.0,
            emit_a0: 1.0,
            emit_b0: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("gamma", self.gamma),
            ("beta_c", self.beta_c),
            ("alpha", self.alpha),
            ("lambda", self.lambda),
            ("emit_a0", self.emit_a0),
            ("emit_b0", self.emit_b0),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidHyperparams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidHyperparams(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Binary sequence-by-activity inclusion matrix. Every row keeps at least
/// one 1; columns with no users are pruned immediately.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityMatrix {
    rows: Vec<Vec<bool>>,
}

impl ActivityMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Self {
        Self { rows }
    }

    pub fn n_sequences(&self) -> usize {
        self.rows.len()
    }

    pub fn n_activities(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, i: usize, k: usize) -> bool {
        self.rows[i][k]
    }

    pub fn set(&mut self, i: usize, k: usize, v: bool) {
        self.rows[i][k] = v;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.rows[i]
    }

    /// Active column slots of row `i`, ascending.
    pub fn active_set(&self, i: usize) -> Vec<usize> {
        self.rows[i]
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect()
    }

    /// Number of sequences using column `k`.
    pub fn column_count(&self, k: usize) -> usize {
        self.rows.iter().filter(|r| r[k]).count()
    }

    /// Number of sequences other than `i` using column `k`.
    pub fn column_count_excluding(&self, k: usize, i: usize) -> usize {
        self.rows
            .iter()
            .enumerate()
            .filter(|&(j, r)| j != i && r[k])
            .count()
    }

    pub fn push_column(&mut self, owner: usize) {
        for (j, row) in self.rows.iter_mut().enumerate() {
            row.push(j == owner);
        }
    }

    pub fn remove_column(&mut self, k: usize) {
        for row in &mut self.rows {
            row.remove(k);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if !row.iter().any(|&b| b) {
                return Err(Error::InvalidArgument(format!("row {i} has no activity")));
            }
            if row.len() != self.n_activities() {
                return Err(Error::InvalidArgument(format!("ragged row {i}")));
            }
        }
        for k in 0..self.n_activities() {
            if self.column_count(k) == 0 {
                return Err(Error::InvalidArgument(format!("column {k} is unused")));
            }
        }
        Ok(())
    }
}

/// Per-activity Bernoulli emission parameters, rows strictly inside (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityParams {
    pub theta: Vec<Vec<f64>>,
}

impl ActivityParams {
    pub fn n_activities(&self) -> usize {
        self.theta.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }
}

/// Per-sequence transition weights over all current columns; the stochastic
/// matrix pi is the masked, row-normalized view over a row's active set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionState {
    /// eta[i] is a flattened K x K matrix of positive reals.
    pub eta: Vec<Vec<f64>>,
}

impl TransitionState {
    pub fn n_columns(&self, i: usize) -> usize {
        (self.eta[i].len() as f64).sqrt().round() as usize
    }

    /// Row-stochastic transition matrix of sequence `i` restricted to
    /// `active` (pi_jk = eta_jk f_k / sum_k' eta_jk' f_k').
    pub fn pi_rows(&self, i: usize, active: &[usize]) -> Vec<Vec<f64>> {
        let k_all = self.n_columns(i);
        active
            .iter()
            .map(|&j| {
                let row = &self.eta[i][j * k_all..(j + 1) * k_all];
                let total: f64 = active.iter().map(|&k| row[k]).sum();
                active.iter().map(|&k| row[k] / total).collect()
            })
            .collect()
    }
}

/// Per-sequence state path; values are column slots active in the
/// sequence's row of F.
pub type StateAssignment = Vec<usize>;

/// The full posterior state of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityModel {
    pub hyper: Hyperparams,
    pub f: ActivityMatrix,
    pub theta: ActivityParams,
    pub trans: TransitionState,
    pub z: Vec<StateAssignment>,
    /// Persistent label per current column; labels are never reused.
    pub column_ids: Vec<u32>,
    pub next_column_id: u32,
}

impl ActivityModel {
    pub fn n_sequences(&self) -> usize {
        self.f.n_sequences()
    }

    pub fn n_activities(&self) -> usize {
        self.f.n_activities()
    }

    pub fn active_set(&self, i: usize) -> Vec<usize> {
        self.f.active_set(i)
    }

    /// Appends a column owned by `owner`. The caller supplies the emission
    /// row; transition weights for the new column must be pushed by the
    /// caller via `extend_eta_for_new_column`.
    pub(crate) fn push_column(&mut self, owner: usize, theta_row: Vec<f64>) -> u32 {
        let id = self.next_column_id;
        self.next_column_id += 1;
        self.column_ids.push(id);
        self.f.push_column(owner);
        self.theta.theta.push(theta_row);
        id
    }

    /// Removes column slot `k`. Stale state assignments are redirected to
    /// each row's first active column (they are resampled before any use).
    pub(crate) fn remove_column(&mut self, k: usize) {
        self.f.remove_column(k);
        self.theta.theta.remove(k);
        self.column_ids.remove(k);
        for i in 0..self.trans.eta.len() {
            let old_k = self.trans.n_columns(i);
            let old = std::mem::take(&mut self.trans.eta[i]);
            let mut new = Vec::with_capacity((old_k - 1) * (old_k - 1));
            for j in 0..old_k {
                if j == k {
                    continue;
                }
                for c in 0..old_k {
                    if c == k {
                        continue;
                    }
                    new.push(old[j * old_k + c]);
                }
            }
            self.trans.eta[i] = new;
        }
        for (i, zi) in self.z.iter_mut().enumerate() {
            let fallback = self.f.active_set(i).first().copied();
            for v in zi.iter_mut() {
                if *v == k {
                    *v = fallback.expect("row left without activities");
                } else if *v > k {
                    *v -= 1;
                }
            }
        }
    }

    /// Drops every column no sequence uses.
    pub fn prune_empty_columns(&mut self) {
        let mut k = 0;
        while k < self.n_activities() {
            if self.f.column_count(k) == 0 {
                self.remove_column(k);
            } else {
                k += 1;
            }
        }
    }

    /// Cross-type consistency: dimensions agree, z respects F, pi rows are
    /// stochastic over active columns.
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.f.validate()?;
        let k = self.f.n_activities();
        if self.theta.n_activities() != k || self.column_ids.len() != k {
            return Err(Error::InvalidArgument("theta/column bookkeeping out of sync".into()));
        }
        for row in &self.theta.theta {
            for &v in row {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::InvalidArgument(format!("theta entry {v} outside (0,1)")));
                }
            }
        }
        for i in 0..self.n_sequences() {
            if self.trans.n_columns(i) != k {
                return Err(Error::InvalidArgument(format!("eta[{i}] has wrong dimension")));
            }
            if self.trans.eta[i].iter().any(|&v| v <= 0.0) {
                return Err(Error::InvalidArgument(format!("eta[{i}] has nonpositive entry")));
            }
            let active = self.active_set(i);
            for row in self.trans.pi_rows(i, &active) {
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("pi row sums to {s}")));
                }
            }
            for &zt in &self.z[i] {
                if zt >= k || !self.f.get(i, zt) {
                    return Err(Error::InvalidArgument(format!(
                        "z value {zt} not active in sequence {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn load_hyperparams(path: &std::path::Path) -> Result<Hyperparams> {
    let text = std::fs::read_to_string(path)?;
    let hyper: Hyperparams = serde_json::from_str(&text)?;
    hyper.validate()?;
    Ok(hyper)
}

pub fn save_hyperparams(hyper: &Hyperparams, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(hyper)?)?;
    Ok(())
}
