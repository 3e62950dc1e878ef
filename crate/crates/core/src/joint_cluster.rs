//! Single-cluster graph partitioning (SCGP) and its multi-sequence joint
//! extension. Produces visual atoms from proposal features and filters
//! outlier sequences by their description bag-of-words.
//!
//! SCGP extracts one dominant cluster by maximizing the Rayleigh quotient
//! `x^T A x / x^T x` of an affinity matrix over binary indicators. The joint
//! objective couples per-sequence quotients with inter-sequence terms
//! `x_i^T A_ij x_j / (sum(x_i) * sum(x_j))` over a kNN graph of sequences,
//! and is maximized by projected gradient ascent on the box [0,1].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const POWER_ITER_CAP: usize = 1000;
const POWER_ITER_TOL: f64 = 1e-9;

/// Symmetric nonnegative affinity matrix; zero diagonal permitted.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl AffinityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidAffinity(format!(
                    "row {i} has length {} in a {n}-node matrix",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        for i in 0..n {
            for j in 0..n {
                let a = values[i * n + j];
                if a < 0.0 || !a.is_finite() {
                    return Err(Error::InvalidAffinity(format!("entry ({i},{j}) = {a}")));
                }
                if (a - values[j * n + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidAffinity(format!(
                        "asymmetry at ({i},{j}): {a} vs {}",
                        values[j * n + i]
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = &self.values[i * n..(i + 1) * n];
            out[i] = row.iter().zip(x).map(|(a, v)| a * v).sum();
        }
        out
    }

    /// `x^T A x / x^T x`; error if x is all-zero.
    pub fn rayleigh_quotient(&self, x: &[f64]) -> Result<f64> {
        let denom: f64 = x.iter().map(|v| v * v).sum();
        if denom == 0.0 {
            return Err(Error::ZeroIndicator);
        }
        let ax = self.apply(x);
        let num: f64 = x.iter().zip(&ax).map(|(v, a)| v * a).sum();
        Ok(num / denom)
    }
}

/// Rectangular affinity between the proposals of two sequences (symmetry
/// waived).
#[derive(Debug, Clone, PartialEq)]
pub struct RectAffinity {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl RectAffinity {
    pub fn new(rows_data: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows_data.len();
        let cols = rows_data.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows * cols);
        for (i, row) in rows_data.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidAffinity(format!(
                    "ragged rectangular affinity at row {i}"
                )));
            }
            for &v in row {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::InvalidAffinity(format!("entry {v}")));
                }
            }
            values.extend_from_slice(row);
        }
        Ok(Self { rows, cols, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// `A y` (length `rows`).
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                self.values[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(y)
                    .map(|(a, v)| a * v)
                    .sum()
            })
            .collect()
    }

    /// `A^T y` (length `cols`).
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.values[i * self.cols + j] * yi;
            }
        }
        out
    }
}

/// Directed inter-sequence affinities. A lookup for `(i, j)` falls back to
/// the transpose of a stored `(j, i)` matrix.
#[derive(Debug, Clone, Default)]
pub struct InterMatrices {
    matrices: BTreeMap<(usize, usize), RectAffinity>,
}

impl InterMatrices {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize, a: RectAffinity) {
        self.matrices.insert((i, j), a);
    }

    fn lookup(&self, i: usize, j: usize) -> Option<(&RectAffinity, bool)> {
        if let Some(a) = self.matrices.get(&(i, j)) {
            Some((a, false))
        } else {
            self.matrices.get(&(j, i)).map(|a| (a, true))
        }
    }

    /// `A_ij x_j`, resolving transposed storage.
    pub fn apply(&self, i: usize, j: usize, x_j: &[f64]) -> Option<Vec<f64>> {
        self.lookup(i, j).map(|(a, transposed)| {
            if transposed {
                a.apply_transpose(x_j)
            } else {
                a.apply(x_j)
            }
        })
    }
}

/// kNN graph over sequences, built from the chi-squared distance of their
/// description bag-of-words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceKnnGraph {
    pub k: usize,
    pub neighbors: BTreeMap<String, Vec<String>>,
}

impl SequenceKnnGraph {
    /// Neighbor lists as indices into `order`.
    pub fn indexed(&self, order: &[String]) -> Vec<Vec<usize>> {
        let idx: BTreeMap<&str, usize> = order
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        order
            .iter()
            .map(|id| {
                self.neighbors
                    .get(id)
                    .map(|ns| ns.iter().filter_map(|n| idx.get(n.as_str()).copied()).collect())
                    .unwrap_or_default()
            })
            .collect()
    }
}

/// `0.5 * sum (a-b)^2 / (a+b)`, skipping coordinates where both entries are 0.
pub fn chi2_distance(h1: &[f64], h2: &[f64]) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::LengthMismatch {
            left: h1.len(),
            right: h2.len(),
        });
    }
    let mut acc = 0.0;
    for (&a, &b) in h1.iter().zip(h2) {
        let s = a + b;
        if s > 0.0 {
            let d = a - b;
            acc += d * d / s;
        }
    }
    Ok(0.5 * acc)
}

fn description_histograms(corpus: &Corpus) -> Vec<Vec<f64>> {
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in &corpus.sequences {
        for tok in &seq.description_tokens {
            let next = vocab.len();
            vocab.entry(tok.as_str()).or_insert(next);
        }
    }
    corpus
        .sequences
        .iter()
        .map(|seq| {
            let mut h = vec![0.0; vocab.len()];
            for tok in &seq.description_tokens {
                h[vocab[tok.as_str()]] += 1.0;
            }
            h
        })
        .collect()
}

/// Builds the sequence kNN graph. Neighbors are ranked by ascending
/// chi-squared distance, ties broken by sequence id.
pub fn build_sequence_knn(corpus: &Corpus, k: usize) -> Result<SequenceKnnGraph> {
    let n = corpus.sequences.len();
    if n < 2 {
        return Err(Error::TooFewSequences(n));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let hists = description_histograms(corpus);
    let ids: Vec<&str> = corpus.sequences.iter().map(|s| s.id.as_str()).collect();
    let mut neighbors = BTreeMap::new();
    for i in 0..n {
        let mut others: Vec<(f64, &str)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| Ok((chi2_distance(&hists[i], &hists[j])?, ids[j])))
            .collect::<Result<_>>()?;
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
        neighbors.insert(
            ids[i].to_string(),
            others
                .into_iter()
                .take(k.min(n - 1))
                .map(|(_, id)| id.to_string())
                .collect(),
        );
    }
    Ok(SequenceKnnGraph { k, neighbors })
}

/// Converts a distance matrix to affinities `exp(-d / sigma)` with sigma the
/// (lower) median of the matrix entries. A zero median degenerates to the
/// 0/1 indicator of zero distance, the pointwise limit as sigma -> 0.
pub fn affinity_from_distances(dist: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut all: Vec<f64> = dist.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sigma = if all.is_empty() {
        0.0
    } else {
        all[(all.len() - 1) / 2]
    };
    dist.iter()
        .map(|row| {
            row.iter()
                .map(|&d| {
                    if sigma == 0.0 {
                        if d == 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (-d / sigma).exp()
                    }
                })
                .collect()
        })
        .collect()
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

/// Dominant eigenvector by power iteration, oriented nonnegative. A flat
/// spectrum (A x ~ 0) returns the start vector, whose quotient is 0.
pub fn dominant_eigenvector(a: &AffinityMatrix) -> Result<Vec<f64>> {
    let n = a.size();
    if n == 0 {
        return Err(Error::EmptyInput("empty affinity matrix"));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..POWER_ITER_CAP {
        let mut y = a.apply(&x);
        let norm = normalize(&mut y);
        if norm < 1e-300 {
            return Ok(x);
        }
        if y.iter().sum::<f64>() < 0.0 {
            for v in y.iter_mut() {
                *v = -*v;
            }
        }
        let delta = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if delta <= POWER_ITER_TOL {
            return Ok(x);
        }
    }
    Err(Error::PowerIterationDiverged(POWER_ITER_CAP))
}

/// Rounds a relaxed indicator: sorts entries descending (ties by index) and
/// keeps the prefix whose binary indicator maximizes the Rayleigh quotient.
/// Ties between prefixes resolve to the smallest prefix.
pub fn round_by_rayleigh_prefix(a: &AffinityMatrix, x: &[f64]) -> Vec<bool> {
    let n = a.size();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[j].partial_cmp(&x[i]).unwrap().then_with(|| i.cmp(&j)));

    let mut best_p = 1;
    let mut best_q = f64::NEG_INFINITY;
    let mut quad = 0.0;
    for p in 1..=n {
        let new = order[p - 1];
        let mut cross = 0.0;
        for &q in &order[..p - 1] {
            cross += a.get(new, q);
        }
        quad += 2.0 * cross + a.get(new, new);
        let quotient = quad / p as f64;
        if quotient > best_q {
            best_q = quotient;
            best_p = p;
        }
    }
    let mut indicator = vec![false; n];
    for &i in &order[..best_p] {
        indicator[i] = true;
    }
    indicator
}

/// Binary indicator after optimization, at least one entry set.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector {
    pub values: Vec<f64>,
}

impl IndicatorVector {
    pub fn selected(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v > 0.5).then_some(i))
            .collect()
    }
}

/// The dominant cluster of an affinity matrix: relax to the dominant
/// eigenvector, then round by the Rayleigh-prefix rule.
pub fn scgp_dominant_cluster(a: &AffinityMatrix) -> Result<IndicatorVector> {
    let eig = dominant_eigenvector(a)?;
    let indicator = round_by_rayleigh_prefix(a, &eig);
    Ok(IndicatorVector {
        values: indicator.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    })
}

/// The coupled objective: per-sequence Rayleigh quotients plus, for every
/// directed neighbor pair (i, j in N(i)), `x_i^T A_ij x_j / (sum x_i * sum x_j)`.
pub fn joint_objective(
    x: &[Vec<f64>],
    intra: &[AffinityMatrix],
    inter: &InterMatrices,
    neighbors: &[Vec<usize>],
) -> Result<f64> {
    let mut total = 0.0;
    for (i, xi) in x.iter().enumerate() {
        total += intra[i].rayleigh_quotient(xi)?;
    }
    for (i, ns) in neighbors.iter().enumerate() {
        let si: f64 = x[i].iter().sum();
        for &j in ns {
            let sj: f64 = x[j].iter().sum();
            if si == 0.0 || sj == 0.0 {
                return Err(Error::ZeroIndicator);
            }
            let axj = inter
                .apply(i, j, &x[j])
                .ok_or_else(|| Error::InvalidArgument(format!("missing inter matrix ({i},{j})")))?;
            let num: f64 = x[i].iter().zip(&axj).map(|(v, a)| v * a).sum();
            total += num / (si * sj);
        }
    }
    Ok(total)
}

/// Analytic gradient of [`joint_objective`] with respect to every `x_i`.
/// Includes both the forward terms (j in N(i)) and the reverse terms
/// (pairs (j, i) with i in N(j)), so it is the exact gradient of the sum.
pub fn joint_gradient(
    x: &[Vec<f64>],
    intra: &[AffinityMatrix],
    inter: &InterMatrices,
    neighbors: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let sums: Vec<f64> = x.iter().map(|xi| xi.iter().sum()).collect();
    let mut grad: Vec<Vec<f64>> = Vec::with_capacity(n);

    for (i, xi) in x.iter().enumerate() {
        let denom: f64 = xi.iter().map(|v| v * v).sum();
        if denom == 0.0 {
            return Err(Error::ZeroIndicator);
        }
        let ax = intra[i].apply(xi);
        let r: f64 = xi.iter().zip(&ax).map(|(v, a)| v * a).sum::<f64>() / denom;
        grad.push(
            ax.iter()
                .zip(xi)
                .map(|(a, v)| (2.0 * a - 2.0 * v * r) / denom)
                .collect(),
        );
    }

    let mut add_pair = |i: usize, j: usize| -> Result<()> {
        // d/dx of both arguments of the directed term Q_ij.
        let (si, sj) = (sums[i], sums[j]);
        if si == 0.0 || sj == 0.0 {
            return Err(Error::ZeroIndicator);
        }
        let denom = si * sj;
        let axj = inter
            .apply(i, j, &x[j])
            .ok_or_else(|| Error::InvalidArgument(format!("missing inter matrix ({i},{j})")))?;
        let r: f64 = x[i].iter().zip(&axj).map(|(v, a)| v * a).sum::<f64>() / denom;
        for (g, a) in grad[i].iter_mut().zip(&axj) {
            *g += (a - r * sj) / denom;
        }
        let atxi = inter.apply(j, i, &x[i]).expect("pair resolved above");
        for (g, a) in grad[j].iter_mut().zip(&atxi) {
            *g += (a - r * si) / denom;
        }
        Ok(())
    };

    for (i, ns) in neighbors.iter().enumerate() {
        for &j in ns {
            add_pair(i, j)?;
        }
    }
    Ok(grad)
}

/// Projected gradient ascent configuration. The step halves whenever a step
/// would decrease the objective, keeping the iterate sequence monotone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdConfig {
    pub initial_step: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub intra_nn: usize,
    pub inter_nn: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_iters: 500,
            rel_tol: 1e-6,
            intra_nn: 2,
            inter_nn: 2,
        }
    }
}

/// Maximizes the joint objective over the box [0,1]^n per sequence. Returns
/// the relaxed solution; the objective trace is non-decreasing.
pub fn projected_gradient_ascent(
    init: Vec<Vec<f64>>,
    intra: &[AffinityMatrix],
    inter: &InterMatrices,
    neighbors: &[Vec<usize>],
    cfg: &SgdConfig,
) -> Result<Vec<Vec<f64>>> {
    let mut x = init;
    let mut step = cfg.initial_step;
    let mut obj = joint_objective(&x, intra, inter, neighbors)?;
    for _ in 0..cfg.max_iters {
        let grad = joint_gradient(&x, intra, inter, neighbors)?;
        let candidate: Vec<Vec<f64>> = x
            .iter()
            .zip(&grad)
            .map(|(xi, gi)| {
                xi.iter()
                    .zip(gi)
                    .map(|(v, g)| (v + step * g).clamp(0.0, 1.0))
                    .collect()
            })
            .collect();
        if candidate.iter().any(|c| c.iter().all(|&v| v == 0.0)) {
            step *= 0.5;
            continue;
        }
        let new_obj = joint_objective(&candidate, intra, inter, neighbors)?;
        if new_obj < obj {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
            continue;
        }
        let improved = new_obj - obj;
        x = candidate;
        let done = improved < cfg.rel_tol * obj.abs().max(1.0);
        obj = new_obj;
        if done {
            break;
        }
    }
    Ok(x)
}

/// One object proposal, addressed by its owning sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProposalRef {
    pub sequence_id: String,
    pub frame_index: usize,
    pub proposal_index: usize,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Keeps the `nn` largest entries per row (and their mirror, for square
/// matrices) and zeroes the rest. Square matrices also lose their diagonal.
fn sparsify_square(aff: &[Vec<f64>], nn: usize) -> Vec<Vec<f64>> {
    let n = aff.len();
    let mut keep = vec![vec![false; n]; n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| aff[i][b].partial_cmp(&aff[i][a]).unwrap().then(a.cmp(&b)));
        for &j in order.iter().take(nn) {
            keep[i][j] = true;
            keep[j][i] = true;
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if keep[i][j] { aff[i][j] } else { 0.0 })
                .collect()
        })
        .collect()
}

fn sparsify_rows(aff: &[Vec<f64>], nn: usize) -> Vec<Vec<f64>> {
    aff.iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
            let mut out = vec![0.0; row.len()];
            for &j in order.iter().take(nn) {
                out[j] = row[j];
            }
            out
        })
        .collect()
}

struct ProposalPool<'a> {
    sequence_id: &'a str,
    // (frame, proposal, features) still available for clustering.
    items: Vec<(usize, usize, &'a [f64])>,
}

fn distance_matrix(items: &[(usize, usize, &[f64])]) -> Vec<Vec<f64>> {
    let n = items.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = euclidean(items[i].2, items[j].2);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Iteratively extracts up to `k_clusters` joint clusters of object
/// proposals. Each round initializes from per-sequence SCGP eigenvectors,
/// ascends the joint objective, rounds per sequence by the Rayleigh-prefix
/// rule, emits the selected proposals as one cluster, and removes them.
pub fn joint_cluster_extract(
    corpus: &Corpus,
    knn: &SequenceKnnGraph,
    k_clusters: usize,
    cfg: &SgdConfig,
) -> Result<Vec<Vec<ProposalRef>>> {
    if k_clusters == 0 {
        return Err(Error::InvalidArgument("k_clusters must be >= 1".into()));
    }
    let order: Vec<String> = corpus.sequences.iter().map(|s| s.id.clone()).collect();
    let neighbor_idx = knn.indexed(&order);

    let mut pools: Vec<ProposalPool> = corpus
        .sequences
        .iter()
        .map(|seq| ProposalPool {
            sequence_id: &seq.id,
            items: seq
                .frames
                .iter()
                .enumerate()
                .flat_map(|(fi, f)| {
                    f.proposal_features
                        .iter()
                        .enumerate()
                        .map(move |(pi, feat)| (fi, pi, feat.as_slice()))
                })
                .collect(),
        })
        .collect();

    let mut clusters = Vec::new();
    for _ in 0..k_clusters {
        let active: Vec<usize> = (0..pools.len())
            .filter(|&i| !pools[i].items.is_empty())
            .collect();
        if active.is_empty() {
            break;
        }

        let intra: Vec<AffinityMatrix> = active
            .iter()
            .map(|&i| {
                let dist = distance_matrix(&pools[i].items);
                let aff = sparsify_square(&affinity_from_distances(&dist), cfg.intra_nn);
                AffinityMatrix::new(aff)
            })
            .collect::<Result<_>>()?;

        let local_of: BTreeMap<usize, usize> =
            active.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let local_neighbors: Vec<Vec<usize>> = active
            .iter()
            .map(|&g| {
                neighbor_idx[g]
                    .iter()
                    .filter_map(|n| local_of.get(n).copied())
                    .collect()
            })
            .collect();

        let mut inter = InterMatrices::new();
        for (li, &gi) in active.iter().enumerate() {
            for &lj in &local_neighbors[li] {
                let gj = active[lj];
                if inter.apply(li, lj, &vec![0.0; pools[gj].items.len()]).is_some() {
                    continue;
                }
                let rows: Vec<Vec<f64>> = pools[gi]
                    .items
                    .iter()
                    .map(|a| {
                        pools[gj]
                            .items
                            .iter()
                            .map(|b| euclidean(a.2, b.2))
                            .collect()
                    })
                    .collect();
                let aff = sparsify_rows(&affinity_from_distances(&rows), cfg.inter_nn);
                inter.insert(li, lj, RectAffinity::new(aff)?);
            }
        }

        let init: Vec<Vec<f64>> = intra
            .iter()
            .map(|a| {
                let mut eig = dominant_eigenvector(a)?;
                let max = eig.iter().cloned().fold(0.0, f64::max);
                if max > 0.0 {
                    for v in eig.iter_mut() {
                        *v /= max;
                    }
                } else {
                    eig.fill(1.0);
                }
                Ok(eig)
            })
            .collect::<Result<_>>()?;

        let relaxed = projected_gradient_ascent(init, &intra, &inter, &local_neighbors, cfg)?;

        let mut cluster = Vec::new();
        for (li, &gi) in active.iter().enumerate() {
            let selected = round_by_rayleigh_prefix(&intra[li], &relaxed[li]);
            let pool = &mut pools[gi];
            let mut kept = Vec::new();
            for (idx, item) in pool.items.iter().enumerate() {
                if selected[idx] {
                    cluster.push(ProposalRef {
                        sequence_id: pool.sequence_id.to_string(),
                        frame_index: item.0,
                        proposal_index: item.1,
                    });
                } else {
                    kept.push(*item);
                }
            }
            pool.items = kept;
        }
        cluster.sort();
        clusters.push(cluster);
    }
    Ok(clusters)
}

/// Splits a corpus into its dominant description cluster and the discarded
/// outliers, by SCGP on `exp(-chi2/sigma)` affinities.
pub fn remove_outliers(corpus: &Corpus) -> Result<(Corpus, Vec<String>)> {
    let n = corpus.sequences.len();
    if n < 2 {
        return Err(Error::TooFewSequences(n));
    }
    let hists = description_histograms(corpus);
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = chi2_distance(&hists[i], &hists[j])?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let affinity = AffinityMatrix::new(affinity_from_distances(&dist))?;
    let indicator = scgp_dominant_cluster(&affinity)?;
    let keep = indicator.selected();

    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for (i, seq) in corpus.sequences.iter().enumerate() {
        if keep.binary_search(&i).is_ok() {
            kept.push(seq.clone());
        } else {
            discarded.push(seq.id.clone());
        }
    }
    Ok((Corpus::new(corpus.category.clone(), kept)?, discarded))
}
