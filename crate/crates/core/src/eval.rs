//! Cluster-matched temporal-segmentation metrics. Predicted labels carry no
//! meaning on their own, so both metrics first choose an injective matching
//! of predicted labels to ground-truth labels that maximizes the total
//! pairwise score (exact assignment, not enumeration), then average the
//! matched scores over ground-truth labels. Frames outside every
//! ground-truth interval are unscored.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSegmentation {
    pub id: String,
    pub length: usize,
    pub intervals: Vec<Interval>,
}

/// Per-sequence interval labelings; intervals are sorted, non-overlapping,
/// and cover a subset of `[0, length)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub sequences: Vec<SequenceSegmentation>,
}

/// Expands intervals to per-frame optional labels.
pub fn frame_labels(intervals: &[Interval], t: usize) -> Result<Vec<Option<String>>> {
    let mut out: Vec<Option<String>> = vec![None; t];
    let mut prev_end = 0usize;
    for iv in intervals {
        if iv.start < prev_end || iv.start >= iv.end || iv.end > t {
            return Err(Error::InvalidSegmentation {
                sequence: String::new(),
                message: format!(
                    "interval [{}, {}) overlaps or falls outside [0, {t})",
                    iv.start, iv.end
                ),
            });
        }
        for slot in &mut out[iv.start..iv.end] {
            *slot = Some(iv.label.clone());
        }
        prev_end = iv.end;
    }
    Ok(out)
}

/// Injective partial map from predicted labels to ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelMatching {
    /// (predicted, ground-truth) pairs, sorted by predicted label.
    pub pairs: Vec<(String, String)>,
}

impl LabelMatching {
    pub fn gt_for(&self, pred: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(p, _)| p == pred)
            .map(|(_, g)| g.as_str())
    }

    pub fn pred_for(&self, gt: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(_, g)| g == gt)
            .map(|(p, _)| p.as_str())
    }
}

/// Per-frame, per-label confidence scores, keyed by sequence id then label.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Confidences {
    pub scores: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl Confidences {
    pub fn insert(&mut self, sequence: String, label: String, values: Vec<f64>) {
        self.scores.entry(sequence).or_default().insert(label, values);
    }

    fn get(&self, sequence: &str, label: &str) -> Option<&[f64]> {
        self.scores
            .get(sequence)?
            .get(label)
            .map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchScore {
    Iou,
    AveragePrecision,
}

/// Exact minimum-cost assignment on a square matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns the column matched to each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-weight assignment of rows to columns (rectangular; padded
/// internally). Returns for each row the matched column, or none when the
/// row lands on padding.
pub(crate) fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < rows && j < cols {
                        -weights[i][j]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    (0..rows)
        .map(|i| {
            let j = assignment[i];
            (j < cols).then_some(j)
        })
        .collect()
}

/// Frame-level labelings aligned across the two segmentations.
struct AlignedFrames {
    sequence_ids: Vec<String>,
    gt: Vec<Vec<Option<String>>>,
    pred: Vec<Vec<Option<String>>>,
}

fn align(gt: &Segmentation, pred: &Segmentation) -> Result<AlignedFrames> {
    let pred_by_id: BTreeMap<&str, &SequenceSegmentation> = pred
        .sequences
        .iter()
        .map(|s| (s.id.as_str(), s))
        .collect();
    if pred.sequences.len() != gt.sequences.len() {
        return Err(Error::SegmentationMismatch(format!(
            "{} ground-truth sequences vs {} predicted",
            gt.sequences.len(),
            pred.sequences.len()
        )));
    }
    let mut out = AlignedFrames {
        sequence_ids: Vec::new(),
        gt: Vec::new(),
        pred: Vec::new(),
    };
    for g in &gt.sequences {
        let p = pred_by_id
            .get(g.id.as_str())
            .ok_or_else(|| Error::SegmentationMismatch(format!("sequence `{}` missing", g.id)))?;
        if p.length != g.length {
            return Err(Error::SegmentationMismatch(format!(
                "sequence `{}`: lengths {} vs {}",
                g.id, g.length, p.length
            )));
        }
        out.sequence_ids.push(g.id.clone());
        out.gt.push(frame_labels(&g.intervals, g.length)?);
        out.pred.push(frame_labels(&p.intervals, p.length)?);
    }
    Ok(out)
}

type FrameSet = BTreeSet<(usize, usize)>;

/// Frame sets per label, restricted to the ground-truth-covered universe.
struct LabelSets {
    gt_labels: Vec<String>,
    pred_labels: Vec<String>,
    gt_sets: BTreeMap<String, FrameSet>,
    pred_sets: BTreeMap<String, FrameSet>,
    universe: Vec<(usize, usize)>,
}

fn label_sets(frames: &AlignedFrames) -> Result<LabelSets> {
    let mut gt_sets: BTreeMap<String, FrameSet> = BTreeMap::new();
    let mut pred_sets: BTreeMap<String, FrameSet> = BTreeMap::new();
    let mut pred_labels: BTreeSet<String> = BTreeSet::new();
    let mut universe = Vec::new();
    for (s, (gt_seq, pred_seq)) in frames.gt.iter().zip(&frames.pred).enumerate() {
        for (t, (g, p)) in gt_seq.iter().zip(pred_seq).enumerate() {
            if let Some(p) = p {
                pred_labels.insert(p.clone());
            }
            let Some(g) = g else { continue };
            universe.push((s, t));
            gt_sets.entry(g.clone()).or_default().insert((s, t));
            if let Some(p) = p {
                pred_sets.entry(p.clone()).or_default().insert((s, t));
            }
        }
    }
    if gt_sets.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(LabelSets {
        gt_labels: gt_sets.keys().cloned().collect(),
        pred_labels: pred_labels.into_iter().collect(),
        gt_sets,
        pred_sets,
        universe,
    })
}

fn iou(a: &FrameSet, b: &FrameSet) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Average precision of ranking the universe frames by the confidence of
/// `pred_label`, positives being the ground-truth label's frames. Precision
/// is averaged at each positive hit of the ranked list; ties are broken by
/// (sequence position, frame index) ascending.
fn average_precision(
    sets: &LabelSets,
    frames: &AlignedFrames,
    conf: &Confidences,
    gt_label: &str,
    pred_label: &str,
) -> Result<f64> {
    let positives = &sets.gt_sets[gt_label];
    if positives.is_empty() {
        return Ok(0.0);
    }
    let mut ranked: Vec<(f64, usize, usize)> = Vec::with_capacity(sets.universe.len());
    for &(s, t) in &sets.universe {
        let seq_id = &frames.sequence_ids[s];
        let scores =
            conf.get(seq_id, pred_label)
                .ok_or_else(|| Error::MissingConfidence {
                    sequence: seq_id.clone(),
                    label: pred_label.to_string(),
                })?;
        let &score = scores.get(t).ok_or_else(|| Error::MissingConfidence {
            sequence: seq_id.clone(),
            label: pred_label.to_string(),
        })?;
        ranked.push((score, s, t));
    }
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank, &(_, s, t)) in ranked.iter().enumerate() {
        if positives.contains(&(s, t)) {
            hits += 1;
            precision_sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(precision_sum / positives.len() as f64)
}

fn score_matrix(
    sets: &LabelSets,
    frames: &AlignedFrames,
    score: MatchScore,
    conf: Option<&Confidences>,
) -> Result<Vec<Vec<f64>>> {
    let empty = FrameSet::new();
    sets.gt_labels
        .iter()
        .map(|g| {
            sets.pred_labels
                .iter()
                .map(|p| match score {
                    MatchScore::Iou => {
                        let pset = sets.pred_sets.get(p).unwrap_or(&empty);
                        Ok(iou(&sets.gt_sets[g], pset))
                    }
                    MatchScore::AveragePrecision => {
                        let conf = conf.ok_or_else(|| Error::MissingConfidence {
                            sequence: String::new(),
                            label: p.clone(),
                        })?;
                        average_precision(sets, frames, conf, g, p)
                    }
                })
                .collect()
        })
        .collect()
}

fn matching_from_weights(sets: &LabelSets, weights: &[Vec<f64>]) -> LabelMatching {
    // Rows are gt labels, columns pred labels, both sorted; zero-weight
    // pairs are treated as unmatched.
    let assignment = max_weight_assignment(weights);
    let mut pairs: Vec<(String, String)> = assignment
        .iter()
        .enumerate()
        .filter_map(|(gi, col)| {
            col.and_then(|pj| {
                (weights[gi][pj] > 0.0)
                    .then(|| (sets.pred_labels[pj].clone(), sets.gt_labels[gi].clone()))
            })
        })
        .collect();
    pairs.sort();
    LabelMatching { pairs }
}

/// Average precision of one predicted label's confidence ranking against
/// one ground-truth label, over the ground-truth-covered frame universe.
/// This is the pairwise score the mAP matching maximizes.
pub fn pair_average_precision(
    gt: &Segmentation,
    pred: &Segmentation,
    conf: &Confidences,
    gt_label: &str,
    pred_label: &str,
) -> Result<f64> {
    let frames = align(gt, pred)?;
    let sets = label_sets(&frames)?;
    if !sets.gt_sets.contains_key(gt_label) {
        return Err(Error::InvalidArgument(format!(
            "unknown ground-truth label `{gt_label}`"
        )));
    }
    average_precision(&sets, &frames, conf, gt_label, pred_label)
}

/// Maximum-weight matching of predicted to ground-truth labels under the
/// given pairwise score. Confidences are required for the
/// average-precision score.
pub fn best_matching(
    gt: &Segmentation,
    pred: &Segmentation,
    score: MatchScore,
    conf: Option<&Confidences>,
) -> Result<LabelMatching> {
    let frames = align(gt, pred)?;
    let sets = label_sets(&frames)?;
    let weights = score_matrix(&sets, &frames, score, conf)?;
    Ok(matching_from_weights(&sets, &weights))
}

fn mean_matched_score(sets: &LabelSets, weights: &[Vec<f64>]) -> f64 {
    let assignment = max_weight_assignment(weights);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .filter_map(|(gi, col)| col.map(|pj| weights[gi][pj]))
        .sum();
    total / sets.gt_labels.len() as f64
}

/// Mean ground-truth-label IoU under the best matching; unmatched labels
/// contribute 0.
pub fn matched_iou(gt: &Segmentation, pred: &Segmentation) -> Result<f64> {
    let frames = align(gt, pred)?;
    let sets = label_sets(&frames)?;
    let weights = score_matrix(&sets, &frames, MatchScore::Iou, None)?;
    Ok(mean_matched_score(&sets, &weights))
}

/// Mean ground-truth-label average precision under the best matching.
pub fn matched_map(gt: &Segmentation, pred: &Segmentation, conf: &Confidences) -> Result<f64> {
    let frames = align(gt, pred)?;
    let sets = label_sets(&frames)?;
    let weights = score_matrix(&sets, &frames, MatchScore::AveragePrecision, Some(conf))?;
    Ok(mean_matched_score(&sets, &weights))
}

/// Fraction of ground-truth-covered frames whose predicted label maps to the
/// frame's ground-truth label under the best count matching.
pub fn matched_frame_accuracy(gt: &Segmentation, pred: &Segmentation) -> Result<f64> {
    let frames = align(gt, pred)?;
    let sets = label_sets(&frames)?;
    let empty = FrameSet::new();
    let weights: Vec<Vec<f64>> = sets
        .gt_labels
        .iter()
        .map(|g| {
            sets.pred_labels
                .iter()
                .map(|p| {
                    let pset = sets.pred_sets.get(p).unwrap_or(&empty);
                    sets.gt_sets[g].intersection(pset).count() as f64
                })
                .collect()
        })
        .collect();
    let assignment = max_weight_assignment(&weights);
    let correct: f64 = assignment
        .iter()
        .enumerate()
        .filter_map(|(gi, col)| col.map(|pj| weights[gi][pj]))
        .sum();
    Ok(correct / sets.universe.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub gt_label: String,
    pub matched_pred: Option<String>,
    pub iou: f64,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_csm: f64,
    pub map_csm: f64,
    pub per_label: Vec<LabelScore>,
}

/// Both metrics plus the per-label breakdown under their own matchings.
pub fn evaluate(gt: &Segmentation, pred: &Segmentation, conf: &Confidences) -> Result<EvalReport> {
    let frames = align(gt, pred)?;
    let sets = label_sets(&frames)?;
    let iou_w = score_matrix(&sets, &frames, MatchScore::Iou, None)?;
    let ap_w = score_matrix(&sets, &frames, MatchScore::AveragePrecision, Some(conf))?;
    let iou_matching = matching_from_weights(&sets, &iou_w);
    let ap_assignment = max_weight_assignment(&ap_w);

    let per_label = sets
        .gt_labels
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let matched_pred = iou_matching.pred_for(g).map(str::to_string);
            let iou = matched_pred
                .as_ref()
                .and_then(|p| sets.pred_labels.iter().position(|x| x == p))
                .map_or(0.0, |pj| iou_w[gi][pj]);
            let ap = ap_assignment[gi].map(|pj| ap_w[gi][pj]);
            LabelScore {
                gt_label: g.clone(),
                matched_pred,
                iou,
                ap,
            }
        })
        .collect();

    Ok(EvalReport {
        iou_csm: mean_matched_score(&sets, &iou_w),
        map_csm: mean_matched_score(&sets, &ap_w),
        per_label,
    })
}

pub fn load_segmentation(path: &Path) -> Result<Segmentation> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_segmentation(seg: &Segmentation, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(seg)?)?;
    Ok(())
}

pub fn save_report(report: &EvalReport, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn seg(seqs: &[(&str, usize, &[(usize, usize, &str)])]) -> Segmentation {
        Segmentation {
            sequences: seqs
                .iter()
                .map(|(id, len, ivs)| SequenceSegmentation {
                    id: id.to_string(),
                    length: *len,
                    intervals: ivs
                        .iter()
                        .map(|&(s, e, l)| Interval {
                            start: s,
                            end: e,
                            label: l.to_string(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn frame_labels_full_cover() {
        let labels = frame_labels(
            &[Interval {
                start: 0,
                end: 3,
                label: "a".into(),
            }],
            3,
        )
        .unwrap();
        assert!(labels.iter().all(|l| l.as_deref() == Some("a")));
    }

    #[test]
    fn frame_labels_empty() {
        let labels = frame_labels(&[], 4).unwrap();
        assert!(labels.iter().all(Option::is_none));
    }

    #[test]
    fn frame_labels_with_gap() {
        let labels = frame_labels(
            &[
                Interval { start: 0, end: 3, label: "a".into() },
                Interval { start: 5, end: 8, label: "b".into() },
            ],
            8,
        )
        .unwrap();
        let expect: Vec<Option<&str>> = vec![
            Some("a"),
            Some("a"),
            Some("a"),
            None,
            None,
            Some("b"),
            Some("b"),
            Some("b"),
        ];
        assert_eq!(
            labels.iter().map(Option::as_deref).collect::<Vec<_>>(),
            expect
        );
    }

    #[test]
    fn frame_labels_rejects_overlap_and_overflow() {
        assert!(frame_labels(
            &[
                Interval { start: 0, end: 4, label: "a".into() },
                Interval { start: 3, end: 6, label: "b".into() },
            ],
            8
        )
        .is_err());
        assert!(frame_labels(&[Interval { start: 0, end: 9, label: "a".into() }], 8).is_err());
    }

    /// Brute-force maximum-weight matching by permutation enumeration.
    pub(crate) fn brute_force_total(weights: &[Vec<f64>]) -> f64 {
        let rows = weights.len();
        let cols = weights[0].len();
        fn go(weights: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == weights.len() {
                return 0.0;
            }
            // Leaving the row unmatched is allowed.
            let mut best = go(weights, row + 1, used);
            for col in 0..used.len() {
                if !used[col] {
                    used[col] = true;
                    best = best.max(weights[row][col] + go(weights, row + 1, used));
                    used[col] = false;
                }
            }
            best
        }
        let _ = (rows, cols);
        go(weights, 0, &mut vec![false; cols])
    }

    #[test]
    fn assignment_matches_brute_force_random() {
        use rand::Rng;
        let mut rng = crate::rng::stream(31, &[crate::rng::tag("hungarian")]);
        for _ in 0..200 {
            let rows = rng.random_range(1..=6usize);
            let cols = rng.random_range(1..=6usize);
            let weights: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random::<f64>()).collect())
                .collect();
            let assignment = max_weight_assignment(&weights);
            let total: f64 = assignment
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|j| weights[i][j]))
                .sum();
            let brute = brute_force_total(&weights);
            assert_relative_eq!(total, brute, max_relative = 1e-9, epsilon = 1e-12);
            // Injectivity.
            let mut seen = std::collections::HashSet::new();
            for c in assignment.into_iter().flatten() {
                assert!(seen.insert(c));
            }
        }
    }

    #[test]
    fn matching_recovers_permutation() {
        let gt = seg(&[("v", 9, &[(0, 3, "a"), (3, 6, "b"), (6, 9, "c")])]);
        let pred = seg(&[("v", 9, &[(0, 3, "x"), (3, 6, "y"), (6, 9, "z")])]);
        let m = best_matching(&gt, &pred, MatchScore::Iou, None).unwrap();
        assert_eq!(
            m.pairs,
            vec![
                ("x".to_string(), "a".to_string()),
                ("y".to_string(), "b".to_string()),
                ("z".to_string(), "c".to_string()),
            ]
        );
    }

    #[test]
    fn matching_single_pred_takes_larger_overlap() {
        let gt = seg(&[("v", 10, &[(0, 7, "big"), (7, 10, "small")])]);
        let pred = seg(&[("v", 10, &[(0, 10, "only")])]);
        let m = best_matching(&gt, &pred, MatchScore::Iou, None).unwrap();
        assert_eq!(m.gt_for("only"), Some("big"));
    }

    #[test]
    fn identity_scores_one() {
        let gt = seg(&[("v", 8, &[(0, 4, "a"), (4, 8, "b")])]);
        assert_relative_eq!(matched_iou(&gt, &gt).unwrap(), 1.0);
    }

    #[test]
    fn label_renaming_scores_one() {
        let gt = seg(&[("v", 8, &[(0, 4, "a"), (4, 8, "b")])]);
        let pred = seg(&[("v", 8, &[(0, 4, "7"), (4, 8, "3")])]);
        assert_relative_eq!(matched_iou(&gt, &pred).unwrap(), 1.0);
    }

    // Worked 2-label example: A<->X gives 10/15, B<->Y gives 5/10; the
    // crossed matching scores strictly less.
    #[test]
    fn worked_two_label_example() {
        let gt = seg(&[("v", 20, &[(0, 10, "A"), (10, 20, "B")])]);
        let pred = seg(&[("v", 20, &[(0, 15, "X"), (15, 20, "Y")])]);
        let direct = (10.0 / 15.0 + 5.0 / 10.0) / 2.0;
        // Crossed: A with Y (0/20... intersection 0), B with X (5/20).
        let crossed = (0.0 + 5.0 / 20.0) / 2.0;
        assert!(crossed < direct);
        assert_relative_eq!(matched_iou(&gt, &pred).unwrap(), direct, epsilon = 1e-9);
        assert_relative_eq!(
            matched_iou(&gt, &pred).unwrap(),
            0.5833333333333333,
            epsilon = 1e-9
        );
    }

    #[test]
    fn empty_ground_truth_rejected() {
        let gt = seg(&[("v", 5, &[])]);
        let pred = seg(&[("v", 5, &[(0, 5, "x")])]);
        assert!(matches!(
            matched_iou(&gt, &pred),
            Err(Error::EmptyGroundTruth)
        ));
    }

    #[test]
    fn mismatched_sequences_rejected() {
        let gt = seg(&[("v", 5, &[(0, 5, "a")])]);
        let pred = seg(&[("w", 5, &[(0, 5, "a")])]);
        assert!(matches!(
            matched_iou(&gt, &pred),
            Err(Error::SegmentationMismatch(_))
        ));
        let pred_len = seg(&[("v", 6, &[(0, 5, "a")])]);
        assert!(matched_iou(&gt, &pred_len).is_err());
    }

    fn indicator_confidences(pred: &Segmentation) -> Confidences {
        let mut conf = Confidences::default();
        let mut labels = BTreeSet::new();
        for s in &pred.sequences {
            for iv in &s.intervals {
                labels.insert(iv.label.clone());
            }
        }
        for s in &pred.sequences {
            let frames = frame_labels(&s.intervals, s.length).unwrap();
            for label in &labels {
                let scores: Vec<f64> = frames
                    .iter()
                    .map(|f| if f.as_deref() == Some(label) { 1.0 } else { 0.0 })
                    .collect();
                conf.insert(s.id.clone(), label.clone(), scores);
            }
        }
        conf
    }

    #[test]
    fn perfect_ranking_gives_map_one() {
        let gt = seg(&[("v", 8, &[(0, 4, "a"), (4, 8, "b")])]);
        let pred = seg(&[("v", 8, &[(0, 4, "x"), (4, 8, "y")])]);
        let conf = indicator_confidences(&pred);
        assert_relative_eq!(matched_map(&gt, &pred, &conf).unwrap(), 1.0);
    }

    // Adversarial ranking: all negatives above all positives, P=2, Q=2:
    // AP = (1/3 + 2/4) / 2.
    #[test]
    fn adversarial_ranking_ap() {
        let gt = seg(&[("v", 4, &[(0, 2, "a"), (2, 4, "b")])]);
        let pred = seg(&[("v", 4, &[(0, 4, "x")])]);
        let mut conf = Confidences::default();
        // Confidence for x ranks the b-frames (negatives for a) on top.
        conf.insert("v".into(), "x".into(), vec![0.1, 0.2, 0.9, 0.8]);
        let frames = align(&gt, &pred).unwrap();
        let sets = label_sets(&frames).unwrap();
        let ap = average_precision(&sets, &frames, &conf, "a", "x").unwrap();
        assert_relative_eq!(ap, (1.0 / 3.0 + 2.0 / 4.0) / 2.0, epsilon = 1e-9);
        assert_relative_eq!(ap, 0.4166666666666667, epsilon = 1e-9);
    }

    // Uniform confidences fall back to the stable frame order; positives
    // occupying the prefix give AP = 1.
    #[test]
    fn uniform_confidence_tie_order() {
        let gt = seg(&[("v", 4, &[(0, 2, "a"), (2, 4, "b")])]);
        let pred = seg(&[("v", 4, &[(0, 4, "x")])]);
        let mut conf = Confidences::default();
        conf.insert("v".into(), "x".into(), vec![0.5, 0.5, 0.5, 0.5]);
        let frames = align(&gt, &pred).unwrap();
        let sets = label_sets(&frames).unwrap();
        let ap = average_precision(&sets, &frames, &conf, "a", "x").unwrap();
        assert_relative_eq!(ap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_confidences_rejected() {
        let gt = seg(&[("v", 4, &[(0, 4, "a")])]);
        let pred = seg(&[("v", 4, &[(0, 4, "x")])]);
        let conf = Confidences::default();
        assert!(matches!(
            matched_map(&gt, &pred, &conf),
            Err(Error::MissingConfidence { .. })
        ));
    }

    #[test]
    fn frame_accuracy_counts_matched_frames() {
        let gt = seg(&[("v", 10, &[(0, 6, "a"), (6, 10, "b")])]);
        let pred = seg(&[("v", 10, &[(0, 5, "p"), (5, 10, "q")])]);
        // p<->a overlaps 5, q<->b overlaps 4: 9 of 10 frames.
        assert_relative_eq!(matched_frame_accuracy(&gt, &pred).unwrap(), 0.9);
    }

    #[test]
    fn background_frames_are_unscored() {
        // Prediction extends over frames the ground truth never covers;
        // those frames do not count against IoU.
        let gt = seg(&[("v", 10, &[(0, 5, "a")])]);
        let pred = seg(&[("v", 10, &[(0, 10, "x")])]);
        assert_relative_eq!(matched_iou(&gt, &pred).unwrap(), 1.0);
    }

    #[test]
    fn report_contains_per_label_breakdown() {
        let gt = seg(&[("v", 8, &[(0, 4, "a"), (4, 8, "b")])]);
        let pred = seg(&[("v", 8, &[(0, 4, "0"), (4, 8, "1")])]);
        let conf = indicator_confidences(&pred);
        let report = evaluate(&gt, &pred, &conf).unwrap();
        assert_relative_eq!(report.iou_csm, 1.0);
        assert_relative_eq!(report.map_csm, 1.0);
        assert_eq!(report.per_label.len(), 2);
        assert_eq!(report.per_label[0].matched_pred.as_deref(), Some("0"));
    }
}
