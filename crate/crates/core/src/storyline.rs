//! The storyline output format: per-sequence segmentations over discovered
//! activities, per-activity records (emission parameters, description,
//! exemplar frames), and per-frame posterior label frequencies.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::{Confidences, Interval, Segmentation, SequenceSegmentation};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub activity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceParse {
    pub id: String,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExemplarRef {
    pub sequence_id: String,
    pub frame_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub id: u32,
    pub theta_language: Vec<f64>,
    pub theta_visual: Vec<f64>,
    /// Generated caption; empty until the description stage runs.
    pub description: Vec<String>,
    /// Up to 4 high-likelihood frames from distinct sequences.
    pub exemplars: Vec<ExemplarRef>,
}

/// Posterior frequency of one activity label at one frame over the retained
/// sampler sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfidence {
    pub activity: u32,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorylineParse {
    pub sequences: Vec<SequenceParse>,
    pub activities: Vec<ActivityRecord>,
    /// Aligned with `sequences`: per frame, label frequencies sorted by id.
    pub frame_confidence: Vec<Vec<Vec<FrameConfidence>>>,
}

impl StorylineParse {
    /// Total frames of sequence `i` (segments cover `[0, T)`).
    pub fn sequence_len(&self, i: usize) -> usize {
        self.sequences[i].segments.last().map_or(0, |s| s.end)
    }

    /// The parse as an evaluation segmentation, labels stringified.
    pub fn to_segmentation(&self) -> Segmentation {
        Segmentation {
            sequences: self
                .sequences
                .iter()
                .enumerate()
                .map(|(i, seq)| SequenceSegmentation {
                    id: seq.id.clone(),
                    length: self.sequence_len(i),
                    intervals: seq
                        .segments
                        .iter()
                        .map(|s| Interval {
                            start: s.start,
                            end: s.end,
                            label: s.activity.to_string(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Per-frame label confidences for the mAP metric.
    pub fn to_confidences(&self) -> Confidences {
        let mut conf = Confidences::default();
        let labels: Vec<u32> = self.activities.iter().map(|a| a.id).collect();
        for (i, seq) in self.sequences.iter().enumerate() {
            let t_len = self.sequence_len(i);
            for &label in &labels {
                let mut scores = vec![0.0; t_len];
                for (t, frame) in self.frame_confidence[i].iter().enumerate() {
                    if let Some(fc) = frame.iter().find(|fc| fc.activity == label) {
                        scores[t] = fc.p;
                    }
                }
                conf.insert(seq.id.clone(), label.to_string(), scores);
            }
        }
        conf
    }
}

/// Collapses per-frame labels into maximal constant runs.
pub fn segments_from_labels(labels: &[u32]) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    for (t, &label) in labels.iter().enumerate() {
        match segments.last_mut() {
            Some(seg) if seg.activity == label && seg.end == t => seg.end = t + 1,
            _ => segments.push(Segment {
                start: t,
                end: t + 1,
                activity: label,
            }),
        }
    }
    segments
}

pub fn load_parse(path: &Path) -> Result<StorylineParse> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_parse(parse: &StorylineParse, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(parse)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_collapse_runs() {
        let segs = segments_from_labels(&[3, 3, 1, 1, 1, 3]);
        assert_eq!(
            segs,
            vec![
                Segment { start: 0, end: 2, activity: 3 },
                Segment { start: 2, end: 5, activity: 1 },
                Segment { start: 5, end: 6, activity: 3 },
            ]
        );
    }

    #[test]
    fn parse_roundtrips_losslessly() {
        let parse = StorylineParse {
            sequences: vec![SequenceParse {
                id: "a".into(),
                segments: vec![Segment { start: 0, end: 3, activity: 7 }],
            }],
            activities: vec![ActivityRecord {
                id: 7,
                theta_language: vec![0.1234567890123456, 1e-9],
                theta_visual: vec![],
                description: vec!["crack".into(), "egg".into()],
                exemplars: vec![ExemplarRef { sequence_id: "a".into(), frame_index: 1 }],
            }],
            frame_confidence: vec![vec![
                vec![FrameConfidence { activity: 7, p: 1.0 }],
                vec![FrameConfidence { activity: 7, p: 0.5 }],
                vec![FrameConfidence { activity: 7, p: 0.25 }],
            ]],
        };
        let text = serde_json::to_string(&parse).unwrap();
        let back: StorylineParse = serde_json::from_str(&text).unwrap();
        assert_eq!(back, parse);
    }
}
