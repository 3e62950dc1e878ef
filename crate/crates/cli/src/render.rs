//! Static SVG storyline: one horizontal timeline band per sequence,
//! segments colored by activity id from a fixed palette cycle, optional
//! ground-truth band under each prediction band, and a legend of activity
//! descriptions. Layout is deterministic.

use std::collections::BTreeMap;
use std::fmt::Write;

use storyline_core::eval::Segmentation;
use storyline_core::storyline::StorylineParse;

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#2f4b7c", "#a05195",
];

const BAND_WIDTH: f64 = 800.0;
const BAND_HEIGHT: f64 = 18.0;
const ROW_GAP: f64 = 10.0;
const LEFT_MARGIN: f64 = 120.0;
const TOP_MARGIN: f64 = 20.0;
const LEGEND_ROW: f64 = 20.0;

fn color_for(index: usize) -> &'static str {
    PALETTE[index % PALETTE.len()]
}

fn rect(out: &mut String, x: f64, y: f64, w: f64, h: f64, fill: &str, title: &str) {
    let _ = writeln!(
        out,
        r#"  <rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"><title>{title}</title></rect>"#
    );
}

fn text(out: &mut String, x: f64, y: f64, size: f64, content: &str) {
    let _ = writeln!(
        out,
        r#"  <text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size:.0}">{content}</text>"#
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the parse (and an optional ground-truth overlay) as an SVG
/// document string.
pub fn render_storyline(parse: &StorylineParse, truth: Option<&Segmentation>) -> String {
    // Stable color index per activity id; ids beyond the palette cycle.
    let activity_color: BTreeMap<u32, &str> = parse
        .activities
        .iter()
        .map(|a| (a.id, color_for(a.id as usize)))
        .collect();
    let truth_by_id: BTreeMap<&str, &storyline_core::eval::SequenceSegmentation> = truth
        .map(|t| t.sequences.iter().map(|s| (s.id.as_str(), s)).collect())
        .unwrap_or_default();
    let mut gt_labels: Vec<&str> = truth_by_id
        .values()
        .flat_map(|s| s.intervals.iter().map(|iv| iv.label.as_str()))
        .collect();
    gt_labels.sort_unstable();
    gt_labels.dedup();

    let rows_per_seq = if truth.is_some() { 2.0 } else { 1.0 };
    let body_height = parse.sequences.len() as f64 * (rows_per_seq * BAND_HEIGHT + ROW_GAP);
    let legend_height = (parse.activities.len() as f64 + 1.0) * LEGEND_ROW;
    let total_height = TOP_MARGIN + body_height + legend_height + 20.0;
    let total_width = LEFT_MARGIN + BAND_WIDTH + 20.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_width:.0}" height="{total_height:.0}" viewBox="0 0 {total_width:.0} {total_height:.0}">"#
    );

    let mut y = TOP_MARGIN;
    for (i, seq) in parse.sequences.iter().enumerate() {
        let t_total = parse.sequence_len(i).max(1) as f64;
        text(&mut out, 8.0, y + BAND_HEIGHT - 4.0, 12.0, &escape(&seq.id));
        for seg in &seq.segments {
            let x = LEFT_MARGIN + seg.start as f64 / t_total * BAND_WIDTH;
            let w = (seg.end - seg.start) as f64 / t_total * BAND_WIDTH;
            let title = format!("activity {} [{}, {})", seg.activity, seg.start, seg.end);
            rect(
                &mut out,
                x,
                y,
                w,
                BAND_HEIGHT,
                activity_color.get(&seg.activity).copied().unwrap_or("#888888"),
                &title,
            );
        }
        y += BAND_HEIGHT;
        if let Some(gt) = truth_by_id.get(seq.id.as_str()) {
            let gt_total = gt.length.max(1) as f64;
            for iv in &gt.intervals {
                let x = LEFT_MARGIN + iv.start as f64 / gt_total * BAND_WIDTH;
                let w = (iv.end - iv.start) as f64 / gt_total * BAND_WIDTH;
                let color_idx = gt_labels.iter().position(|&l| l == iv.label).unwrap_or(0);
                let title = format!("truth {} [{}, {})", escape(&iv.label), iv.start, iv.end);
                rect(&mut out, x, y + 2.0, w, BAND_HEIGHT - 4.0, color_for(color_idx), &title);
            }
        }
        if truth.is_some() {
            y += BAND_HEIGHT;
        }
        y += ROW_GAP;
    }

    text(&mut out, 8.0, y + 12.0, 13.0, "activities");
    y += LEGEND_ROW;
    for activity in &parse.activities {
        rect(&mut out, 8.0, y, 14.0, 14.0, activity_color[&activity.id], "");
        let words = if activity.description.is_empty() {
            String::from("(no description)")
        } else {
            activity.description.join(" ")
        };
        text(
            &mut out,
            28.0,
            y + 12.0,
            12.0,
            &escape(&format!("activity {}: {}", activity.id, words)),
        );
        y += LEGEND_ROW;
    }

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use storyline_core::storyline::{ActivityRecord, Segment, SequenceParse};

    fn parse_with(segments: Vec<Segment>, n_activities: u32) -> StorylineParse {
        StorylineParse {
            sequences: vec![SequenceParse {
                id: "s0".into(),
                segments,
            }],
            activities: (0..n_activities)
                .map(|id| ActivityRecord {
                    id,
                    theta_language: vec![],
                    theta_visual: vec![],
                    description: vec![format!("step{id}")],
                    exemplars: vec![],
                })
                .collect(),
            frame_confidence: vec![vec![]],
        }
    }

    fn rect_widths(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains("<rect") && l.contains("activity"))
            .map(|l| {
                let key = "width=\"";
                let start = l.find(key).unwrap() + key.len();
                let end = l[start..].find('"').unwrap() + start;
                l[start..end].parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn single_activity_is_one_band_and_legend_entry() {
        let parse = parse_with(vec![Segment { start: 0, end: 10, activity: 0 }], 1);
        let svg = render_storyline(&parse, None);
        assert_eq!(rect_widths(&svg).len(), 1);
        assert_eq!(svg.matches("activity 0:").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn palette_cycles_beyond_its_size() {
        let segments: Vec<Segment> = (0..14)
            .map(|i| Segment { start: i, end: i + 1, activity: i as u32 })
            .collect();
        let parse = parse_with(segments, 14);
        let svg = render_storyline(&parse, None);
        // Activities 0 and 12 share a color but keep distinct legend rows.
        assert!(svg.matches(PALETTE[0]).count() >= 4);
        assert_eq!(svg.matches("activity 12:").count(), 1);
        assert_eq!(svg.matches("activity 0:").count(), 1);
    }

    // Band lengths are proportional to frame counts.
    #[test]
    fn widths_proportional_to_segment_lengths() {
        let parse = parse_with(
            vec![
                Segment { start: 0, end: 30, activity: 0 },
                Segment { start: 30, end: 40, activity: 1 },
            ],
            2,
        );
        let svg = render_storyline(&parse, None);
        let widths = rect_widths(&svg);
        assert_eq!(widths.len(), 2);
        assert!((widths[0] / widths[1] - 3.0).abs() < 1e-6);
        assert!((widths[0] + widths[1] - 800.0).abs() < 1e-6);
    }

    #[test]
    fn truth_overlay_adds_second_band() {
        use storyline_core::eval::{Interval, SequenceSegmentation};
        let parse = parse_with(vec![Segment { start: 0, end: 4, activity: 0 }], 1);
        let truth = Segmentation {
            sequences: vec![SequenceSegmentation {
                id: "s0".into(),
                length: 4,
                intervals: vec![Interval { start: 0, end: 4, label: "crack".into() }],
            }],
        };
        let svg = render_storyline(&parse, Some(&truth));
        assert!(svg.contains("truth crack"));
        let without = render_storyline(&parse, None);
        assert!(!without.contains("truth"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let parse = parse_with(vec![Segment { start: 0, end: 7, activity: 3 }], 4);
        assert_eq!(render_storyline(&parse, None), render_storyline(&parse, None));
    }
}
