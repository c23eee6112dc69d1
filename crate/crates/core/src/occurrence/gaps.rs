use crate::model::{DayRecord, Stream, StreamKind, TimeWindow};

use super::spans::{complement, union, Span};
use super::{minutes, Evidence, Occurrence, OccurrenceConfig, OccurrenceKind};

/// Time covered by a stream: a sample covers `[t, t + nominal_interval)`,
/// an interval covers `[start, end)`. Result is normalized.
pub fn coverage_spans(stream: Option<&Stream>) -> Vec<Span> {
    match stream {
        None => Vec::new(),
        Some(Stream::Samples(s)) => union(
            s.samples
                .iter()
                .map(|x| {
                    let t = x.t.timestamp();
                    Span::new(t, t + i64::from(s.nominal_interval))
                })
                .collect(),
        ),
        Some(Stream::Intervals(s)) => union(
            s.intervals
                .iter()
                .map(|iv| Span::new(iv.start.timestamp(), iv.end.timestamp()))
                .collect(),
        ),
    }
}

fn pretty(kind: StreamKind) -> String {
    kind.as_str().replace('_', " ")
}

/// Stretches of the day with no coverage for each configured stream.
pub fn detect_gaps(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Occurrence> {
    let (ds, de) = day.bounds();
    let (lo, hi) = (ds.timestamp(), de.timestamp());
    let mut out = Vec::new();
    for (&kind, &min) in &cfg.gap_minutes {
        let covered = coverage_spans(day.stream(kind));
        for gap in complement(&covered, lo, hi) {
            if gap.len() < i64::from(min) * 60 {
                continue;
            }
            let window = TimeWindow::new(day.frame.at(gap.start), day.frame.at(gap.end));
            out.push(Occurrence::new(
                OccurrenceKind::Gap,
                window,
                format!("No {} data for {} min", pretty(kind), minutes(gap.len())),
                vec![Evidence {
                    kind,
                    window,
                    note: if day.stream(kind).is_some() {
                        "no samples or intervals".into()
                    } else {
                        "stream absent for the day".into()
                    },
                }],
            ));
        }
    }
    out.sort_by_key(|o| (o.window.start, o.title.clone()));
    out
}
