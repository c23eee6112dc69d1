use crate::model::{DayRecord, StreamKind, TimeWindow};

use super::{minutes, Evidence, Occurrence, OccurrenceConfig, OccurrenceKind};

/// Label transitions in the location and activity streams.
///
/// Consecutive same-label intervals form a run (gaps between them included).
/// A change fires at the first interval of a new run when the previous run
/// lasted at least `min_prior_minutes`. The occurrence covers that first
/// interval.
pub fn detect_changes(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Occurrence> {
    let min_prior = i64::from(cfg.min_prior_minutes) * 60;
    let mut out = Vec::new();
    for kind in [StreamKind::Activity, StreamKind::Location] {
        let Some(stream) = day.intervals(kind) else {
            continue;
        };
        let ivs = &stream.intervals;
        let mut run_start = 0;
        for i in 1..ivs.len() {
            if ivs[i].label == ivs[i - 1].label {
                continue;
            }
            let persisted = (ivs[i - 1].end - ivs[run_start].start).num_seconds();
            if persisted >= min_prior {
                let window = TimeWindow::new(ivs[i].start, ivs[i].end);
                let from = &ivs[i - 1].label;
                let to = &ivs[i].label;
                out.push(Occurrence::new(
                    OccurrenceKind::Change,
                    window,
                    format!("{from}→{to}"),
                    vec![Evidence {
                        kind,
                        window,
                        note: format!("{to} after {from} for {} min", minutes(persisted)),
                    }],
                ));
            }
            run_start = i;
        }
    }
    out.sort_by_key(|o| (o.window.start, o.title.clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DayFrame, Interval, IntervalStream, PersonId, Stream};
    use chrono::{DateTime, NaiveDate};

    fn ts(s: &str) -> crate::model::Timestamp {
        DateTime::parse_from_rfc3339(&format!("2024-11-18T{s}:00Z")).unwrap()
    }

    fn day(ivs: Vec<(&str, &str, &str)>) -> DayRecord {
        let mut d = DayRecord::new(
            PersonId::new("p1").unwrap(),
            NaiveDate::from_ymd_opt(2024, 11, 18).unwrap(),
            DayFrame::utc(),
        );
        d.set_stream(Stream::Intervals(IntervalStream {
            kind: StreamKind::Activity,
            intervals: ivs.into_iter().map(|(s, e, l)| Interval::new(ts(s), ts(e), l)).collect(),
        }));
        d
    }

    #[test]
    fn stationary_then_automotive() {
        let d = day(vec![("08:00", "11:00", "stationary"), ("11:00", "11:20", "automotive")]);
        let out = detect_changes(&d, &OccurrenceConfig::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].title, "stationary→automotive");
        assert_eq!(out[0].window.start, ts("11:00"));
        assert_eq!(out[0].window.end, ts("11:20"));
        assert!(out[0].source_kinds.contains(&StreamKind::Activity));
    }

    #[test]
    fn constant_label_has_no_changes() {
        let d = day(vec![("00:00", "12:00", "stationary"), ("12:00", "23:00", "stationary")]);
        assert!(detect_changes(&d, &OccurrenceConfig::default()).is_empty());
    }

    #[test]
    fn short_prior_run_is_ignored() {
        let d = day(vec![("08:00", "08:10", "walking"), ("08:10", "09:00", "stationary")]);
        assert!(detect_changes(&d, &OccurrenceConfig::default()).is_empty());
        let cfg = OccurrenceConfig {
            min_prior_minutes: 10,
            ..Default::default()
        };
        assert_eq!(detect_changes(&d, &cfg).len(), 1);
    }
}
