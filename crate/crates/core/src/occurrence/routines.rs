use chrono::Duration;

use crate::model::{DayRecord, Routine, StreamKind, TimeWindow};

use super::spans::{clip, subtract, union, Span};
use super::{minutes, Evidence, Occurrence, OccurrenceConfig, OccurrenceKind};

/// Quiet time: phone locked, no steps recorded, and activity stationary or
/// absent. Normalized spans clipped to the day.
pub fn low_signal_spans(day: &DayRecord) -> Vec<Span> {
    let (ds, de) = day.bounds();
    let locked = match day.intervals(StreamKind::PhoneLock) {
        Some(s) => union(
            s.intervals
                .iter()
                .filter(|iv| iv.label == "locked")
                .map(|iv| Span::new(iv.start.timestamp(), iv.end.timestamp()))
                .collect(),
        ),
        None => Vec::new(),
    };
    let stepping = match day.samples(StreamKind::Steps) {
        Some(s) => union(
            s.samples
                .iter()
                .filter(|x| x.v > 0.0)
                .map(|x| {
                    let t = x.t.timestamp();
                    Span::new(t, t + i64::from(s.nominal_interval))
                })
                .collect(),
        ),
        None => Vec::new(),
    };
    let moving = match day.intervals(StreamKind::Activity) {
        Some(s) => union(
            s.intervals
                .iter()
                .filter(|iv| iv.label != "stationary")
                .map(|iv| Span::new(iv.start.timestamp(), iv.end.timestamp()))
                .collect(),
        ),
        None => Vec::new(),
    };
    let quiet = subtract(&subtract(&locked, &stepping), &moving);
    clip(&quiet, ds.timestamp(), de.timestamp())
}

/// Occurrences of a daily routine window that touch the day, clipped to it.
pub fn routine_instances(day: &DayRecord, routine: &Routine) -> Vec<Span> {
    let (ds, de) = day.bounds();
    let mut out = Vec::new();
    for offset in -1..=1 {
        let d = day.date + Duration::days(offset);
        let start = day.frame.local(d, routine.start);
        let end_date = if routine.end > routine.start { d } else { d + Duration::days(1) };
        let end = day.frame.local(end_date, routine.end);
        let s = start.max(ds).timestamp();
        let e = end.min(de).timestamp();
        if s < e {
            out.push(Span::new(s, e));
        }
    }
    out
}

/// For each declared routine (or the default sleep window when none are
/// declared), the longest quiet stretch covering at least `routine_overlap`
/// of the routine window.
pub fn detect_routines(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Occurrence> {
    let quiet = low_signal_spans(day);
    let routines: Vec<&Routine> = if day.profile.declared_routines.is_empty() {
        vec![&cfg.default_sleep]
    } else {
        day.profile.declared_routines.iter().collect()
    };
    let mut out: Vec<Occurrence> = Vec::new();
    for routine in routines {
        for inst in routine_instances(day, routine) {
            let best = quiet
                .iter()
                .filter(|q| {
                    let shared = q.overlap(&inst);
                    shared > 0 && shared as f64 >= cfg.routine_overlap * inst.len() as f64
                })
                .fold(None::<Span>, |best, q| match best {
                    Some(b) if b.len() >= q.len() => Some(b),
                    _ => Some(*q),
                });
            let Some(best) = best else { continue };
            let window = TimeWindow::new(day.frame.at(best.start), day.frame.at(best.end));
            if out.iter().any(|o| o.window == window && o.title.starts_with(&routine.label)) {
                continue;
            }
            let mut evidence = vec![Evidence {
                kind: StreamKind::PhoneLock,
                window,
                note: "phone locked".into(),
            }];
            if day.samples(StreamKind::Steps).is_some() {
                evidence.push(Evidence {
                    kind: StreamKind::Steps,
                    window,
                    note: "no steps".into(),
                });
            }
            if day.intervals(StreamKind::Activity).is_some() {
                evidence.push(Evidence {
                    kind: StreamKind::Activity,
                    window,
                    note: "stationary or no activity".into(),
                });
            }
            out.push(Occurrence::new(
                OccurrenceKind::Routine,
                window,
                format!("{} ({} min)", routine.label, minutes(best.len())),
                evidence,
            ));
        }
    }
    out.sort_by_key(|o| (o.window.start, o.title.clone()));
    out
}
