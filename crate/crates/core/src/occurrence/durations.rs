use crate::model::{DayRecord, Interval, StreamKind, TimeWindow};

use super::{minutes, Evidence, Occurrence, OccurrenceConfig, OccurrenceKind};

/// Back-to-back intervals with `label` merged into runs.
fn runs<'a>(intervals: &'a [Interval], label: &'a str) -> Vec<TimeWindow> {
    let mut out: Vec<TimeWindow> = Vec::new();
    for iv in intervals.iter().filter(|iv| iv.label == label) {
        match out.last_mut() {
            Some(last) if last.end == iv.start => last.end = iv.end,
            _ => out.push(TimeWindow::new(iv.start, iv.end)),
        }
    }
    out
}

/// Phone-unlocked runs and stationary runs longer than their thresholds.
pub fn detect_long_durations(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Occurrence> {
    let rules = [
        (StreamKind::PhoneLock, "unlocked", cfg.phone_min_minutes, "phone use"),
        (StreamKind::Activity, "stationary", cfg.sedentary_min_minutes, "sedentary"),
    ];
    let mut out = Vec::new();
    for (kind, label, min, what) in rules {
        let Some(stream) = day.intervals(kind) else {
            continue;
        };
        for run in runs(&stream.intervals, label) {
            let secs = run.duration_secs();
            if secs >= i64::from(min) * 60 {
                out.push(Occurrence::new(
                    OccurrenceKind::LongDuration,
                    run,
                    format!("{} min {what}", minutes(secs)),
                    vec![Evidence {
                        kind,
                        window: run,
                        note: format!("{label} continuously"),
                    }],
                ));
            }
        }
    }
    out.sort_by_key(|o| (o.window.start, o.title.clone()));
    out
}
