//! Deterministic occurrence detection.
//!
//! Five detectors (changes, gaps, long durations, discrepancies, routines)
//! read a validated [`DayRecord`] and emit [`Occurrence`]s; per-hour
//! trendlines and z-score flags cover the physiological streams. All
//! functions here are pure: same record and config, same output.

mod changes;
mod discrepancy;
mod durations;
mod gaps;
mod routines;
pub mod spans;
mod trend;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveTime;
use serde::{Deserialize, Serialize};

use crate::model::{DayRecord, Routine, StreamKind, TimeWindow};

pub use changes::detect_changes;
pub use discrepancy::{detect_discrepancies, Comparison, DiscrepancyRule, ProbeMeasure};
pub use durations::detect_long_durations;
pub use gaps::{coverage_spans, detect_gaps};
pub use routines::{detect_routines, low_signal_spans, routine_instances};
pub use trend::{compute_baseline_trendline, flag_outliers, HourStat, OutlierFlag, TrendError, Trendline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccurrenceKind {
    Change,
    Gap,
    LongDuration,
    Discrepancy,
    Routine,
}

impl OccurrenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OccurrenceKind::Change => "change",
            OccurrenceKind::Gap => "gap",
            OccurrenceKind::LongDuration => "long_duration",
            OccurrenceKind::Discrepancy => "discrepancy",
            OccurrenceKind::Routine => "routine",
        }
    }
}

impl fmt::Display for OccurrenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub kind: StreamKind,
    pub window: TimeWindow,
    pub note: String,
}

/// Model-written explanation attached after detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub title: String,
    pub text: String,
    pub sources_used: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub kind: OccurrenceKind,
    pub window: TimeWindow,
    pub title: String,
    pub source_kinds: BTreeSet<StreamKind>,
    pub evidence: Vec<Evidence>,
    #[serde(default)]
    pub explanation: Option<Explanation>,
}

impl Occurrence {
    pub(crate) fn new(kind: OccurrenceKind, window: TimeWindow, title: String, evidence: Vec<Evidence>) -> Self {
        let source_kinds = evidence.iter().map(|e| e.kind).collect();
        Self {
            kind,
            window,
            title,
            source_kinds,
            evidence,
            explanation: None,
        }
    }
}

/// Thresholds and rules for every detector. Duration thresholds are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccurrenceConfig {
    /// A label must have held this long before a change to it counts.
    pub min_prior_minutes: u32,
    /// Streams checked for missing coverage, with their minimum gap.
    pub gap_minutes: BTreeMap<StreamKind, u32>,
    pub phone_min_minutes: u32,
    pub sedentary_min_minutes: u32,
    pub discrepancy_rules: Vec<DiscrepancyRule>,
    /// Fraction of a declared routine window a quiet stretch must cover.
    pub routine_overlap: f64,
    /// Used when the profile declares no routines.
    pub default_sleep: Routine,
    pub outlier_k: f64,
    pub outlier_coalesce_minutes: u32,
}

impl Default for OccurrenceConfig {
    fn default() -> Self {
        let gap_minutes = [
            (StreamKind::HeartRate, 15),
            (StreamKind::Respiration, 15),
            (StreamKind::Steps, 15),
            (StreamKind::Battery, 15),
            (StreamKind::Activity, 60),
            (StreamKind::Location, 60),
        ]
        .into_iter()
        .collect();
        Self {
            min_prior_minutes: 30,
            gap_minutes,
            phone_min_minutes: 45,
            sedentary_min_minutes: 120,
            discrepancy_rules: DiscrepancyRule::defaults(),
            routine_overlap: 0.5,
            default_sleep: Routine {
                label: "sleep".into(),
                start: NaiveTime::from_hms_opt(22, 0, 0).expect("valid"),
                end: NaiveTime::from_hms_opt(8, 0, 0).expect("valid"),
            },
            outlier_k: 3.0,
            outlier_coalesce_minutes: 5,
        }
    }
}

/// Run all five detectors and consolidate.
pub fn detect_all(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Occurrence> {
    consolidate_occurrences(vec![
        detect_changes(day, cfg),
        detect_gaps(day, cfg),
        detect_long_durations(day, cfg),
        detect_discrepancies(day, cfg),
        detect_routines(day, cfg),
    ])
}

pub const MERGE_OVERLAP: f64 = 0.8;

/// Shared-time fraction of the shorter window. A zero-length window counts as
/// fully overlapped when it lies inside the other.
pub fn overlap_ratio(a: &TimeWindow, b: &TimeWindow) -> f64 {
    let inter = (a.end.min(b.end) - a.start.max(b.start)).num_seconds();
    if inter < 0 {
        return 0.0;
    }
    let shorter = a.duration_secs().min(b.duration_secs());
    if shorter == 0 {
        1.0
    } else {
        inter as f64 / shorter as f64
    }
}

fn order_key(o: &Occurrence) -> (i64, &'static str, i64, &str) {
    (o.window.start.timestamp(), o.kind.as_str(), o.window.end.timestamp(), o.title.as_str())
}

/// Merge detector outputs. Same-kind occurrences whose windows overlap by at
/// least [`MERGE_OVERLAP`] are joined transitively; the result is ordered by
/// start, then kind name.
pub fn consolidate_occurrences(lists: Vec<Vec<Occurrence>>) -> Vec<Occurrence> {
    let mut by_kind: BTreeMap<OccurrenceKind, Vec<Occurrence>> = BTreeMap::new();
    for o in lists.into_iter().flatten() {
        by_kind.entry(o.kind).or_default().push(o);
    }
    let mut out = Vec::new();
    for (_, mut items) in by_kind {
        items.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
        let mut parent: Vec<usize> = (0..items.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                if items[j].window.start > items[i].window.end {
                    break;
                }
                if overlap_ratio(&items[i].window, &items[j].window) >= MERGE_OVERLAP {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[rj.max(ri)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<Occurrence>> = BTreeMap::new();
        for (i, o) in items.into_iter().enumerate() {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(o);
        }
        for (_, group) in groups {
            let mut iter = group.into_iter();
            let mut merged = iter.next().expect("non-empty group");
            for o in iter {
                merged.window.start = merged.window.start.min(o.window.start);
                merged.window.end = merged.window.end.max(o.window.end);
                merged.source_kinds.extend(o.source_kinds);
                merged.evidence.extend(o.evidence);
                if merged.explanation.is_none() {
                    merged.explanation = o.explanation;
                }
            }
            out.push(merged);
        }
    }
    out.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
    out
}

pub(crate) fn minutes(secs: i64) -> i64 {
    secs / 60
}
