//! Wire payloads (`"v": 2`).
//!
//! Every free-text field passes through the scrubber on the way out, the
//! profile carries place labels only, and EMA entries are never served.

use chrono::{NaiveDate, NaiveTime};
use lifelens_core::encoder::scrub_text;
use lifelens_core::ingest::clip_stream;
use lifelens_core::llm::{InferenceFields, InferenceResult};
use lifelens_core::model::{DayRecord, Stream, StreamKind, TimeWindow, Timestamp, UserProfile};
use lifelens_core::occurrence::{Occurrence, OutlierFlag, Trendline};
use lifelens_core::store::StoredDay;
use serde::Serialize;

pub const PAYLOAD_VERSION: u32 = 2;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WindowOut {
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EvidenceOut {
    pub kind: StreamKind,
    pub start: Timestamp,
    pub end: Timestamp,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExplanationOut {
    pub title: String,
    pub text: String,
    pub sources_used: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OccurrenceOut {
    pub kind: &'static str,
    pub title: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub source_kinds: Vec<StreamKind>,
    pub evidence: Vec<EvidenceOut>,
    /// `explained` or `pending`.
    pub status: &'static str,
    pub explanation: Option<ExplanationOut>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GlanceOut {
    pub summary: String,
    pub bullets: Vec<String>,
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RoutineOut {
    pub label: String,
    pub start: NaiveTime,
    pub end: NaiveTime,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProfileOut {
    pub v: u32,
    pub demographics: std::collections::BTreeMap<String, String>,
    pub known_places: Vec<String>,
    pub declared_routines: Vec<RoutineOut>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TurnOut {
    pub role: &'static str,
    pub at: Timestamp,
    pub utterance: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckinOut {
    pub start: Timestamp,
    pub end: Timestamp,
    pub turns: Vec<TurnOut>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DayPayload {
    pub v: u32,
    pub person: String,
    pub date: NaiveDate,
    pub timezone: String,
    pub window: WindowOut,
    pub streams: Vec<Stream>,
    /// The location stream's intervals, for the background lane.
    pub locations: Vec<lifelens_core::model::Interval>,
    pub occurrences: Vec<OccurrenceOut>,
    pub outliers: Vec<OutlierFlag>,
    pub trendlines: Vec<Trendline>,
    pub glance: Option<GlanceOut>,
    pub profile: ProfileOut,
    pub checkins: Vec<CheckinOut>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ListPayload<T> {
    pub v: u32,
    pub person: String,
    pub date: NaiveDate,
    pub window: WindowOut,
    pub items: Vec<T>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GlancePayload {
    pub v: u32,
    pub person: String,
    pub date: NaiveDate,
    pub glance: Option<GlanceOut>,
}

fn clean(text: &str, day: &DayRecord) -> String {
    scrub_text(text, day).0
}

fn intersects(w: &TimeWindow, start: Timestamp, end: Timestamp) -> bool {
    start < w.end && end > w.start || (start == end && start >= w.start && start < w.end)
}

pub fn profile_out(p: &UserProfile) -> ProfileOut {
    ProfileOut {
        v: PAYLOAD_VERSION,
        demographics: p.demographics.clone(),
        known_places: p.known_places.iter().map(|k| k.label.clone()).collect(),
        declared_routines: p
            .declared_routines
            .iter()
            .map(|r| RoutineOut {
                label: r.label.clone(),
                start: r.start,
                end: r.end,
            })
            .collect(),
    }
}

pub fn occurrences_out(day: &StoredDay, w: &TimeWindow) -> Vec<OccurrenceOut> {
    let r = &day.record;
    let Some(a) = &day.analysis else {
        return Vec::new();
    };
    a.occurrences
        .iter()
        .filter(|o| intersects(w, o.window.start, o.window.end))
        .map(|o| occurrence_out(o, r))
        .collect()
}

fn occurrence_out(o: &Occurrence, r: &DayRecord) -> OccurrenceOut {
    OccurrenceOut {
        kind: o.kind.as_str(),
        title: clean(&o.title, r),
        start: o.window.start,
        end: o.window.end,
        source_kinds: o.source_kinds.iter().copied().collect(),
        evidence: o
            .evidence
            .iter()
            .map(|e| EvidenceOut {
                kind: e.kind,
                start: e.window.start,
                end: e.window.end,
                note: clean(&e.note, r),
            })
            .collect(),
        status: if o.explanation.is_some() { "explained" } else { "pending" },
        explanation: o.explanation.as_ref().map(|e| ExplanationOut {
            title: clean(&e.title, r),
            text: clean(&e.text, r),
            sources_used: e.sources_used.clone(),
        }),
    }
}

pub fn glance_out(day: &StoredDay) -> Option<GlanceOut> {
    let g: &InferenceResult = day.analysis.as_ref()?.glance.as_ref()?;
    let r = &day.record;
    match &g.fields {
        InferenceFields::Daily { summary, bullets } => Some(GlanceOut {
            summary: clean(summary, r),
            bullets: bullets.iter().map(|b| clean(b, r)).collect(),
            start: g.window.start,
            end: g.window.end,
        }),
        _ => None,
    }
}

pub fn checkins_out(r: &DayRecord, w: &TimeWindow) -> Vec<CheckinOut> {
    r.checkins
        .iter()
        .filter(|c| intersects(w, c.start, c.end))
        .map(|c| CheckinOut {
            start: c.start,
            end: c.end,
            turns: c
                .turns
                .iter()
                .map(|t| TurnOut {
                    role: t.role.display(),
                    at: t.at,
                    utterance: clean(&t.utterance, r),
                })
                .collect(),
        })
        .collect()
}

/// The full day view, restricted to `w`. Samples and intervals are clipped
/// to the window; occurrences and check-ins are kept when they intersect it.
pub fn day_payload(day: &StoredDay, w: &TimeWindow) -> DayPayload {
    let r = &day.record;
    let streams: Vec<Stream> = r
        .streams
        .iter()
        .map(|s| clip_stream(s, w.start, w.end))
        .filter(|s| !s.is_empty())
        .collect();
    let locations = streams
        .iter()
        .find_map(|s| match s {
            Stream::Intervals(i) if i.kind == StreamKind::Location => Some(i.intervals.clone()),
            _ => None,
        })
        .unwrap_or_default();
    let (outliers, trendlines) = match &day.analysis {
        Some(a) => (
            a.outliers.iter().filter(|o| o.at >= w.start && o.at < w.end).cloned().collect(),
            a.trendlines.clone(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    DayPayload {
        v: PAYLOAD_VERSION,
        person: r.person_id.to_string(),
        date: r.date,
        timezone: r.frame.zone.name().to_string(),
        window: WindowOut {
            start: w.start,
            end: w.end,
        },
        streams,
        locations,
        occurrences: occurrences_out(day, w),
        outliers,
        trendlines,
        glance: glance_out(day),
        profile: profile_out(&r.profile),
        checkins: checkins_out(r, w),
    }
}
