//! Domain types for one person-day of multi-modal tracking data.
//!
//! Everything downstream (detectors, encoder, prompts, API payloads) reads
//! these types. They are plain data: construct, run [`validate_day_record`],
//! then share freely.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveTime, TimeZone, Timelike};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

/// An instant with second resolution, carrying the offset it was recorded in.
pub type Timestamp = DateTime<FixedOffset>;

/// Slack allowed on either side of the civil day for boundary data.
pub const DAY_SLACK_SECS: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    HeartRate,
    Respiration,
    Steps,
    Battery,
    Activity,
    PhoneLock,
    Wifi,
    Location,
    Call,
    Chatbot,
}

/// Continuous samples vs. labeled intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamShape {
    Samples,
    Intervals,
}

impl StreamKind {
    pub const ALL: [StreamKind; 10] = [
        StreamKind::HeartRate,
        StreamKind::Respiration,
        StreamKind::Steps,
        StreamKind::Battery,
        StreamKind::Activity,
        StreamKind::PhoneLock,
        StreamKind::Wifi,
        StreamKind::Location,
        StreamKind::Call,
        StreamKind::Chatbot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StreamKind::HeartRate => "heart_rate",
            StreamKind::Respiration => "respiration",
            StreamKind::Steps => "steps",
            StreamKind::Battery => "battery",
            StreamKind::Activity => "activity",
            StreamKind::PhoneLock => "phone_lock",
            StreamKind::Wifi => "wifi",
            StreamKind::Location => "location",
            StreamKind::Call => "call",
            StreamKind::Chatbot => "chatbot",
        }
    }

    pub fn shape(self) -> StreamShape {
        match self {
            StreamKind::HeartRate
            | StreamKind::Respiration
            | StreamKind::Steps
            | StreamKind::Battery => StreamShape::Samples,
            _ => StreamShape::Intervals,
        }
    }

    /// Closed label vocabulary for interval kinds that have one.
    pub fn allowed_labels(self) -> Option<&'static [&'static str]> {
        match self {
            StreamKind::Activity => Some(&["stationary", "walking", "automotive"]),
            StreamKind::PhoneLock => Some(&["locked", "unlocked"]),
            StreamKind::Wifi => Some(&["connected", "disconnected"]),
            _ => None,
        }
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown stream kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for StreamKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StreamKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: Timestamp,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStream {
    pub kind: StreamKind,
    /// Seconds between samples; metadata derived from the data, not a constant.
    pub nominal_interval: u32,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: Timestamp,
    pub end: Timestamp,
    pub label: String,
}

impl Interval {
    pub fn new(start: Timestamp, end: Timestamp, label: impl Into<String>) -> Self {
        Self {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn duration_secs(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalStream {
    pub kind: StreamKind,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Stream {
    Samples(SampleStream),
    Intervals(IntervalStream),
}

impl Stream {
    pub fn kind(&self) -> StreamKind {
        match self {
            Stream::Samples(s) => s.kind,
            Stream::Intervals(s) => s.kind,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Stream::Samples(s) => s.samples.len(),
            Stream::Intervals(s) => s.intervals.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownPlace {
    pub label: String,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Routine {
    pub label: String,
    pub start: NaiveTime,
    pub end: NaiveTime,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
    #[serde(default)]
    pub known_places: Vec<KnownPlace>,
    #[serde(default)]
    pub declared_routines: Vec<Routine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Chatbot,
}

impl Role {
    pub fn display(self) -> &'static str {
        match self {
            Role::User => "User",
            Role::Chatbot => "Chatbot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub utterance: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckIn {
    pub start: Timestamp,
    pub end: Timestamp,
    pub turns: Vec<Turn>,
}

/// Self-reported ground truth. Never leaves the store towards a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmaEntry {
    pub t: Timestamp,
    pub text: String,
}

/// Person identifier, restricted to characters safe in file paths and URLs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PersonId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid person id `{0}`: use 1-64 characters from [A-Za-z0-9_-]")]
pub struct InvalidPersonId(pub String);

impl PersonId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidPersonId> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 64
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if ok {
            Ok(Self(id))
        } else {
            Err(InvalidPersonId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PersonId {
    type Error = InvalidPersonId;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        PersonId::new(value)
    }
}

impl From<PersonId> for String {
    fn from(value: PersonId) -> Self {
        value.0
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How a civil date maps onto instants for one person: zone plus the local
/// hour at which a "day" begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayFrame {
    pub zone: Tz,
    #[serde(default)]
    pub start_hour: u32,
}

impl DayFrame {
    pub fn new(zone: Tz, start_hour: u32) -> Self {
        Self {
            zone,
            start_hour: start_hour % 24,
        }
    }

    pub fn utc() -> Self {
        Self::new(Tz::UTC, 0)
    }

    /// Resolve a local wall-clock time. Times inside a DST gap move forward
    /// to the first valid instant.
    pub fn local(&self, date: NaiveDate, time: NaiveTime) -> Timestamp {
        let naive = date.and_time(time);
        let mut probe = naive;
        for _ in 0..4 {
            if let Some(t) = self.zone.from_local_datetime(&probe).earliest() {
                return t.fixed_offset();
            }
            probe += Duration::minutes(30);
        }
        self.zone.from_utc_datetime(&naive).fixed_offset()
    }

    /// `[start, end)` of the civil day `date`.
    pub fn day_bounds(&self, date: NaiveDate) -> (Timestamp, Timestamp) {
        let t = NaiveTime::from_hms_opt(self.start_hour, 0, 0).expect("hour < 24");
        let next = date.succ_opt().expect("date in range");
        (self.local(date, t), self.local(next, t))
    }

    /// Instant from epoch seconds, rendered in this frame's zone.
    pub fn at(&self, epoch_secs: i64) -> Timestamp {
        self.zone
            .timestamp_opt(epoch_secs, 0)
            .single()
            .expect("epoch seconds in chrono range")
            .fixed_offset()
    }

    /// Wall-clock `HH:MM` in this frame's zone.
    pub fn clock(&self, t: &Timestamp) -> String {
        t.with_timezone(&self.zone).format("%H:%M").to_string()
    }

    pub fn local_hour(&self, t: &Timestamp) -> u32 {
        t.with_timezone(&self.zone).hour()
    }

    /// `[start, end)` of pipeline hour `hour` (0..24) counted from the day start.
    /// The last hour absorbs DST drift so the 24 hours tile the day exactly.
    pub fn hour_bounds(&self, date: NaiveDate, hour: u32) -> (Timestamp, Timestamp) {
        let (ds, de) = self.day_bounds(date);
        let start = (ds + Duration::hours(hour as i64)).min(de);
        let end = if hour >= 23 {
            de
        } else {
            (ds + Duration::hours(hour as i64 + 1)).min(de)
        };
        (start, end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub person_id: PersonId,
    pub date: NaiveDate,
    pub frame: DayFrame,
    pub streams: Vec<Stream>,
    pub profile: UserProfile,
    #[serde(default)]
    pub checkins: Vec<CheckIn>,
    #[serde(default)]
    pub ema: Vec<EmaEntry>,
    /// Network names seen at ingest. Only used as a scrub dictionary.
    #[serde(default)]
    pub wifi_names: Vec<String>,
}

impl DayRecord {
    pub fn new(person_id: PersonId, date: NaiveDate, frame: DayFrame) -> Self {
        Self {
            person_id,
            date,
            frame,
            streams: Vec::new(),
            profile: UserProfile::default(),
            checkins: Vec::new(),
            ema: Vec::new(),
            wifi_names: Vec::new(),
        }
    }

    pub fn bounds(&self) -> (Timestamp, Timestamp) {
        self.frame.day_bounds(self.date)
    }

    pub fn stream(&self, kind: StreamKind) -> Option<&Stream> {
        self.streams.iter().find(|s| s.kind() == kind)
    }

    pub fn samples(&self, kind: StreamKind) -> Option<&SampleStream> {
        match self.stream(kind) {
            Some(Stream::Samples(s)) => Some(s),
            _ => None,
        }
    }

    pub fn intervals(&self, kind: StreamKind) -> Option<&IntervalStream> {
        match self.stream(kind) {
            Some(Stream::Intervals(s)) => Some(s),
            _ => None,
        }
    }

    pub fn kinds(&self) -> BTreeSet<StreamKind> {
        self.streams.iter().map(Stream::kind).collect()
    }

    /// Insert or replace the stream of the same kind, keeping kind order.
    pub fn set_stream(&mut self, stream: Stream) {
        let kind = stream.kind();
        self.streams.retain(|s| s.kind() != kind);
        self.streams.push(stream);
        self.streams.sort_by_key(Stream::kind);
    }
}

/// A closed time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        Self { start, end }
    }

    pub fn duration_secs(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }

    pub fn intersects(&self, other: &TimeWindow) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    /// Stream kind, or `profile` / `checkin` / `record` for non-stream issues.
    pub scope: String,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, scope: impl Into<String>, index: usize, message: impl Into<String>) {
        self.errors.push(Issue {
            scope: scope.into(),
            index,
            message: message.into(),
        });
    }

    fn warn(&mut self, scope: impl Into<String>, index: usize, message: impl Into<String>) {
        self.warnings.push(Issue {
            scope: scope.into(),
            index,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error   {}[{}]: {}", e.scope, e.index, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning {}[{}]: {}", w.scope, w.index, w.message)?;
        }
        Ok(())
    }
}

/// Physiological ranges outside which a sample is kept but flagged.
pub fn plausible_range(kind: StreamKind) -> Option<(f64, f64)> {
    match kind {
        StreamKind::HeartRate => Some((25.0, 250.0)),
        StreamKind::Respiration => Some((4.0, 60.0)),
        _ => None,
    }
}

/// Check every record invariant. Ordering, overlap and hard-range problems
/// are errors; implausible physiological values are warnings only.
pub fn validate_day_record(record: &DayRecord) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (ds, de) = record.bounds();
    let lo = ds - Duration::seconds(DAY_SLACK_SECS);
    let hi = de + Duration::seconds(DAY_SLACK_SECS);
    let in_day = |t: &Timestamp| *t >= lo && *t <= hi;

    let mut seen = BTreeSet::new();
    for (i, stream) in record.streams.iter().enumerate() {
        let kind = stream.kind();
        if !seen.insert(kind) {
            report.error("record", i, format!("more than one {kind} stream"));
        }
        let shape_ok = matches!(
            (stream, kind.shape()),
            (Stream::Samples(_), StreamShape::Samples) | (Stream::Intervals(_), StreamShape::Intervals)
        );
        if !shape_ok {
            report.error(kind.as_str(), 0, "stream shape does not match its kind");
            continue;
        }
        match stream {
            Stream::Samples(s) => validate_samples(s, &in_day, &mut report),
            Stream::Intervals(s) => validate_intervals(s, &in_day, &mut report),
        }
    }

    let mut labels = BTreeSet::new();
    for (i, place) in record.profile.known_places.iter().enumerate() {
        if place.label.trim().is_empty() {
            report.error("profile", i, "empty place label");
        }
        if !labels.insert(place.label.as_str()) {
            report.error("profile", i, format!("duplicate place label `{}`", place.label));
        }
        if !(-90.0..=90.0).contains(&place.latitude) || !(-180.0..=180.0).contains(&place.longitude) {
            report.error("profile", i, "place coordinates out of range");
        }
    }
    for (i, r) in record.profile.declared_routines.iter().enumerate() {
        if r.start == r.end {
            report.error("profile", i, format!("routine `{}` has an empty window", r.label));
        }
    }

    for (i, c) in record.checkins.iter().enumerate() {
        if c.start > c.end {
            report.error("checkin", i, "check-in ends before it starts");
        }
        if c.turns.is_empty() {
            report.error("checkin", i, "check-in has no turns");
        }
        for turn in &c.turns {
            if turn.utterance.trim().is_empty() {
                report.error("checkin", i, "empty utterance");
            }
            if turn.at < c.start || turn.at > c.end {
                report.error("checkin", i, "turn timestamp outside the check-in");
            }
        }
    }
    report
}

fn validate_samples(s: &SampleStream, in_day: &dyn Fn(&Timestamp) -> bool, report: &mut ValidationReport) {
    let scope = s.kind.as_str();
    if s.nominal_interval == 0 {
        report.error(scope, 0, "nominal interval must be positive");
    }
    for (i, sample) in s.samples.iter().enumerate() {
        if i > 0 && sample.t <= s.samples[i - 1].t {
            report.error(scope, i, "timestamps not strictly increasing");
        }
        if !in_day(&sample.t) {
            report.error(scope, i, "timestamp outside the civil day");
        }
        if !sample.v.is_finite() {
            report.error(scope, i, "non-finite value");
            continue;
        }
        match s.kind {
            StreamKind::Battery if !(0.0..=100.0).contains(&sample.v) => {
                report.error(scope, i, format!("battery {} outside 0-100", sample.v));
            }
            StreamKind::Steps if sample.v < 0.0 => {
                report.error(scope, i, "negative step count");
            }
            kind => {
                if let Some((lo, hi)) = plausible_range(kind) {
                    if sample.v < lo || sample.v > hi {
                        report.warn(scope, i, format!("value {} outside [{lo}, {hi}]", sample.v));
                    }
                }
            }
        }
    }
}

fn validate_intervals(s: &IntervalStream, in_day: &dyn Fn(&Timestamp) -> bool, report: &mut ValidationReport) {
    let scope = s.kind.as_str();
    let allowed = s.kind.allowed_labels();
    for (i, iv) in s.intervals.iter().enumerate() {
        if iv.start >= iv.end {
            report.error(scope, i, "interval start not before end");
        }
        if !in_day(&iv.start) || !in_day(&iv.end) {
            report.error(scope, i, "interval outside the civil day");
        }
        if iv.label.trim().is_empty() {
            report.error(scope, i, "empty label");
        } else if let Some(allowed) = allowed {
            if !allowed.contains(&iv.label.as_str()) {
                report.error(scope, i, format!("unknown label `{}`", iv.label));
            }
        }
        if i > 0 {
            let prev = &s.intervals[i - 1];
            if iv.start < prev.start {
                report.error(scope, i, "intervals not sorted by start");
            } else if iv.start < prev.end {
                report.error(scope, i, "overlap");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        DateTime::parse_from_rfc3339(s).unwrap()
    }

    fn day() -> DayRecord {
        DayRecord::new(
            PersonId::new("p1").unwrap(),
            NaiveDate::from_ymd_opt(2024, 11, 18).unwrap(),
            DayFrame::utc(),
        )
    }

    #[test]
    fn battery_at_upper_bound_is_clean() {
        let mut d = day();
        d.set_stream(Stream::Samples(SampleStream {
            kind: StreamKind::Battery,
            nominal_interval: 300,
            samples: vec![Sample { t: ts("2024-11-18T10:00:00Z"), v: 100.0 }],
        }));
        let r = validate_day_record(&d);
        assert!(r.errors.is_empty() && r.warnings.is_empty(), "{r}");
    }

    #[test]
    fn overlapping_activity_is_an_error() {
        let mut d = day();
        d.set_stream(Stream::Intervals(IntervalStream {
            kind: StreamKind::Activity,
            intervals: vec![
                Interval::new(ts("2024-11-18T09:00:00Z"), ts("2024-11-18T10:00:00Z"), "walking"),
                Interval::new(ts("2024-11-18T09:30:00Z"), ts("2024-11-18T10:30:00Z"), "stationary"),
            ],
        }));
        let r = validate_day_record(&d);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].scope, "activity");
        assert_eq!(r.errors[0].message, "overlap");
    }

    #[test]
    fn implausible_heart_rate_warns_but_accepts() {
        let mut d = day();
        d.set_stream(Stream::Samples(SampleStream {
            kind: StreamKind::HeartRate,
            nominal_interval: 60,
            samples: vec![
                Sample { t: ts("2024-11-18T10:00:00Z"), v: 72.0 },
                Sample { t: ts("2024-11-18T10:01:00Z"), v: 300.0 },
            ],
        }));
        let r = validate_day_record(&d);
        assert!(r.is_accepted());
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.warnings[0].index, 1);
    }

    #[test]
    fn duplicate_kinds_and_unknown_labels_are_rejected() {
        let mut d = day();
        let s = Stream::Intervals(IntervalStream {
            kind: StreamKind::PhoneLock,
            intervals: vec![Interval::new(
                ts("2024-11-18T09:00:00Z"),
                ts("2024-11-18T10:00:00Z"),
                "asleep",
            )],
        });
        d.streams = vec![s.clone(), s];
        let r = validate_day_record(&d);
        assert!(r.errors.iter().any(|e| e.message.contains("more than one")));
        assert!(r.errors.iter().any(|e| e.message.contains("unknown label")));
    }

    #[test]
    fn data_outside_day_is_an_error() {
        let mut d = day();
        d.set_stream(Stream::Samples(SampleStream {
            kind: StreamKind::Steps,
            nominal_interval: 60,
            samples: vec![Sample { t: ts("2024-11-19T02:00:00Z"), v: 3.0 }],
        }));
        assert!(!validate_day_record(&d).is_accepted());
    }

    #[test]
    fn day_bounds_follow_zone_and_start_hour() {
        let frame = DayFrame::new(chrono_tz::America::New_York, 12);
        let (s, e) = frame.day_bounds(NaiveDate::from_ymd_opt(2024, 11, 18).unwrap());
        assert_eq!(s, ts("2024-11-18T12:00:00-05:00"));
        assert_eq!(e, ts("2024-11-19T12:00:00-05:00"));
        // 2024-11-03 has 25 hours in New York.
        let frame = DayFrame::new(chrono_tz::America::New_York, 0);
        let date = NaiveDate::from_ymd_opt(2024, 11, 3).unwrap();
        let (s, e) = frame.day_bounds(date);
        assert_eq!((e - s).num_hours(), 25);
        assert_eq!(frame.hour_bounds(date, 23).1, e);
        assert_eq!(frame.hour_bounds(date, 23).0, s + Duration::hours(23));
    }

    #[test]
    fn person_ids_are_path_safe() {
        assert!(PersonId::new("p-01_a").is_ok());
        assert!(PersonId::new("../etc").is_err());
        assert!(PersonId::new("").is_err());
    }
}
