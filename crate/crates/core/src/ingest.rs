//! Raw stream files to validated [`DayRecord`]s.
//!
//! On-disk layout, one directory per person-day:
//!
//! ```text
//! <root>/<person>/profile.json
//! <root>/<person>/<YYYY-MM-DD>/<kind>.jsonl   {"t": "<ISO-8601>", "v": 72}            sample kinds
//!                                             {"t": "...", "end": "...", "label": "walking"} interval kinds
//! <root>/<person>/<YYYY-MM-DD>/gps.jsonl      {"t": "...", "lat": 42.36, "lon": -71.05, "acc": 12}
//! <root>/<person>/<YYYY-MM-DD>/checkins.jsonl one CheckIn object per line
//! <root>/<person>/<YYYY-MM-DD>/ema.jsonl      {"t": "...", "text": "..."}
//! ```
//!
//! Wi-Fi lines may carry an `"ssid"` field; it is moved out of the stream into
//! [`DayRecord::wifi_names`] and only used to scrub free text.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, SubsecRound};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{
    validate_day_record, CheckIn, DayFrame, DayRecord, EmaEntry, Interval, IntervalStream, PersonId,
    Sample, SampleStream, Stream, StreamKind, StreamShape, Timestamp, UserProfile, ValidationReport,
};

pub const DEFAULT_RADIUS_M: f64 = 100.0;
const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("unknown stream kind `{0}`")]
    UnknownKind(String),
    #[error("{0}: file has no records")]
    EmptyFile(String),
    #[error("{kind}: {rejected} of {read} lines rejected")]
    MalformedFile {
        kind: String,
        read: usize,
        rejected: usize,
    },
    #[error("two {0} streams for one day")]
    ConflictingStreams(StreamKind),
    #[error("assembled record failed validation:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    BadDocument { path: PathBuf, message: String },
}

/// One raw file before typing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawStreamFile {
    pub kind: String,
    pub payload: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseSummary {
    pub lines_read: usize,
    pub rejected: Vec<(usize, String)>,
}

impl ParseSummary {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }

    fn check(&self, kind: &str) -> Result<(), IngestError> {
        if self.lines_read == 0 {
            return Err(IngestError::EmptyFile(kind.to_string()));
        }
        if self.rejected.len() * 2 > self.lines_read {
            return Err(IngestError::MalformedFile {
                kind: kind.to_string(),
                read: self.lines_read,
                rejected: self.rejected.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedStream {
    pub stream: Stream,
    pub summary: ParseSummary,
    pub wifi_names: Vec<String>,
}

fn parse_ts(v: Option<&Value>) -> Result<Timestamp, String> {
    let s = v.and_then(Value::as_str).ok_or("missing timestamp")?;
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.trunc_subsecs(0))
        .map_err(|e| format!("bad timestamp `{s}`: {e}"))
}

fn lines(payload: &str) -> impl Iterator<Item = (usize, &str)> {
    payload
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parse a line-delimited stream file into a typed stream, sorted by time.
pub fn parse_stream_file(file: &RawStreamFile) -> Result<ParsedStream, IngestError> {
    let kind: StreamKind = file
        .kind
        .parse()
        .map_err(|_| IngestError::UnknownKind(file.kind.clone()))?;
    let mut summary = ParseSummary::default();
    let mut wifi_names = BTreeSet::new();

    let stream = match kind.shape() {
        StreamShape::Samples => {
            let mut samples = Vec::new();
            for (no, line) in lines(&file.payload) {
                summary.lines_read += 1;
                match parse_sample_line(line) {
                    Ok(s) => samples.push(s),
                    Err(e) => summary.rejected.push((no, e)),
                }
            }
            samples.sort_by(|a, b| a.t.cmp(&b.t).then(a.v.total_cmp(&b.v)));
            Stream::Samples(SampleStream {
                kind,
                nominal_interval: nominal_interval(&samples),
                samples,
            })
        }
        StreamShape::Intervals => {
            let mut intervals = Vec::new();
            for (no, line) in lines(&file.payload) {
                summary.lines_read += 1;
                match parse_interval_line(line) {
                    Ok((iv, ssid)) => {
                        if let Some(ssid) = ssid {
                            wifi_names.insert(ssid);
                        }
                        intervals.push(iv);
                    }
                    Err(e) => summary.rejected.push((no, e)),
                }
            }
            intervals.sort_by(|a, b| {
                a.start
                    .cmp(&b.start)
                    .then(a.end.cmp(&b.end))
                    .then_with(|| a.label.cmp(&b.label))
            });
            Stream::Intervals(IntervalStream { kind, intervals })
        }
    };
    summary.check(&file.kind)?;
    Ok(ParsedStream {
        stream,
        summary,
        wifi_names: wifi_names.into_iter().collect(),
    })
}

fn parse_sample_line(line: &str) -> Result<Sample, String> {
    let obj: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let t = parse_ts(obj.get("t"))?;
    let v = obj
        .get("v")
        .and_then(Value::as_f64)
        .ok_or("missing numeric `v`")?;
    Ok(Sample { t, v })
}

fn parse_interval_line(line: &str) -> Result<(Interval, Option<String>), String> {
    let obj: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let start = parse_ts(obj.get("t"))?;
    let end = parse_ts(obj.get("end"))?;
    if end <= start {
        return Err("interval ends before it starts".into());
    }
    let label = obj
        .get("label")
        .and_then(Value::as_str)
        .filter(|l| !l.trim().is_empty())
        .ok_or("missing `label`")?;
    let ssid = obj
        .get("ssid")
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .map(str::to_string);
    Ok((Interval::new(start, end, label), ssid))
}

/// Median spacing of consecutive samples, in seconds.
fn nominal_interval(samples: &[Sample]) -> u32 {
    let mut gaps: Vec<i64> = samples
        .windows(2)
        .map(|w| (w[1].t - w[0].t).num_seconds())
        .filter(|g| *g > 0)
        .collect();
    if gaps.is_empty() {
        return 60;
    }
    gaps.sort_unstable();
    gaps[gaps.len() / 2].clamp(1, u32::MAX as i64) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub t: Timestamp,
    pub lat: f64,
    pub lon: f64,
    pub acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GpsTrace {
    pub points: Vec<GpsPoint>,
}

pub fn parse_gps(payload: &str) -> Result<(GpsTrace, ParseSummary), IngestError> {
    let mut summary = ParseSummary::default();
    let mut points = Vec::new();
    for (no, line) in lines(payload) {
        summary.lines_read += 1;
        match parse_gps_line(line) {
            Ok(p) => points.push(p),
            Err(e) => summary.rejected.push((no, e)),
        }
    }
    summary.check("gps")?;
    points.sort_by_key(|p| p.t);
    points.dedup_by(|b, a| a.t == b.t);
    Ok((GpsTrace { points }, summary))
}

fn parse_gps_line(line: &str) -> Result<GpsPoint, String> {
    let obj: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let t = parse_ts(obj.get("t"))?;
    let num = |k: &str| obj.get(k).and_then(Value::as_f64);
    let lat = num("lat").ok_or("missing `lat`")?;
    let lon = num("lon").ok_or("missing `lon`")?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err("coordinates out of range".into());
    }
    Ok(GpsPoint {
        t,
        lat,
        lon,
        acc: num("acc").unwrap_or(0.0),
    })
}

/// Great-circle distance in meters.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Nearest known place within `radius_m`; exact distance ties go to the
/// lexicographically smaller label.
pub fn nearest_place(profile: &UserProfile, lat: f64, lon: f64, radius_m: f64) -> Option<&str> {
    profile
        .known_places
        .iter()
        .map(|p| (haversine_m(lat, lon, p.latitude, p.longitude), p.label.as_str()))
        .filter(|(d, _)| *d <= radius_m)
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, l)| l)
}

/// Turn a GPS trace into place-labeled intervals.
///
/// A run of consecutive points at the same place lasts from its first point
/// until the next point that is elsewhere (or the final point of the trace).
/// Points near no known place leave the time unlabeled.
pub fn label_locations(trace: &GpsTrace, profile: &UserProfile, radius_m: f64) -> IntervalStream {
    let labels: Vec<Option<&str>> = trace
        .points
        .iter()
        .map(|p| nearest_place(profile, p.lat, p.lon, radius_m))
        .collect();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let mut j = i;
        while j + 1 < labels.len() && labels[j + 1] == labels[i] {
            j += 1;
        }
        if let Some(label) = labels[i] {
            let start = trace.points[i].t;
            let end = trace.points.get(j + 1).unwrap_or(&trace.points[j]).t;
            if end > start {
                intervals.push(Interval::new(start, end, label));
            }
        }
        i = j + 1;
    }
    IntervalStream {
        kind: StreamKind::Location,
        intervals,
    }
}

/// Restrict a stream to `[start, end)`: samples outside are dropped,
/// intervals are cut at the bounds.
pub fn clip_stream(stream: &Stream, start: Timestamp, end: Timestamp) -> Stream {
    match stream {
        Stream::Samples(s) => Stream::Samples(SampleStream {
            kind: s.kind,
            nominal_interval: s.nominal_interval,
            samples: s
                .samples
                .iter()
                .filter(|x| x.t >= start && x.t < end)
                .cloned()
                .collect(),
        }),
        Stream::Intervals(s) => Stream::Intervals(IntervalStream {
            kind: s.kind,
            intervals: clip_intervals(&s.intervals, start, end),
        }),
    }
}

pub fn clip_intervals(intervals: &[Interval], start: Timestamp, end: Timestamp) -> Vec<Interval> {
    intervals
        .iter()
        .filter_map(|iv| {
            let s = iv.start.max(start);
            let e = iv.end.min(end);
            (s < e).then(|| Interval::new(s, e, iv.label.clone()))
        })
        .collect()
}

/// Everything needed to build one day.
#[derive(Debug, Clone)]
pub struct DayInputs {
    pub person: PersonId,
    pub date: NaiveDate,
    pub frame: DayFrame,
    pub streams: Vec<Stream>,
    pub profile: UserProfile,
    pub checkins: Vec<CheckIn>,
    pub ema: Vec<EmaEntry>,
    pub wifi_names: Vec<String>,
}

/// Clip streams to the civil day and build a validated record.
pub fn assemble_day_record(inputs: DayInputs) -> Result<DayRecord, IngestError> {
    let mut seen = BTreeSet::new();
    for s in &inputs.streams {
        if !seen.insert(s.kind()) {
            return Err(IngestError::ConflictingStreams(s.kind()));
        }
    }
    let mut record = DayRecord::new(inputs.person, inputs.date, inputs.frame);
    let (ds, de) = record.bounds();
    for s in &inputs.streams {
        let clipped = clip_stream(s, ds, de);
        if !clipped.is_empty() {
            record.set_stream(clipped);
        }
    }
    record.profile = inputs.profile;
    record.checkins = inputs
        .checkins
        .into_iter()
        .filter(|c| c.start < de && c.end >= ds)
        .collect();
    record.ema = inputs
        .ema
        .into_iter()
        .filter(|e| e.t >= ds && e.t < de)
        .collect();
    let mut names = inputs.wifi_names;
    names.sort();
    names.dedup();
    record.wifi_names = names;

    let report = validate_day_record(&record);
    if !report.is_accepted() {
        return Err(IngestError::ValidationFailed(report));
    }
    Ok(record)
}

/// Result of loading a day from the raw directory layout.
#[derive(Debug, Clone)]
pub struct LoadedDay {
    pub record: DayRecord,
    pub summaries: BTreeMap<String, ParseSummary>,
}

fn read(path: &Path) -> Result<Option<String>, IngestError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(IngestError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn json_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IngestError> {
    let Some(text) = read(path)? else {
        return Ok(Vec::new());
    };
    lines(&text)
        .map(|(no, l)| {
            serde_json::from_str(l).map_err(|e| IngestError::BadDocument {
                path: path.to_path_buf(),
                message: format!("line {no}: {e}"),
            })
        })
        .collect()
}

/// Load `<root>/<person>/<date>/`, also reading the neighbouring days so
/// intervals straddling a day boundary are attributed to both sides.
pub fn load_day(
    root: &Path,
    person: &PersonId,
    date: NaiveDate,
    frame: DayFrame,
    radius_m: f64,
) -> Result<LoadedDay, IngestError> {
    let person_dir = root.join(person.as_str());
    let profile_path = person_dir.join("profile.json");
    let profile: UserProfile = match read(&profile_path)? {
        Some(text) => serde_json::from_str(&text).map_err(|e| IngestError::BadDocument {
            path: profile_path.clone(),
            message: e.to_string(),
        })?,
        None => UserProfile::default(),
    };

    let neighbours = [date.pred_opt(), Some(date), date.succ_opt()];
    let mut merged: BTreeMap<StreamKind, Vec<Stream>> = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    let mut wifi_names = Vec::new();
    let mut checkins = Vec::new();
    let mut ema = Vec::new();

    for d in neighbours.into_iter().flatten() {
        let dir = person_dir.join(d.to_string());
        if !dir.is_dir() {
            continue;
        }
        let own = d == date;
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|source| IngestError::Io {
                path: dir.clone(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        entries.sort();
        let mut gps_stream = None;
        let mut day_kinds = BTreeSet::new();
        for path in entries {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
            match stem.as_str() {
                "checkins" => {
                    checkins.extend(json_lines::<CheckIn>(&path)?);
                    continue;
                }
                "ema" => {
                    ema.extend(json_lines::<EmaEntry>(&path)?);
                    continue;
                }
                "gps" => {
                    let text = read(&path)?.unwrap_or_default();
                    let (trace, summary) = parse_gps(&text)?;
                    if own {
                        summaries.insert("gps".to_string(), summary);
                    }
                    gps_stream = Some(Stream::Intervals(label_locations(&trace, &profile, radius_m)));
                    continue;
                }
                _ => {}
            }
            let text = read(&path)?.unwrap_or_default();
            let parsed = parse_stream_file(&RawStreamFile {
                kind: stem.clone(),
                payload: text,
            })?;
            let kind = parsed.stream.kind();
            if !day_kinds.insert(kind) {
                return Err(IngestError::ConflictingStreams(kind));
            }
            if own {
                summaries.insert(stem, parsed.summary);
            }
            wifi_names.extend(parsed.wifi_names);
            merged.entry(kind).or_default().push(parsed.stream);
        }
        if let Some(loc) = gps_stream {
            if !day_kinds.insert(StreamKind::Location) {
                return Err(IngestError::ConflictingStreams(StreamKind::Location));
            }
            merged.entry(StreamKind::Location).or_default().push(loc);
        }
    }

    let streams = merged.into_values().map(concat_streams).collect();
    checkins.sort_by_key(|c| c.start);
    checkins.dedup();
    ema.sort_by_key(|e| e.t);
    ema.dedup();
    let record = assemble_day_record(DayInputs {
        person: person.clone(),
        date,
        frame,
        streams,
        profile,
        checkins,
        ema,
        wifi_names,
    })?;
    Ok(LoadedDay { record, summaries })
}

/// Join per-day pieces of one kind, dropping exact duplicates.
fn concat_streams(parts: Vec<Stream>) -> Stream {
    let mut iter = parts.into_iter();
    let mut first = iter.next().expect("at least one part");
    for part in iter {
        match (&mut first, part) {
            (Stream::Samples(a), Stream::Samples(b)) => a.samples.extend(b.samples),
            (Stream::Intervals(a), Stream::Intervals(b)) => a.intervals.extend(b.intervals),
            _ => unreachable!("kind determines shape"),
        }
    }
    match &mut first {
        Stream::Samples(s) => {
            s.samples.sort_by(|a, b| a.t.cmp(&b.t).then(a.v.total_cmp(&b.v)));
            s.samples.dedup();
            s.nominal_interval = nominal_interval(&s.samples);
        }
        Stream::Intervals(s) => {
            s.intervals.sort_by(|a, b| a.start.cmp(&b.start).then(a.end.cmp(&b.end)));
            s.intervals.dedup();
        }
    }
    first
}

/// Write a record back out in the raw layout. Location is written as
/// already-labeled intervals since records carry no coordinates. Network
/// names beyond the number of connected Wi-Fi rows are not written.
pub fn write_raw_day(record: &DayRecord, root: &Path) -> std::io::Result<()> {
    let person_dir = root.join(record.person_id.as_str());
    let dir = person_dir.join(record.date.to_string());
    fs::create_dir_all(&dir)?;
    fs::write(
        person_dir.join("profile.json"),
        serde_json::to_string_pretty(&record.profile).expect("profile serializes"),
    )?;
    // Empty streams are skipped: ingest rejects empty files.
    for stream in record.streams.iter().filter(|s| !s.is_empty()) {
        let mut out = String::new();
        match stream {
            Stream::Samples(s) => {
                for x in &s.samples {
                    out.push_str(&serde_json::json!({ "t": x.t.to_rfc3339(), "v": x.v }).to_string());
                    out.push('\n');
                }
            }
            Stream::Intervals(s) => {
                // Network names ride on connected Wi-Fi rows, one per row.
                let mut names = record.wifi_names.iter();
                for iv in &s.intervals {
                    let mut line = serde_json::json!({
                        "t": iv.start.to_rfc3339(),
                        "end": iv.end.to_rfc3339(),
                        "label": iv.label,
                    });
                    if s.kind == StreamKind::Wifi && iv.label == "connected" {
                        if let Some(n) = names.next() {
                            line["ssid"] = serde_json::Value::String(n.clone());
                        }
                    }
                    out.push_str(&line.to_string());
                    out.push('\n');
                }
            }
        }
        fs::write(dir.join(format!("{}.jsonl", stream.kind())), out)?;
    }
    let to_lines = |items: Vec<String>| items.into_iter().map(|l| l + "\n").collect::<String>();
    if !record.checkins.is_empty() {
        let items = record
            .checkins
            .iter()
            .map(|c| serde_json::to_string(c).expect("checkin serializes"))
            .collect();
        fs::write(dir.join("checkins.jsonl"), to_lines(items))?;
    }
    if !record.ema.is_empty() {
        let items = record
            .ema
            .iter()
            .map(|e| serde_json::to_string(e).expect("ema serializes"))
            .collect();
        fs::write(dir.join("ema.jsonl"), to_lines(items))?;
    }
    Ok(())
}
