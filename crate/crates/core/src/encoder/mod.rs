//! Sensor streams and context rendered as chronological natural-language
//! narratives for model input.
//!
//! Discrete readings and intervals become one templated sentence each;
//! densely sampled series are grouped into fixed windows and rendered as
//! bracketed arrays. Every narrative leaving [`assemble_window`] has been
//! through [`scrub_identifiers`].

mod chunk;
mod scrub;
mod tokens;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::clip_stream;
use crate::model::{CheckIn, DayFrame, DayRecord, SampleStream, Stream, StreamKind, TimeWindow, Timestamp};

pub use chunk::{chunk, ChunkError};
pub use scrub::{
    contains_coordinates, find_coordinates, scrub_identifiers, scrub_text, ScrubCategory, ScrubReport,
};
pub use tokens::{estimate_tokens, CharsPerToken, TokenEstimator};

/// Where a segment's content came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentSource {
    Stream(StreamKind),
    UserCheckin,
}

impl SegmentSource {
    pub fn name(self) -> &'static str {
        match self {
            SegmentSource::Stream(k) => k.as_str(),
            SegmentSource::UserCheckin => "user_checkin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub window: TimeWindow,
    pub text: String,
    pub source: SegmentSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Narrative {
    pub segments: Vec<Segment>,
    pub token_estimate: usize,
}

impl Narrative {
    /// Build from segments, ordering by window start and then source name.
    pub fn new(mut segments: Vec<Segment>) -> Self {
        segments.sort_by(|a, b| {
            a.window
                .start
                .cmp(&b.window.start)
                .then_with(|| a.source.name().cmp(b.source.name()))
        });
        Self::from_ordered(segments)
    }

    /// Keep the given order; only recompute the token estimate.
    pub fn from_ordered(segments: Vec<Segment>) -> Self {
        let token_estimate = segments.iter().map(|s| estimate_tokens(&s.text)).sum();
        Self {
            segments,
            token_estimate,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment texts joined by newlines.
    pub fn render(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Kinds rendered as grouped arrays; the rest get one sentence per datum.
pub fn is_series(kind: StreamKind) -> bool {
    matches!(kind, StreamKind::HeartRate | StreamKind::Respiration | StreamKind::Steps)
}

pub fn display_name(kind: StreamKind) -> &'static str {
    match kind {
        StreamKind::HeartRate => "heart rate",
        StreamKind::Respiration => "respiration",
        StreamKind::Steps => "step count",
        StreamKind::Battery => "battery level",
        StreamKind::Activity => "activity",
        StreamKind::PhoneLock => "phone lock state",
        StreamKind::Wifi => "Wi-Fi",
        StreamKind::Location => "location",
        StreamKind::Call => "phone calls",
        StreamKind::Chatbot => "chatbot",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    /// Window length for grouping series samples.
    pub group_minutes: u32,
    /// Overrides keyed by stream kind name, or `series` for array sentences.
    pub templates: BTreeMap<String, String>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            group_minutes: 10,
            templates: BTreeMap::new(),
        }
    }
}

const SERIES_TEMPLATE: &str = "The person's {kind} from {start} to {end} ({interval}-second interval) is [{values}].";

fn default_template(kind: StreamKind) -> &'static str {
    match kind {
        StreamKind::Battery => "The battery level of the person's phone is {value} at {time}.",
        StreamKind::PhoneLock => "The person's phone is {label} from {start} to {end}.",
        StreamKind::Wifi => "The person's phone Wi-Fi is {label} from {start} to {end}.",
        StreamKind::Activity => "The person is {label} from {start} to {end}.",
        StreamKind::Location => "The person is at {label} from {start} to {end}.",
        StreamKind::Call => "The person is on a phone call ({label}) from {start} to {end}.",
        StreamKind::Chatbot => "The person talks with the chatbot ({label}) from {start} to {end}.",
        StreamKind::HeartRate | StreamKind::Respiration | StreamKind::Steps => {
            "The person's {kind} is {value} at {time}."
        }
    }
}

impl EncoderConfig {
    fn template(&self, key: &str, fallback: &'static str) -> &str {
        self.templates.get(key).map(String::as_str).unwrap_or(fallback)
    }
}

fn fill(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in fields {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// Shortest round-trip rendering, so values appear verbatim.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

/// One sentence per sample or interval.
pub fn encode_discrete(stream: &Stream, frame: &DayFrame, cfg: &EncoderConfig) -> Narrative {
    let kind = stream.kind();
    let template = cfg.template(kind.as_str(), default_template(kind));
    let source = SegmentSource::Stream(kind);
    let segments = match stream {
        Stream::Samples(s) => s
            .samples
            .iter()
            .map(|x| Segment {
                window: TimeWindow::new(x.t, x.t),
                text: fill(
                    template,
                    &[
                        ("kind", display_name(kind)),
                        ("value", &format_value(x.v)),
                        ("time", &frame.clock(&x.t)),
                    ],
                ),
                source,
            })
            .collect(),
        Stream::Intervals(s) => s
            .intervals
            .iter()
            .map(|iv| Segment {
                window: TimeWindow::new(iv.start, iv.end),
                text: fill(
                    template,
                    &[
                        ("kind", display_name(kind)),
                        ("label", &iv.label),
                        ("start", &frame.clock(&iv.start)),
                        ("end", &frame.clock(&iv.end)),
                    ],
                ),
                source,
            })
            .collect(),
    };
    Narrative::new(segments)
}

fn local_secs(frame: &DayFrame, t: &Timestamp) -> i64 {
    let local = t.with_timezone(&frame.zone);
    t.timestamp() + i64::from(chrono::Offset::fix(local.offset()).local_minus_utc())
}

/// Samples grouped into `group_minutes` windows aligned to the local clock,
/// one array sentence per window.
pub fn encode_series(stream: &SampleStream, frame: &DayFrame, cfg: &EncoderConfig) -> Narrative {
    let group = i64::from(cfg.group_minutes.max(1)) * 60;
    let template = cfg.template("series", SERIES_TEMPLATE);
    let mut segments = Vec::new();
    let mut i = 0;
    let samples = &stream.samples;
    while i < samples.len() {
        let bucket = local_secs(frame, &samples[i].t).div_euclid(group);
        let mut j = i;
        while j + 1 < samples.len() && local_secs(frame, &samples[j + 1].t).div_euclid(group) == bucket {
            j += 1;
        }
        let values = samples[i..=j]
            .iter()
            .map(|x| format_value(x.v))
            .collect::<Vec<_>>()
            .join(", ");
        let (first, last) = (&samples[i], &samples[j]);
        segments.push(Segment {
            window: TimeWindow::new(first.t, last.t),
            text: fill(
                template,
                &[
                    ("kind", display_name(stream.kind)),
                    ("start", &frame.clock(&first.t)),
                    ("end", &frame.clock(&last.t)),
                    ("interval", &stream.nominal_interval.to_string()),
                    ("values", &values),
                ],
            ),
            source: SegmentSource::Stream(stream.kind),
        });
        i = j + 1;
    }
    Narrative::new(segments)
}

/// `From <start> to <end>` followed by one `<Role>:<utterance>` line per turn.
pub fn encode_checkin(checkin: &CheckIn, frame: &DayFrame) -> Narrative {
    let mut text = format!("From {} to {}", frame.clock(&checkin.start), frame.clock(&checkin.end));
    for turn in &checkin.turns {
        text.push('\n');
        text.push_str(turn.role.display());
        text.push(':');
        text.push_str(&turn.utterance.replace(['\n', '\r'], " "));
    }
    Narrative::new(vec![Segment {
        window: TimeWindow::new(checkin.start, checkin.end),
        text,
        source: SegmentSource::UserCheckin,
    }])
}

/// Dispatch on kind: series kinds as arrays, everything else as sentences.
pub fn encode_stream(stream: &Stream, frame: &DayFrame, cfg: &EncoderConfig) -> Narrative {
    match stream {
        Stream::Samples(s) if is_series(s.kind) => encode_series(s, frame, cfg),
        other => encode_discrete(other, frame, cfg),
    }
}

/// All streams clipped to `[start, end)`, encoded, merged chronologically and
/// scrubbed.
pub fn assemble_window(
    day: &DayRecord,
    start: Timestamp,
    end: Timestamp,
    cfg: &EncoderConfig,
) -> (Narrative, ScrubReport) {
    let mut segments = Vec::new();
    for stream in &day.streams {
        let clipped = clip_stream(stream, start, end);
        if clipped.is_empty() {
            continue;
        }
        segments.extend(encode_stream(&clipped, &day.frame, cfg).segments);
    }
    scrub_identifiers(&Narrative::new(segments), day)
}

/// Narrative for pipeline hour `hour` (0..24) of the day.
pub fn assemble_hour(day: &DayRecord, hour: u32, cfg: &EncoderConfig) -> Narrative {
    assert!(hour < 24, "hour out of range: {hour}");
    let (start, end) = day.frame.hour_bounds(day.date, hour);
    assemble_window(day, start, end, cfg).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, IntervalStream, PersonId, Role, Sample, Turn};
    use chrono::{DateTime, Duration, NaiveDate};

    fn ts(s: &str) -> Timestamp {
        DateTime::parse_from_rfc3339(&format!("2024-11-18T{s}Z")).unwrap()
    }

    #[test]
    fn battery_sentence() {
        let s = Stream::Samples(SampleStream {
            kind: StreamKind::Battery,
            nominal_interval: 300,
            samples: vec![Sample { t: ts("10:05:00"), v: 72.0 }],
        });
        let n = encode_discrete(&s, &DayFrame::utc(), &EncoderConfig::default());
        assert_eq!(n.segments.len(), 1);
        assert_eq!(n.segments[0].text, "The battery level of the person's phone is 72 at 10:05.");
    }

    #[test]
    fn empty_stream_empty_narrative() {
        let s = Stream::Intervals(IntervalStream {
            kind: StreamKind::PhoneLock,
            intervals: vec![],
        });
        let n = encode_discrete(&s, &DayFrame::utc(), &EncoderConfig::default());
        assert!(n.is_empty());
        assert_eq!(n.token_estimate, 0);
    }

    #[test]
    fn six_respiration_values_one_segment() {
        let values = [14.0, 15.5, 16.0, 15.0, 14.5, 15.0];
        let s = SampleStream {
            kind: StreamKind::Respiration,
            nominal_interval: 10,
            samples: values
                .iter()
                .enumerate()
                .map(|(i, v)| Sample {
                    t: ts("10:00:00") + Duration::seconds(10 * i as i64),
                    v: *v,
                })
                .collect(),
        };
        let n = encode_series(&s, &DayFrame::utc(), &EncoderConfig::default());
        assert_eq!(n.segments.len(), 1);
        assert_eq!(
            n.segments[0].text,
            "The person's respiration from 10:00 to 10:00 (10-second interval) is [14, 15.5, 16, 15, 14.5, 15]."
        );
    }

    #[test]
    fn checkin_lines() {
        let c = CheckIn {
            start: ts("09:10:00"),
            end: ts("09:15:00"),
            turns: vec![
                Turn {
                    role: Role::Chatbot,
                    utterance: "How was your morning?".into(),
                    at: ts("09:10:00"),
                },
                Turn {
                    role: Role::User,
                    utterance: "Went to church.".into(),
                    at: ts("09:11:00"),
                },
            ],
        };
        let n = encode_checkin(&c, &DayFrame::utc());
        assert_eq!(
            n.segments[0].text,
            "From 09:10 to 09:15\nChatbot:How was your morning?\nUser:Went to church."
        );
    }

    #[test]
    fn hour_ties_break_by_kind_name() {
        let mut d = DayRecord::new(
            PersonId::new("p1").unwrap(),
            NaiveDate::from_ymd_opt(2024, 11, 18).unwrap(),
            DayFrame::utc(),
        );
        d.set_stream(Stream::Samples(SampleStream {
            kind: StreamKind::Steps,
            nominal_interval: 60,
            samples: vec![Sample { t: ts("10:00:00"), v: 12.0 }],
        }));
        d.set_stream(Stream::Samples(SampleStream {
            kind: StreamKind::HeartRate,
            nominal_interval: 60,
            samples: vec![
                Sample { t: ts("10:00:00"), v: 70.0 },
                Sample { t: ts("10:20:00"), v: 71.0 },
            ],
        }));
        d.set_stream(Stream::Intervals(IntervalStream {
            kind: StreamKind::Activity,
            intervals: vec![Interval::new(ts("09:30:00"), ts("10:30:00"), "walking")],
        }));
        let n = assemble_hour(&d, 10, &EncoderConfig::default());
        let order: Vec<&str> = n.segments.iter().map(|s| s.source.name()).collect();
        assert_eq!(order, vec!["activity", "heart_rate", "steps", "heart_rate"]);
        assert!(n.segments[0].text.contains("from 10:00 to 10:30"));
    }

    #[test]
    fn custom_template_applies() {
        let mut cfg = EncoderConfig::default();
        cfg.templates
            .insert("battery".into(), "Battery {value}% @ {time}".into());
        let s = Stream::Samples(SampleStream {
            kind: StreamKind::Battery,
            nominal_interval: 300,
            samples: vec![Sample { t: ts("10:05:00"), v: 50.0 }],
        });
        assert_eq!(
            encode_discrete(&s, &DayFrame::utc(), &cfg).segments[0].text,
            "Battery 50% @ 10:05"
        );
    }
}
