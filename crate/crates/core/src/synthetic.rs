//! Seeded generator of valid, plausibly shaped day records for tests,
//! demos and the evaluation harness. Same seed, same day.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    CheckIn, DayFrame, DayRecord, EmaEntry, Interval, IntervalStream, KnownPlace, PersonId, Role, Routine, Sample,
    SampleStream, Stream, StreamKind, Turn,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Chance that each stream is present at all.
    pub stream_presence: f64,
    /// Chance of starting a dropout at any sample.
    pub dropout_rate: f64,
    pub max_checkins: usize,
    /// Plant coordinates, network names and EMA text inside check-in
    /// utterances, to exercise the scrubber.
    pub plant_identifiers: bool,
    pub respiration_interval: u32,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            stream_presence: 0.9,
            dropout_rate: 0.004,
            max_checkins: 3,
            plant_identifiers: false,
            respiration_interval: 30,
        }
    }
}

pub const PLACES: [(&str, f64, f64); 4] = [
    ("home", 42.360_1, -71.058_9),
    ("work", 42.373_6, -71.109_7),
    ("church", 42.350_2, -71.071_1),
    ("gym", 42.365_5, -71.103_4),
];

pub const WIFI_NAMES: [&str; 2] = ["HomeNet-42", "CampusGuest"];

const EMA_TEXTS: [&str; 4] = [
    "feeling stressed about the exam",
    "slept badly and feel tired",
    "had a calm afternoon with family",
    "anxious before the meeting",
];

const CHAT: [(&str, &str); 4] = [
    ("How has your day been so far?", "Pretty busy, lots of errands."),
    ("Did you get some rest last night?", "Not really, I woke up a few times."),
    ("What are you up to right now?", "Just got back from a walk."),
    ("How are you feeling?", "A bit tired but okay."),
];

pub fn profile() -> crate::model::UserProfile {
    crate::model::UserProfile {
        demographics: BTreeMap::from([
            ("age".to_string(), "34".to_string()),
            ("occupation".to_string(), "teacher".to_string()),
        ]),
        known_places: PLACES
            .iter()
            .map(|(l, lat, lon)| KnownPlace {
                label: (*l).into(),
                latitude: *lat,
                longitude: *lon,
            })
            .collect(),
        declared_routines: vec![Routine {
            label: "sleep".into(),
            start: NaiveTime::from_hms_opt(23, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(7, 0, 0).unwrap(),
        }],
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    frame: &'a DayFrame,
    ds: i64,
    de: i64,
    opts: &'a SynthOptions,
}

impl Gen<'_> {
    fn ts(&self, secs: i64) -> crate::model::Timestamp {
        self.frame.at(secs)
    }

    fn series(&mut self, kind: StreamKind, step: u32, mut value: impl FnMut(&mut ChaCha8Rng, i64) -> f64) -> SampleStream {
        let mut samples = Vec::new();
        let mut off_until = self.ds;
        let mut t = self.ds + self.rng.gen_range(0..i64::from(step));
        while t < self.de {
            if t >= off_until && self.rng.gen_bool(self.opts.dropout_rate) {
                off_until = t + self.rng.gen_range(5..90) * 60;
            }
            if t >= off_until {
                let v = value(&mut self.rng, t - self.ds);
                samples.push(Sample { t: self.ts(t), v });
            }
            t += i64::from(step);
        }
        SampleStream {
            kind,
            nominal_interval: step,
            samples,
        }
    }

    /// Back-to-back intervals with occasional holes.
    fn intervals(&mut self, kind: StreamKind, labels: &[&str], min_len: i64, max_len: i64, hole: f64) -> IntervalStream {
        let mut out = Vec::new();
        let mut t = self.ds;
        while t < self.de {
            let len = self.rng.gen_range(min_len..=max_len) * 60;
            let end = (t + len).min(self.de);
            if !self.rng.gen_bool(hole) {
                let label = *labels.choose(&mut self.rng).unwrap();
                out.push(Interval::new(self.ts(t), self.ts(end), label));
            }
            t = end;
        }
        IntervalStream { kind, intervals: out }
    }

    /// Short, sparse intervals.
    fn events(&mut self, kind: StreamKind, labels: &[&str], max_n: usize) -> IntervalStream {
        let n = self.rng.gen_range(0..=max_n);
        let mut starts: Vec<i64> = (0..n).map(|_| self.rng.gen_range(self.ds..self.de - 60)).collect();
        starts.sort_unstable();
        let mut out = Vec::new();
        let mut last_end = self.ds;
        for s in starts {
            if s < last_end {
                continue;
            }
            let end = (s + self.rng.gen_range(1..30) * 60).min(self.de);
            out.push(Interval::new(
                self.ts(s),
                self.ts(end),
                *labels.choose(&mut self.rng).unwrap(),
            ));
            last_end = end;
        }
        IntervalStream { kind, intervals: out }
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// A full synthetic day with the default options.
pub fn synthetic_day(seed: u64, person: &PersonId, date: NaiveDate, frame: &DayFrame) -> DayRecord {
    synthetic_day_with(seed, person, date, frame, &SynthOptions::default())
}

pub fn synthetic_day_with(
    seed: u64,
    person: &PersonId,
    date: NaiveDate,
    frame: &DayFrame,
    opts: &SynthOptions,
) -> DayRecord {
    let mut day = DayRecord::new(person.clone(), date, *frame);
    let (ds, de) = day.bounds();
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        frame,
        ds: ds.timestamp(),
        de: de.timestamp(),
        opts,
    };
    day.profile = profile();
    day.wifi_names = WIFI_NAMES.iter().map(|s| s.to_string()).collect();
    day.wifi_names.sort();

    let resting = g.rng.gen_range(55.0..75.0);
    let present = |g: &mut Gen| g.rng.gen_bool(opts.stream_presence);

    if present(&mut g) {
        let s = g.series(StreamKind::HeartRate, 60, |r, off| {
            let bump = if (8 * 3600..20 * 3600).contains(&off) { 10.0 } else { 0.0 };
            let spike = if r.gen_bool(0.003) { 45.0 } else { 0.0 };
            round1(resting + bump + spike + r.gen_range(-4.0..4.0))
        });
        day.set_stream(Stream::Samples(s));
    }
    if present(&mut g) {
        let s = g.series(StreamKind::Respiration, opts.respiration_interval, |r, _| {
            round1(15.0 + r.gen_range(-2.5..2.5))
        });
        day.set_stream(Stream::Samples(s));
    }
    if present(&mut g) {
        let s = g.series(StreamKind::Steps, 60, |r, _| {
            if r.gen_bool(0.15) {
                f64::from(r.gen_range(1..120))
            } else {
                0.0
            }
        });
        day.set_stream(Stream::Samples(s));
    }
    if present(&mut g) {
        let mut level: f64 = g.rng.gen_range(60.0..100.0);
        let s = g.series(StreamKind::Battery, 300, |r, _| {
            if level < 15.0 || r.gen_bool(0.02) {
                level = (level + r.gen_range(10.0..40.0)).min(100.0);
            } else {
                level = (level - r.gen_range(0.0..1.5)).max(0.0);
            }
            level.round()
        });
        day.set_stream(Stream::Samples(s));
    }
    if present(&mut g) {
        let s = g.intervals(StreamKind::Activity, &["stationary", "stationary", "walking", "automotive"], 5, 150, 0.1);
        day.set_stream(Stream::Intervals(s));
    }
    if present(&mut g) {
        // A long locked stretch at the start of the day, then alternation.
        let night = g.rng.gen_range(5 * 60..9 * 60) * 60;
        let ds0 = g.ds;
        g.ds = ds0 + night;
        let mut s = g.intervals(StreamKind::PhoneLock, &["locked", "unlocked", "unlocked"], 3, 120, 0.05);
        g.ds = ds0;
        s.intervals.insert(0, Interval::new(g.ts(ds0), g.ts(ds0 + night), "locked"));
        day.set_stream(Stream::Intervals(s));
    }
    if present(&mut g) {
        let s = g.intervals(StreamKind::Wifi, &["connected", "disconnected"], 10, 240, 0.1);
        day.set_stream(Stream::Intervals(s));
    }
    if present(&mut g) {
        let labels: Vec<&str> = PLACES.iter().map(|p| p.0).collect();
        let s = g.intervals(StreamKind::Location, &labels, 20, 300, 0.2);
        day.set_stream(Stream::Intervals(s));
    }
    if present(&mut g) {
        let s = g.events(StreamKind::Call, &["incoming", "outgoing"], 4);
        if !s.intervals.is_empty() {
            day.set_stream(Stream::Intervals(s));
        }
    }
    if present(&mut g) {
        let s = g.events(StreamKind::Chatbot, &["conversation"], 3);
        // A day without events has no file at ingest, so no stream either.
        if !s.intervals.is_empty() {
            day.set_stream(Stream::Intervals(s));
        }
    }

    let n_ema = g.rng.gen_range(1..=3);
    for _ in 0..n_ema {
        let t = g.rng.gen_range(g.ds..g.de);
        day.ema.push(EmaEntry {
            t: g.ts(t),
            text: (*EMA_TEXTS.choose(&mut g.rng).unwrap()).into(),
        });
    }
    day.ema.sort_by_key(|e| e.t);

    let n_checkins = g.rng.gen_range(0..=opts.max_checkins);
    let mut starts: Vec<i64> = (0..n_checkins).map(|_| g.rng.gen_range(g.ds..g.de - 900)).collect();
    starts.sort_unstable();
    let mut last_end = g.ds;
    for s in starts {
        if s < last_end {
            continue;
        }
        let end = s + g.rng.gen_range(2..12) * 60;
        let n_pairs = g.rng.gen_range(1..=3);
        let mut turns = Vec::new();
        for k in 0..n_pairs {
            let (q, a) = *CHAT.choose(&mut g.rng).unwrap();
            let at = (s + k as i64 * 40).min(end);
            turns.push(Turn {
                role: Role::Chatbot,
                utterance: q.into(),
                at: g.ts(at),
            });
            let mut answer = a.to_string();
            if opts.plant_identifiers {
                let (_, lat, lon) = PLACES.choose(&mut g.rng).unwrap();
                let ssid = WIFI_NAMES.choose(&mut g.rng).unwrap();
                let ema = &day.ema[g.rng.gen_range(0..day.ema.len())].text;
                answer = format!("{answer} I was at {lat:.4}, {lon:.4} on {ssid}. Earlier I wrote: {ema}");
            }
            turns.push(Turn {
                role: Role::User,
                utterance: answer,
                at: g.ts((at + 20).min(end)),
            });
        }
        day.checkins.push(CheckIn {
            start: g.ts(s),
            end: g.ts(end),
            turns,
        });
        last_end = end;
    }
    day
}

/// `n` consecutive days ending at `last` (inclusive), seeds derived from `seed`.
pub fn synthetic_history(seed: u64, person: &PersonId, last: NaiveDate, n: usize, frame: &DayFrame) -> Vec<DayRecord> {
    (0..n)
        .rev()
        .map(|k| {
            let date = last - Duration::days(k as i64);
            synthetic_day(seed.wrapping_mul(1_000_003).wrapping_add(k as u64), person, date, frame)
        })
        .collect()
}
