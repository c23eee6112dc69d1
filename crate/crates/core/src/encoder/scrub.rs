//! De-identification applied to every narrative and outbound payload.
//!
//! Raw coordinate pairs become the nearest known place label (or a generic
//! phrase), network names become a generic phrase, and EMA sentences are
//! replaced wholesale. Replacements never reintroduce a pattern, so scrubbing
//! twice equals scrubbing once.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::{nearest_place, DEFAULT_RADIUS_M};
use crate::model::DayRecord;

use super::Narrative;

const PLACE_FALLBACK: &str = "a location";
const WIFI_PHRASE: &str = "a Wi-Fi network";
const EMA_PHRASE: &str = "[removed]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrubCategory {
    Gps,
    WifiName,
    Ema,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScrubReport {
    pub removed: BTreeMap<ScrubCategory, usize>,
}

impl ScrubReport {
    pub fn count(&self, cat: ScrubCategory) -> usize {
        self.removed.get(&cat).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.removed.values().sum()
    }

    pub fn merge(&mut self, other: &ScrubReport) {
        for (k, v) in &other.removed {
            *self.removed.entry(*k).or_default() += v;
        }
    }

    fn add(&mut self, cat: ScrubCategory, n: usize) {
        if n > 0 {
            *self.removed.entry(cat).or_default() += n;
        }
    }
}

fn coord_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(-?\d{1,3}\.\d{4,})\s*,\s*(-?\d{1,3}\.\d{4,})").unwrap())
}

fn ssid_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)\bssid\s*[:=]\s*"?[^\s",;]+"?"#).unwrap())
}

fn is_num_char(c: char) -> bool {
    c.is_ascii_digit() || c == '.'
}

/// Byte ranges of latitude/longitude pairs: two decimals with at least four
/// fractional digits, in range, not embedded in a longer number.
pub fn find_coordinates(text: &str) -> Vec<(Range<usize>, f64, f64)> {
    coord_re()
        .captures_iter(text)
        .filter_map(|c| {
            let m = c.get(0)?;
            let before = text[..m.start()].chars().next_back();
            let after = text[m.end()..].chars().next();
            if before.is_some_and(is_num_char) || after.is_some_and(|ch| ch.is_ascii_digit()) {
                return None;
            }
            let lat: f64 = c[1].parse().ok()?;
            let lon: f64 = c[2].parse().ok()?;
            ((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)).then_some((m.range(), lat, lon))
        })
        .collect()
}

pub fn contains_coordinates(text: &str) -> bool {
    !find_coordinates(text).is_empty()
}

fn dictionary_safe(term: &str) -> bool {
    term.chars().count() >= 3
        && ![PLACE_FALLBACK, WIFI_PHRASE, EMA_PHRASE]
            .iter()
            .any(|r| r.contains(term))
}

fn replace_literal(text: &str, needle: &str, with: &str) -> (String, usize) {
    let n = text.matches(needle).count();
    if n == 0 {
        (text.to_string(), 0)
    } else {
        (text.replace(needle, with), n)
    }
}

/// Scrub one string against the day's profile, network names and EMA log.
pub fn scrub_text(text: &str, day: &DayRecord) -> (String, ScrubReport) {
    let mut report = ScrubReport::default();
    let mut out = text.to_string();

    let mut ema: Vec<&str> = day
        .ema
        .iter()
        .map(|e| e.text.trim())
        .filter(|t| t.split_whitespace().count() >= 2 && dictionary_safe(t))
        .collect();
    ema.sort_by_key(|t| std::cmp::Reverse(t.len()));
    for t in ema {
        let (s, n) = replace_literal(&out, t, EMA_PHRASE);
        out = s;
        report.add(ScrubCategory::Ema, n);
    }

    let n = ssid_re().find_iter(&out).count();
    if n > 0 {
        out = ssid_re().replace_all(&out, WIFI_PHRASE).into_owned();
        report.add(ScrubCategory::WifiName, n);
    }
    let mut names: Vec<&str> = day
        .wifi_names
        .iter()
        .map(|s| s.as_str())
        .filter(|s| dictionary_safe(s) && !day.profile.known_places.iter().any(|p| p.label.contains(*s)))
        .collect();
    names.sort_by_key(|s| std::cmp::Reverse(s.len()));
    names.dedup();
    for name in names {
        let (s, n) = replace_literal(&out, name, WIFI_PHRASE);
        out = s;
        report.add(ScrubCategory::WifiName, n);
    }

    let hits = find_coordinates(&out);
    if !hits.is_empty() {
        let mut rebuilt = String::with_capacity(out.len());
        let mut last = 0;
        for (range, lat, lon) in &hits {
            rebuilt.push_str(&out[last..range.start]);
            rebuilt.push_str(nearest_place(&day.profile, *lat, *lon, DEFAULT_RADIUS_M).unwrap_or(PLACE_FALLBACK));
            last = range.end;
        }
        rebuilt.push_str(&out[last..]);
        report.add(ScrubCategory::Gps, hits.len());
        out = rebuilt;
    }
    (out, report)
}

/// Scrub every segment of a narrative.
pub fn scrub_identifiers(narrative: &Narrative, day: &DayRecord) -> (Narrative, ScrubReport) {
    let mut report = ScrubReport::default();
    let segments = narrative
        .segments
        .iter()
        .map(|seg| {
            let (text, r) = scrub_text(&seg.text, day);
            report.merge(&r);
            super::Segment { text, ..seg.clone() }
        })
        .collect();
    (Narrative::from_ordered(segments), report)
}
