//! Encoder census and leak scan, shared with the acceptance suite.

use lifelens_core::encoder::{assemble_hour, contains_coordinates, EncoderConfig, Narrative, Segment, SegmentSource};
use lifelens_core::model::{DayRecord, Stream, StreamKind, Timestamp};
use lifelens_core::synthetic::WIFI_NAMES;

use super::oracles::{array_values, battery_value, golden_interval_sentence};

pub fn hour_narratives(day: &DayRecord) -> Vec<Narrative> {
    (0..24).map(|h| assemble_hour(day, h, &EncoderConfig::default())).collect()
}

/// Every datum inside the day shows up in the hour narratives exactly once.
pub fn census(day: &DayRecord) -> Result<(), String> {
    let (ds, de) = day.bounds();
    let hours = hour_narratives(day);
    let bounds: Vec<(Timestamp, Timestamp)> = (0..24).map(|h| day.frame.hour_bounds(day.date, h)).collect();
    if bounds[0].0 != ds || bounds[23].1 != de || bounds.windows(2).any(|w| w[0].1 != w[1].0) {
        return Err("hour bounds do not tile the day".into());
    }
    let of_kind = |kind: StreamKind| -> Vec<&Segment> {
        hours
            .iter()
            .flat_map(|n| n.segments.iter())
            .filter(|s| s.source == SegmentSource::Stream(kind))
            .collect()
    };
    for stream in &day.streams {
        let kind = stream.kind();
        match stream {
            Stream::Samples(s) => {
                let want: Vec<f64> = s.samples.iter().filter(|x| x.t >= ds && x.t < de).map(|x| x.v).collect();
                let got: Vec<f64> = if kind == StreamKind::Battery {
                    of_kind(kind).iter().map(|seg| battery_value(&seg.text)).collect()
                } else {
                    of_kind(kind).iter().flat_map(|seg| array_values(&seg.text)).collect()
                };
                if got != want {
                    return Err(format!("{kind}: {} values encoded, {} in the day", got.len(), want.len()));
                }
            }
            Stream::Intervals(s) => {
                for (h, (hs, he)) in bounds.iter().enumerate() {
                    let mut want: Vec<String> = s
                        .intervals
                        .iter()
                        .filter_map(|iv| {
                            let (a, b) = (iv.start.max(*hs), iv.end.min(*he));
                            (a < b).then(|| {
                                golden_interval_sentence(kind, &iv.label, &day.frame.clock(&a), &day.frame.clock(&b))
                            })
                        })
                        .collect();
                    let mut got: Vec<String> = hours[h]
                        .segments
                        .iter()
                        .filter(|seg| seg.source == SegmentSource::Stream(kind))
                        .map(|seg| seg.text.clone())
                        .collect();
                    want.sort();
                    got.sort();
                    if got != want {
                        return Err(format!("{kind} hour {h}: {got:?} vs {want:?}"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Text that carries no coordinate pair, planted network name or EMA text.
pub fn leaks(text: &str, day: &DayRecord) -> Vec<String> {
    let mut out = Vec::new();
    if contains_coordinates(text) {
        out.push("coordinates".into());
    }
    for w in WIFI_NAMES.iter().chain(day.wifi_names.iter().map(|s| s.as_str()).collect::<Vec<_>>().iter()) {
        if text.contains(w) {
            out.push(format!("wifi {w}"));
        }
    }
    if text.to_lowercase().contains("ssid") {
        out.push("ssid".into());
    }
    for e in &day.ema {
        if e.text.split_whitespace().count() >= 2 && text.contains(e.text.trim()) {
            out.push(format!("ema {}", e.text));
        }
    }
    out
}
