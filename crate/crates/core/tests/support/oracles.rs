//! Brute-force reference implementations used to check the detectors,
//! consolidation and encoder. Deliberately naive: per-second bitmaps and
//! quadratic scans, no shared code with the span arithmetic under test.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::Duration;
use lifelens_core::model::{DayRecord, Interval, Stream, StreamKind};
use lifelens_core::occurrence::{Comparison, Occurrence, OccurrenceConfig, ProbeMeasure};

/// (kind, start, end, title) in epoch seconds; enough to identify an occurrence.
pub type Key = (&'static str, i64, i64, String);

pub fn keys(occs: &[Occurrence]) -> Vec<Key> {
    let mut v: Vec<Key> = occs
        .iter()
        .map(|o| (o.kind.as_str(), o.window.start.timestamp(), o.window.end.timestamp(), o.title.clone()))
        .collect();
    v.sort();
    v
}

fn day_range(day: &DayRecord) -> (i64, i64) {
    let (s, e) = day.bounds();
    (s.timestamp(), e.timestamp())
}

/// Mark `[a, b)` in a bitmap based at `base`, clipped to its length.
fn mark(bits: &mut [bool], base: i64, a: i64, b: i64) {
    let n = bits.len() as i64;
    let lo = (a - base).clamp(0, n);
    let hi = (b - base).clamp(0, n);
    for i in lo..hi {
        bits[i as usize] = true;
    }
}

/// Maximal runs of `want` as `(start, end)` epoch seconds.
fn runs_of(bits: &[bool], base: i64, want: bool) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < bits.len() {
        if bits[i] == want {
            let j = (i..bits.len()).find(|&j| bits[j] != want).unwrap_or(bits.len());
            out.push((base + i as i64, base + j as i64));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

fn intervals(day: &DayRecord, kind: StreamKind) -> Option<&[Interval]> {
    day.intervals(kind).map(|s| s.intervals.as_slice())
}

pub fn oracle_changes(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Key> {
    let mut out = Vec::new();
    for kind in [StreamKind::Activity, StreamKind::Location] {
        let Some(ivs) = intervals(day, kind) else { continue };
        for i in 1..ivs.len() {
            let prev = &ivs[i - 1].label;
            if ivs[i].label == *prev {
                continue;
            }
            // Earliest interval of the run that ends at i - 1.
            let mut first = i - 1;
            while first > 0 && ivs[first - 1].label == *prev {
                first -= 1;
            }
            let lasted = ivs[i - 1].end.timestamp() - ivs[first].start.timestamp();
            if lasted >= i64::from(cfg.min_prior_minutes) * 60 {
                out.push((
                    "change",
                    ivs[i].start.timestamp(),
                    ivs[i].end.timestamp(),
                    format!("{prev}→{}", ivs[i].label),
                ));
            }
        }
    }
    out.sort();
    out
}

pub fn oracle_gaps(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Key> {
    let (lo, hi) = day_range(day);
    let mut out = Vec::new();
    for (&kind, &min) in &cfg.gap_minutes {
        let mut covered = vec![false; (hi - lo) as usize];
        match day.stream(kind) {
            Some(Stream::Samples(s)) => {
                for x in &s.samples {
                    let t = x.t.timestamp();
                    mark(&mut covered, lo, t, t + i64::from(s.nominal_interval));
                }
            }
            Some(Stream::Intervals(s)) => {
                for iv in &s.intervals {
                    mark(&mut covered, lo, iv.start.timestamp(), iv.end.timestamp());
                }
            }
            None => {}
        }
        for (a, b) in runs_of(&covered, lo, false) {
            if b - a >= i64::from(min) * 60 {
                let name = kind.as_str().replace('_', " ");
                out.push(("gap", a, b, format!("No {name} data for {} min", (b - a) / 60)));
            }
        }
    }
    out.sort();
    out
}

pub fn oracle_long_durations(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Key> {
    let rules = [
        (StreamKind::PhoneLock, "unlocked", cfg.phone_min_minutes, "phone use"),
        (StreamKind::Activity, "stationary", cfg.sedentary_min_minutes, "sedentary"),
    ];
    let mut out = Vec::new();
    for (kind, label, min, what) in rules {
        let Some(ivs) = intervals(day, kind) else { continue };
        if ivs.is_empty() {
            continue;
        }
        let base = ivs.iter().map(|i| i.start.timestamp()).min().unwrap();
        let top = ivs.iter().map(|i| i.end.timestamp()).max().unwrap();
        let mut bits = vec![false; (top - base) as usize];
        for iv in ivs.iter().filter(|i| i.label == label) {
            mark(&mut bits, base, iv.start.timestamp(), iv.end.timestamp());
        }
        for (a, b) in runs_of(&bits, base, true) {
            if b - a >= i64::from(min) * 60 {
                out.push(("long_duration", a, b, format!("{} min {what}", (b - a) / 60)));
            }
        }
    }
    out.sort();
    out
}

pub fn oracle_discrepancies(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Key> {
    let mut out = Vec::new();
    for rule in &cfg.discrepancy_rules {
        let Some(anchors) = intervals(day, rule.anchor_kind) else { continue };
        let Some(probe) = day.samples(rule.probe_kind) else { continue };
        let mut probes: Vec<(i64, i64, f64)> = Vec::new();
        match rule.measure {
            ProbeMeasure::Value => {
                for x in &probe.samples {
                    let t = x.t.timestamp();
                    probes.push((t, t + i64::from(probe.nominal_interval), x.v));
                }
            }
            ProbeMeasure::DropPerHour => {
                for k in 1..probe.samples.len() {
                    let (p, q) = (&probe.samples[k - 1], &probe.samples[k]);
                    let dt = (q.t.timestamp() - p.t.timestamp()) as f64;
                    probes.push((p.t.timestamp(), q.t.timestamp(), (p.v - q.v) * 3600.0 / dt));
                }
            }
        }
        for a in anchors.iter().filter(|a| a.label == rule.anchor_label) {
            let (a0, a1) = (a.start.timestamp(), a.end.timestamp());
            let hits: Vec<&(i64, i64, f64)> = probes
                .iter()
                .filter(|p| p.0 >= a0 && p.1 <= a1)
                .filter(|p| match rule.op {
                    Comparison::Gt => p.2 > rule.threshold,
                    Comparison::Ge => p.2 >= rule.threshold,
                })
                .collect();
            if let (Some(s), Some(e)) = (hits.iter().map(|p| p.0).min(), hits.iter().map(|p| p.1).max()) {
                out.push(("discrepancy", s, e, rule.title.clone()));
            }
        }
    }
    out.sort();
    out
}

pub fn oracle_routines(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Key> {
    let (lo, hi) = day_range(day);
    let n = (hi - lo) as usize;
    let mut locked = vec![false; n];
    let mut stepping = vec![false; n];
    let mut moving = vec![false; n];
    if let Some(ivs) = intervals(day, StreamKind::PhoneLock) {
        for iv in ivs.iter().filter(|i| i.label == "locked") {
            mark(&mut locked, lo, iv.start.timestamp(), iv.end.timestamp());
        }
    }
    if let Some(s) = day.samples(StreamKind::Steps) {
        for x in s.samples.iter().filter(|x| x.v > 0.0) {
            let t = x.t.timestamp();
            mark(&mut stepping, lo, t, t + i64::from(s.nominal_interval));
        }
    }
    if let Some(ivs) = intervals(day, StreamKind::Activity) {
        for iv in ivs.iter().filter(|i| i.label != "stationary") {
            mark(&mut moving, lo, iv.start.timestamp(), iv.end.timestamp());
        }
    }
    let quiet: Vec<bool> = (0..n).map(|i| locked[i] && !stepping[i] && !moving[i]).collect();
    let quiet_runs = runs_of(&quiet, lo, true);

    let routines = if day.profile.declared_routines.is_empty() {
        vec![cfg.default_sleep.clone()]
    } else {
        day.profile.declared_routines.clone()
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in &routines {
        for off in -1..=1 {
            let d = day.date + Duration::days(off);
            let s = day.frame.local(d, r.start).timestamp();
            let e_date = if r.end > r.start { d } else { d + Duration::days(1) };
            let e = day.frame.local(e_date, r.end).timestamp();
            let (s, e) = (s.max(lo), e.min(hi));
            if s >= e {
                continue;
            }
            let inst_len = (e - s) as f64;
            let mut best: Option<(i64, i64)> = None;
            for &(qa, qb) in &quiet_runs {
                let shared = (qa..qb).filter(|t| *t >= s && *t < e).count();
                if shared == 0 || (shared as f64) < cfg.routine_overlap * inst_len {
                    continue;
                }
                best = match best {
                    Some(b) if b.1 - b.0 >= qb - qa => Some(b),
                    _ => Some((qa, qb)),
                };
            }
            if let Some((a, b)) = best {
                if seen.insert((a, b, r.label.clone())) {
                    out.push(("routine", a, b, format!("{} ({} min)", r.label, (b - a) / 60)));
                }
            }
        }
    }
    out.sort();
    out
}

fn ratio(a: (i64, i64), b: (i64, i64)) -> f64 {
    let inter = a.1.min(b.1) - a.0.max(b.0);
    if inter < 0 {
        return 0.0;
    }
    let shorter = (a.1 - a.0).min(b.1 - b.0);
    if shorter == 0 {
        1.0
    } else {
        inter as f64 / shorter as f64
    }
}

/// Same-kind keys joined by connected components of the pairwise
/// "overlaps by at least 0.8 of the shorter window" relation. The merged
/// key spans its members and keeps the title of its earliest member.
pub fn oracle_consolidate(all: Vec<Key>) -> Vec<Key> {
    let n = all.len();
    let mut comp: Vec<Option<usize>> = vec![None; n];
    let mut out = Vec::new();
    for seed in 0..n {
        if comp[seed].is_some() {
            continue;
        }
        comp[seed] = Some(seed);
        let mut stack = vec![seed];
        let mut members = vec![seed];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if comp[j].is_none() && all[j].0 == all[i].0 && ratio((all[i].1, all[i].2), (all[j].1, all[j].2)) >= 0.8 {
                    comp[j] = Some(seed);
                    stack.push(j);
                    members.push(j);
                }
            }
        }
        let first = members
            .iter()
            .map(|&m| &all[m])
            .min_by(|a, b| (a.1, a.2, &a.3).cmp(&(b.1, b.2, &b.3)))
            .unwrap();
        let start = members.iter().map(|&m| all[m].1).min().unwrap();
        let end = members.iter().map(|&m| all[m].2).max().unwrap();
        out.push((first.0, start, end, first.3.clone()));
    }
    out.sort();
    out
}

pub fn oracle_all(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Key> {
    let mut all = oracle_changes(day, cfg);
    all.extend(oracle_gaps(day, cfg));
    all.extend(oracle_long_durations(day, cfg));
    all.extend(oracle_discrepancies(day, cfg));
    all.extend(oracle_routines(day, cfg));
    oracle_consolidate(all)
}

/// Human-readable differences between each detector and its oracle.
pub fn detector_mismatches(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<String> {
    use lifelens_core::occurrence as occ;
    let pairs: [(&str, Vec<Key>, Vec<Key>); 6] = [
        ("change", keys(&occ::detect_changes(day, cfg)), oracle_changes(day, cfg)),
        ("gap", keys(&occ::detect_gaps(day, cfg)), oracle_gaps(day, cfg)),
        ("long_duration", keys(&occ::detect_long_durations(day, cfg)), oracle_long_durations(day, cfg)),
        ("discrepancy", keys(&occ::detect_discrepancies(day, cfg)), oracle_discrepancies(day, cfg)),
        ("routine", keys(&occ::detect_routines(day, cfg)), oracle_routines(day, cfg)),
        ("consolidated", keys(&occ::detect_all(day, cfg)), oracle_all(day, cfg)),
    ];
    pairs
        .into_iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name} on {}: got {got:?}, want {want:?}", day.date))
        .collect()
}

/// Golden sentence for one interval, written out independently of the
/// encoder's template table.
pub fn golden_interval_sentence(kind: StreamKind, label: &str, start: &str, end: &str) -> String {
    match kind {
        StreamKind::PhoneLock => format!("The person's phone is {label} from {start} to {end}."),
        StreamKind::Wifi => format!("The person's phone Wi-Fi is {label} from {start} to {end}."),
        StreamKind::Activity => format!("The person is {label} from {start} to {end}."),
        StreamKind::Location => format!("The person is at {label} from {start} to {end}."),
        StreamKind::Call => format!("The person is on a phone call ({label}) from {start} to {end}."),
        StreamKind::Chatbot => format!("The person talks with the chatbot ({label}) from {start} to {end}."),
        other => panic!("{other} is not an interval stream"),
    }
}

/// Values inside the bracketed array of a series sentence.
pub fn array_values(text: &str) -> Vec<f64> {
    let open = text.rfind('[').expect("array open");
    let close = text.rfind(']').expect("array close");
    text[open + 1..close]
        .split(", ")
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().expect("numeric array value"))
        .collect()
}

/// Value in a battery sentence ("... is <v> at HH:MM.").
pub fn battery_value(text: &str) -> f64 {
    let rest = text.split(" is ").nth(1).expect("battery sentence");
    rest.split(" at ").next().unwrap().parse().expect("battery value")
}
