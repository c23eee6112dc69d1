mod support;

use chrono::{DateTime, Duration};
use lifelens_core::ingest::{clip_intervals, load_day, write_raw_day, DEFAULT_RADIUS_M};
use lifelens_core::llm::MockLlm;
use lifelens_core::model::{Interval, StreamKind, Timestamp};
use lifelens_core::store::DayStore;
use proptest::prelude::*;
use support::{person, varied_day};

fn t0() -> Timestamp {
    DateTime::parse_from_rfc3339("2024-11-18T00:00:00Z").unwrap()
}

#[test]
fn raw_layout_round_trips() {
    for seed in 0..12 {
        let day = varied_day(seed);
        let dir = tempfile::tempdir().unwrap();
        write_raw_day(&day, dir.path()).unwrap();
        let loaded = load_day(dir.path(), &person(), day.date, day.frame.clone(), DEFAULT_RADIUS_M).unwrap();
        // Names travel on connected Wi-Fi rows, so only that many survive.
        let rows = day
            .intervals(StreamKind::Wifi)
            .map_or(0, |w| w.intervals.iter().filter(|i| i.label == "connected").count());
        let mut want = day.clone();
        want.wifi_names.truncate(rows);
        assert_eq!(loaded.record, want, "seed {seed}");
        assert!(loaded.summaries.values().all(|s| s.rejected_count() == 0));
    }
}

#[test]
fn store_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let day = varied_day(4);
    {
        let store = DayStore::open(dir.path()).unwrap();
        store.put_record(day.clone()).unwrap();
        let a = lifelens_core::llm::analyze_day(&day, &[], &MockLlm::echo(0), &Default::default()).unwrap();
        store.put_analysis(&person(), day.date, a).unwrap();
    }
    let store = DayStore::open(dir.path()).unwrap();
    let got = store.get(&person(), day.date).unwrap().unwrap();
    assert_eq!(got.record, day);
    assert!(got.analysis.as_ref().unwrap().glance.is_some());
    assert_eq!(store.dates(&person()).unwrap(), vec![day.date]);
    assert_eq!(store.profile(&person()).unwrap(), Some(day.profile.clone()));
    // A replaced record drops the stale analysis.
    store.put_record(day.clone()).unwrap();
    assert!(store.get(&person(), day.date).unwrap().unwrap().analysis.is_none());
}

proptest! {
    #[test]
    fn clipping_to_a_partition_preserves_duration(
        spans in prop::collection::vec((0i64..1400, 1i64..300), 0..20),
        cuts in prop::collection::btree_set(1i64..1440, 0..10),
    ) {
        let mut ivs: Vec<Interval> = spans
            .iter()
            .map(|(s, l)| Interval::new(t0() + Duration::minutes(*s), t0() + Duration::minutes(s + l), "walking"))
            .collect();
        ivs.sort_by_key(|i| i.start);
        let day_end = t0() + Duration::minutes(1440);
        let whole: i64 = clip_intervals(&ivs, t0(), day_end).iter().map(|i| i.duration_secs()).sum();
        let mut edges: Vec<Timestamp> = vec![t0()];
        edges.extend(cuts.iter().map(|m| t0() + Duration::minutes(*m)));
        edges.push(day_end);
        let parts: i64 = edges
            .windows(2)
            .map(|w| clip_intervals(&ivs, w[0], w[1]).iter().map(|i| i.duration_secs()).sum::<i64>())
            .sum();
        prop_assert_eq!(parts, whole);
        for w in edges.windows(2) {
            for c in clip_intervals(&ivs, w[0], w[1]) {
                prop_assert!(c.start >= w[0] && c.end <= w[1] && c.start < c.end);
            }
        }
    }
}
