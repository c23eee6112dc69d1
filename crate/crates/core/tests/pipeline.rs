mod support;

use chrono::{DateTime, Duration};
use lifelens_core::config::AppConfig;
use lifelens_core::encoder::{assemble_hour, assemble_window, contains_coordinates, EncoderConfig, SegmentSource};
use lifelens_core::llm::{
    analyze_day, build_daily_prompt, build_hourly_prompt, build_occurrence_prompt, explain_occurrence,
    occurrence_data_window, raw_anomaly_probe, summarize_day, summarize_hour, InferenceFields, LlmClient, LlmConfig,
    LlmError, MockLlm, PromptSection, NO_PRIOR_SUMMARY,
};
use lifelens_core::model::{
    CheckIn, DayFrame, DayRecord, Interval, IntervalStream, Role, Sample, SampleStream, Stream, StreamKind, TimeWindow,
    Timestamp, Turn,
};
use lifelens_core::occurrence::{Evidence, Occurrence, OccurrenceKind};
use lifelens_core::synthetic::{synthetic_day_with, synthetic_history, SynthOptions, WIFI_NAMES};
use proptest::prelude::*;
use support::{date, person, varied_day};

fn ts(s: &str) -> Timestamp {
    DateTime::parse_from_rfc3339(&format!("2024-11-18T{s}:00Z")).unwrap()
}

fn day() -> DayRecord {
    synthetic_day_with(7, &person(), date(2024, 11, 18), &DayFrame::utc(), &SynthOptions::default())
}

fn llm() -> LlmConfig {
    LlmConfig::default()
}

fn enc() -> EncoderConfig {
    EncoderConfig::default()
}

fn occurrence(start: &str, end: &str) -> Occurrence {
    let w = TimeWindow::new(ts(start), ts(end));
    Occurrence {
        kind: OccurrenceKind::Change,
        window: w,
        title: "Location change to work".into(),
        source_kinds: [StreamKind::Location].into_iter().collect(),
        evidence: vec![Evidence {
            kind: StreamKind::Location,
            window: w,
            note: "home to work".into(),
        }],
        explanation: None,
    }
}

#[test]
fn hourly_prompt_has_seven_sections_in_order() {
    let d = day();
    let p = build_hourly_prompt(&d, 9, None, &llm(), &enc());
    let order: Vec<PromptSection> = p.parts.iter().map(|(s, _)| *s).collect();
    assert_eq!(order, PromptSection::ALL.to_vec());
    let text = p.render();
    let mut at = 0;
    for s in PromptSection::ALL {
        let i = text[at..].find(s.heading()).unwrap_or_else(|| panic!("missing {}", s.heading())) + at;
        at = i + 1;
    }
    let data = p.section(PromptSection::Data).unwrap();
    assert!(data.starts_with("Time window: 09:00 to 10:00\nData sources: "), "{data}");
    assert!(p.section(PromptSection::OutputFormat).unwrap().contains("Output schema: hourly"));
}

#[test]
fn first_hour_history_is_sentinel_and_later_hours_chain() {
    let d = day();
    let p = build_hourly_prompt(&d, 0, None, &llm(), &enc());
    assert_eq!(p.section(PromptSection::HistoricalSummary), Some(NO_PRIOR_SUMMARY));
    let client = MockLlm::echo(1);
    let h0 = summarize_hour(&d, 0, None, &client, &llm(), &enc()).unwrap();
    let p1 = build_hourly_prompt(&d, 1, Some(&h0), &llm(), &enc());
    assert_eq!(p1.section(PromptSection::HistoricalSummary), Some(h0.fields.summary_text()));
}

#[test]
fn checkin_shows_in_every_overlapping_hour() {
    let mut d = day();
    d.checkins = vec![CheckIn {
        start: ts("10:50"),
        end: ts("11:10"),
        turns: vec![
            Turn { role: Role::Chatbot, utterance: "How is it going?".into(), at: ts("10:50") },
            Turn { role: Role::User, utterance: "Busy morning.".into(), at: ts("10:55") },
        ],
    }];
    let want = "From 10:50 to 11:10\nChatbot:How is it going?\nUser:Busy morning.";
    for h in 0..24 {
        let p = build_hourly_prompt(&d, h, None, &llm(), &enc());
        let c = p.section(PromptSection::UserCheckin).unwrap();
        if h == 10 || h == 11 {
            assert_eq!(c, want, "hour {h}");
            assert!(p.section(PromptSection::Data).unwrap().contains("user_checkin"));
        } else {
            assert_eq!(c, "No check-in during this window.", "hour {h}");
        }
    }
}

#[test]
fn prompt_data_carries_every_segment() {
    for seed in 0..10 {
        let d = varied_day(seed);
        for h in 0..24 {
            let n = assemble_hour(&d, h, &enc());
            let data = build_hourly_prompt(&d, h, None, &llm(), &enc()).section(PromptSection::Data).unwrap().to_string();
            let mut at = 0;
            for seg in &n.segments {
                let i = data[at..].find(&seg.text).unwrap_or_else(|| panic!("seed {seed} hour {h}: {}", seg.text));
                at += i + seg.text.len();
            }
            if n.is_empty() {
                assert!(data.contains("No sensor data recorded in this window."));
            }
        }
    }
}

#[test]
fn one_flaky_reply_costs_one_retry() {
    let d = day();
    let client = MockLlm::flaky(3, 1);
    let r = summarize_hour(&d, 9, None, &client, &llm(), &enc()).unwrap();
    assert_eq!(r.attempts, 2);
    assert_eq!(client.calls(), 2);
}

#[test]
fn persistent_invalid_output_fails_after_max_retries() {
    let d = day();
    let client = MockLlm::flaky(3, usize::MAX);
    let err = summarize_hour(&d, 9, None, &client, &llm(), &enc()).unwrap_err();
    assert!(matches!(err, LlmError::MaxRetriesExceeded { attempts: 3, .. }), "{err:?}");
    assert_eq!(client.calls(), 3);
}

#[test]
fn down_endpoint_is_not_retried() {
    let d = day();
    let client = MockLlm::new(0, lifelens_core::llm::MockMode::Down);
    assert!(matches!(
        summarize_hour(&d, 9, None, &client, &llm(), &enc()),
        Err(LlmError::Unavailable(_))
    ));
    assert_eq!(client.calls(), 1);
}

#[test]
fn daily_needs_hourly_input() {
    let d = day();
    assert!(matches!(summarize_day(&d, &[], &MockLlm::echo(0), &llm()), Err(LlmError::EmptyInput)));
}

#[test]
fn daily_prompt_lists_missing_hours() {
    let d = day();
    let client = MockLlm::echo(0);
    let hourly: Vec<_> = [8, 9, 10]
        .iter()
        .map(|h| summarize_hour(&d, *h, None, &client, &llm(), &enc()).unwrap())
        .collect();
    let p = build_daily_prompt(&d, &hourly, &llm());
    let hist = p.section(PromptSection::HistoricalSummary).unwrap();
    assert_eq!(hist.lines().count(), 3);
    assert!(hist.starts_with("08:00-09:00 summary: "));
    let data = p.section(PromptSection::Data).unwrap();
    assert!(data.contains("No summary for the hours starting at: 00:00, 01:00"));
    assert!(!data.contains("09:00,"));
    let g = summarize_day(&d, &hourly, &client, &llm()).unwrap();
    assert!(matches!(g.fields, InferenceFields::Daily { .. }));
}

#[test]
fn occurrence_window_is_padded_and_fully_encoded() {
    let d = day();
    let occ = occurrence("11:00", "11:20");
    let w = occurrence_data_window(&occ, llm().pad_minutes);
    assert_eq!((w.start, w.end), (ts("10:30"), ts("11:50")));
    let (n, _) = assemble_window(&d, w.start, w.end, &enc());
    let p = build_occurrence_prompt(&d, &occ, w, &n, &llm());
    let data = p.section(PromptSection::Data).unwrap();
    assert!(data.starts_with("Occurrence: change \"Location change to work\" from 11:00 to 11:20\nEvidence: location 11:00 to 11:20 (home to work)\nTime window: 10:30 to 11:50"), "{data}");
    // Every stream with data in the window contributed, and nothing outside it.
    for s in &d.streams {
        let inside = match s {
            Stream::Samples(x) => x.samples.iter().any(|v| v.t >= w.start && v.t < w.end),
            Stream::Intervals(x) => x.intervals.iter().any(|i| i.start < w.end && i.end > w.start),
        };
        let present = n.segments.iter().any(|g| g.source == SegmentSource::Stream(s.kind()));
        assert_eq!(inside, present, "{}", s.kind());
    }
    for g in &n.segments {
        assert!(g.window.start >= w.start && g.window.end <= w.end, "{g:?}");
    }
}

#[test]
fn scripted_sources_are_kept_and_unknown_ones_retried() {
    let d = day();
    let good = r#"{"title":"Commute","explanation":"Walked from home to work while heart rate rose briefly.","sources_used":["location","heart_rate"]}"#;
    let bad = r#"{"title":"Commute","explanation":"Walked from home to work while heart rate rose briefly.","sources_used":["telepathy"]}"#;
    let client = MockLlm::scripted([bad, good]);
    let mut occ = occurrence("11:00", "11:20");
    let r = explain_occurrence(&mut occ, &d, &client, &llm(), &enc()).unwrap();
    assert_eq!(r.attempts, 2);
    let e = occ.explanation.unwrap();
    assert_eq!(e.sources_used, vec!["location", "heart_rate"]);
    assert_eq!(e.title, "Commute");
}

#[test]
fn anomaly_probe_cases() {
    let d = day();
    let client = MockLlm::echo(0);
    let (r, u) = raw_anomaly_probe(&d, StreamKind::HeartRate, &client, &llm(), &enc()).unwrap();
    assert_eq!(r.len(), 1);
    assert!(u.input_tokens > 0 && u.attempts == 1);
    assert!(matches!(
        raw_anomaly_probe(&d, StreamKind::Steps, &client, &llm(), &enc()),
        Err(LlmError::UnsupportedKind)
    ));
    let empty = DayRecord::new(person(), date(2024, 11, 18), DayFrame::utc());
    let (r, u) = raw_anomaly_probe(&empty, StreamKind::HeartRate, &client, &llm(), &enc()).unwrap();
    assert!(r.is_empty() && u.attempts == 0);
    // Never-parseable output yields no ranges rather than an error.
    let junk = MockLlm::scripted(["not json at all, just a long rambling reply with many words"]);
    let (r, u) = raw_anomaly_probe(&d, StreamKind::Respiration, &junk, &llm(), &enc()).unwrap();
    assert!(r.is_empty());
    assert_eq!(u.attempts, 3);
    // Ranges come back as written.
    let scripted = MockLlm::scripted([r#"{"anomalies":[{"start":"13:05","end":"13:40","label":"spike"}]}"#]);
    let (r, _) = raw_anomaly_probe(&d, StreamKind::HeartRate, &scripted, &llm(), &enc()).unwrap();
    assert_eq!((r[0].start.as_str(), r[0].end.as_str(), r[0].label.as_str()), ("13:05", "13:40", "spike"));
}

fn analyze(seed: u64, client: &dyn LlmClient) -> lifelens_core::store::DayAnalysis {
    let d = varied_day(seed);
    let hist = synthetic_history(seed, &person(), d.date.pred_opt().unwrap(), 5, &d.frame);
    analyze_day(&d, &hist, client, &AppConfig::default()).unwrap()
}

#[test]
fn analysis_is_deterministic() {
    for seed in [1, 2] {
        let a = serde_json::to_vec(&analyze(seed, &MockLlm::echo(9))).unwrap();
        let b = serde_json::to_vec(&analyze(seed, &MockLlm::echo(9))).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn usage_log_adds_up() {
    let client = MockLlm::echo(4);
    let a = analyze(4, &client);
    let logged: u64 = a.usage.iter().map(|u| u.input_tokens + u.output_tokens).sum();
    let hourly: u64 = a.hourly.iter().map(|r| r.input_tokens + r.output_tokens).sum();
    let glance = a.glance.as_ref().map_or(0, |g| g.input_tokens + g.output_tokens);
    let explain: u64 = a
        .usage
        .iter()
        .filter(|u| u.purpose.starts_with("occurrence:"))
        .map(|u| u.input_tokens + u.output_tokens)
        .sum();
    assert_eq!(logged, hourly + glance + explain);
    assert_eq!(a.usage.len(), a.hourly.len() + 1 + a.occurrences.len());
    assert_eq!(client.calls(), a.usage.len());
    assert!(a.occurrences.iter().all(|o| o.explanation.is_some()));
    assert!(a.usage.iter().all(|u| u.attempts >= 1 && u.attempts <= 3));
}

#[test]
fn empty_hours_are_skipped() {
    let mut d = DayRecord::new(person(), date(2024, 11, 18), DayFrame::utc());
    d.set_stream(Stream::Intervals(IntervalStream {
        kind: StreamKind::Activity,
        intervals: vec![Interval::new(ts("14:10"), ts("15:20"), "walking")],
    }));
    let a = analyze_day(&d, &[], &MockLlm::echo(0), &AppConfig::default()).unwrap();
    let starts: Vec<Timestamp> = a.hourly.iter().map(|r| r.window.start).collect();
    assert_eq!(starts, vec![ts("14:00"), ts("15:00")]);
    assert!(a.glance.is_some());
}

#[test]
fn long_hours_are_chunked_in_order() {
    let mut d = DayRecord::new(person(), date(2024, 11, 18), DayFrame::utc());
    d.set_stream(Stream::Samples(SampleStream {
        kind: StreamKind::HeartRate,
        nominal_interval: 1,
        samples: (0..3600).map(|i| Sample { t: ts("09:00") + Duration::seconds(i), v: 60.0 + (i % 40) as f64 }).collect(),
    }));
    let whole = build_hourly_prompt(&d, 9, None, &llm(), &enc()).token_estimate;
    let client = MockLlm::echo(0).with_max_context(whole * 3 / 5 + llm().output_reserve_tokens);
    let r = summarize_hour(&d, 9, None, &client, &llm(), &enc()).unwrap();
    assert!(client.calls() >= 2, "{} calls", client.calls());
    assert_eq!(r.attempts, 1);
    // Each call's input is billed once.
    assert!(r.input_tokens as usize >= whole);
    let tiny = MockLlm::echo(0).with_max_context(llm().output_reserve_tokens + 10);
    assert!(matches!(summarize_hour(&d, 9, None, &tiny, &llm(), &enc()), Err(LlmError::Chunk(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prompts_never_leak(seed in any::<u64>(), hour in 0u32..24) {
        let opts = SynthOptions { plant_identifiers: true, ..SynthOptions::default() };
        let d = synthetic_day_with(seed, &person(), date(2024, 11, 18), &DayFrame::new(chrono_tz::America::New_York, 4), &opts);
        let text = build_hourly_prompt(&d, hour, None, &llm(), &enc()).render();
        prop_assert!(!contains_coordinates(&text));
        prop_assert!(!WIFI_NAMES.iter().any(|w| text.contains(w)));
        for e in &d.ema {
            prop_assert!(!text.contains(e.text.trim()), "{}", e.text);
        }
    }

    #[test]
    fn attempts_never_exceed_cap(k in 0usize..6, cap in 1u32..5) {
        let d = day();
        let mut cfg = llm();
        cfg.max_retries = cap;
        let client = MockLlm::flaky(0, k);
        match summarize_hour(&d, 9, None, &client, &cfg, &enc()) {
            Ok(r) => {
                prop_assert!(r.attempts <= cap);
                prop_assert_eq!(r.attempts as usize, k + 1);
            }
            Err(LlmError::MaxRetriesExceeded { attempts, .. }) => {
                prop_assert_eq!(attempts, cap);
                prop_assert!(k >= cap as usize);
            }
            Err(e) => prop_assert!(false, "{:?}", e),
        }
        prop_assert!(client.calls() <= cap as usize);
    }
}
