use chrono::Duration;

use crate::config::AppConfig;
use crate::encoder::{assemble_hour, assemble_window, chunk, encode_stream, scrub_identifiers, CharsPerToken, EncoderConfig, Narrative};
use crate::model::{DayRecord, StreamKind, TimeWindow, Timestamp};
use crate::occurrence::{compute_baseline_trendline, detect_all, flag_outliers, Explanation, Occurrence};
use crate::store::DayAnalysis;

use super::prompt::hourly_prompt;
use super::{
    build_anomaly_prompt, build_daily_prompt, build_occurrence_prompt, validate_output, AnomalyRange, CallUsage,
    InferenceFields, InferenceKind, InferenceResult, LlmClient, LlmConfig, LlmError, OutputSchema, ParsedOutput,
    NO_PRIOR_SUMMARY,
};

// Room left for a chunk's historical summary, which changes between chunks.
const HISTORY_SLACK_TOKENS: usize = 512;

struct CallOutcome {
    parsed: ParsedOutput,
    input_tokens: u64,
    output_tokens: u64,
    attempts: u32,
}

/// One logical call: attempt until the output validates or the attempt cap
/// is reached. Tokens from failed attempts are billed too.
fn call_validated(
    client: &dyn LlmClient,
    prompt: &str,
    schema: OutputSchema,
    cfg: &LlmConfig,
) -> Result<CallOutcome, (LlmError, u64, u64)> {
    let max = cfg.max_retries.max(1);
    let (mut input, mut output) = (0, 0);
    let mut last = String::new();
    for attempt in 1..=max {
        if attempt > 1 && cfg.retry_backoff_ms > 0 {
            std::thread::sleep(std::time::Duration::from_millis(cfg.retry_backoff_ms << (attempt - 2).min(16)));
        }
        let c = client.complete(prompt).map_err(|e| (e, input, output))?;
        input += c.input_tokens;
        output += c.output_tokens;
        match validate_output(&c.text, schema) {
            Ok(parsed) => {
                return Ok(CallOutcome {
                    parsed,
                    input_tokens: input,
                    output_tokens: output,
                    attempts: attempt,
                })
            }
            Err(e) => {
                tracing::debug!(attempt, error = %e, "model output rejected");
                last = e.to_string();
            }
        }
    }
    Err((LlmError::MaxRetriesExceeded { attempts: max, last }, input, output))
}

fn fields(parsed: ParsedOutput) -> InferenceFields {
    match parsed {
        ParsedOutput::Fields(f) => f,
        ParsedOutput::Anomalies(_) => unreachable!("text schema produced anomaly output"),
    }
}

fn context_budget(client: &dyn LlmClient, cfg: &LlmConfig) -> usize {
    cfg.max_context_tokens
        .min(client.max_context_tokens())
        .saturating_sub(cfg.output_reserve_tokens)
}

/// Summary, inference and questions for pipeline hour `hour`. When the
/// prompt exceeds the context budget, the narrative is split into chunks
/// summarized in order, each seeing the previous chunk's summary.
pub fn summarize_hour(
    day: &DayRecord,
    hour: u32,
    prev: Option<&InferenceResult>,
    client: &dyn LlmClient,
    cfg: &LlmConfig,
    enc: &EncoderConfig,
) -> Result<InferenceResult, LlmError> {
    let (start, end) = day.frame.hour_bounds(day.date, hour);
    let window = TimeWindow::new(start, end);
    let narrative = assemble_hour(day, hour, enc);
    let mut history = prev.map(|p| p.fields.summary_text().to_string()).unwrap_or_else(|| NO_PRIOR_SUMMARY.into());

    let budget = context_budget(client, cfg);
    let whole = hourly_prompt(day, window, &narrative, &history, cfg);
    let chunks = if whole.token_estimate <= budget {
        vec![narrative]
    } else {
        let overhead = hourly_prompt(day, window, &Narrative::default(), &history, cfg).token_estimate;
        let limit = budget.saturating_sub(overhead + HISTORY_SLACK_TOKENS);
        chunk(&narrative, limit, &CharsPerToken::default())?
    };

    let (mut input, mut output, mut attempts) = (0, 0, 0);
    let mut last = None;
    for part in &chunks {
        let bundle = hourly_prompt(day, window, part, &history, cfg);
        let out = call_validated(client, &bundle.render(), OutputSchema::Hourly, cfg).map_err(|(e, _, _)| e)?;
        input += out.input_tokens;
        output += out.output_tokens;
        attempts = attempts.max(out.attempts);
        let f = fields(out.parsed);
        history = f.summary_text().to_string();
        last = Some(f);
    }
    Ok(InferenceResult {
        kind: InferenceKind::Hourly,
        fields: last.expect("at least one chunk"),
        window,
        input_tokens: input,
        output_tokens: output,
        attempts,
    })
}

/// The Day-in-a-Glance: one paragraph plus bullets over the hourly results.
/// Token counts cover this call only, so day totals stay additive.
pub fn summarize_day(
    day: &DayRecord,
    hourly: &[InferenceResult],
    client: &dyn LlmClient,
    cfg: &LlmConfig,
) -> Result<InferenceResult, LlmError> {
    if hourly.is_empty() {
        return Err(LlmError::EmptyInput);
    }
    let bundle = build_daily_prompt(day, hourly, cfg);
    let out = call_validated(client, &bundle.render(), OutputSchema::Daily, cfg).map_err(|(e, _, _)| e)?;
    let (s, e) = day.bounds();
    Ok(InferenceResult {
        kind: InferenceKind::Daily,
        fields: fields(out.parsed),
        window: TimeWindow::new(s, e),
        input_tokens: out.input_tokens,
        output_tokens: out.output_tokens,
        attempts: out.attempts,
    })
}

/// The occurrence window widened by `pad_minutes` on both sides.
pub fn occurrence_data_window(occ: &Occurrence, pad_minutes: u32) -> TimeWindow {
    let pad = Duration::minutes(i64::from(pad_minutes));
    TimeWindow::new(occ.window.start - pad, occ.window.end + pad)
}

/// Explain one occurrence from every modality around it and attach the
/// explanation to the occurrence.
pub fn explain_occurrence(
    occ: &mut Occurrence,
    day: &DayRecord,
    client: &dyn LlmClient,
    cfg: &LlmConfig,
    enc: &EncoderConfig,
) -> Result<InferenceResult, LlmError> {
    let w = occurrence_data_window(occ, cfg.pad_minutes);
    let (narrative, _) = assemble_window(day, w.start, w.end, enc);
    let bundle = build_occurrence_prompt(day, occ, w, &narrative, cfg);
    let out = call_validated(client, &bundle.render(), OutputSchema::Occurrence, cfg).map_err(|(e, _, _)| e)?;
    let f = fields(out.parsed);
    if let InferenceFields::Occurrence {
        title,
        explanation,
        sources_used,
    } = &f
    {
        occ.explanation = Some(Explanation {
            title: title.clone(),
            text: explanation.clone(),
            sources_used: sources_used.clone(),
        });
    }
    Ok(InferenceResult {
        kind: InferenceKind::OccurrenceExplanation,
        fields: f,
        window: occ.window,
        input_tokens: out.input_tokens,
        output_tokens: out.output_tokens,
        attempts: out.attempts,
    })
}

/// Ask the model directly for anomalous ranges in one physiological stream.
/// Ranges come back exactly as the model wrote them. Output that never
/// parses yields an empty list and a warning.
pub fn raw_anomaly_probe(
    day: &DayRecord,
    kind: StreamKind,
    client: &dyn LlmClient,
    cfg: &LlmConfig,
    enc: &EncoderConfig,
) -> Result<(Vec<AnomalyRange>, CallUsage), LlmError> {
    if !matches!(kind, StreamKind::HeartRate | StreamKind::Respiration) {
        return Err(LlmError::UnsupportedKind);
    }
    let mut usage = CallUsage {
        purpose: format!("anomaly:{}", kind.as_str()),
        input_tokens: 0,
        output_tokens: 0,
        attempts: 0,
    };
    let Some(stream) = day.stream(kind) else {
        return Ok((Vec::new(), usage));
    };
    let narrative = scrub_identifiers(&encode_stream(stream, &day.frame, enc), day).0;
    if narrative.is_empty() {
        return Ok((Vec::new(), usage));
    }
    let bundle = build_anomaly_prompt(day, &narrative, cfg);
    match call_validated(client, &bundle.render(), OutputSchema::Anomaly, cfg) {
        Ok(out) => {
            usage.input_tokens = out.input_tokens;
            usage.output_tokens = out.output_tokens;
            usage.attempts = out.attempts;
            match out.parsed {
                ParsedOutput::Anomalies(r) => Ok((r, usage)),
                ParsedOutput::Fields(_) => unreachable!("anomaly schema produced text fields"),
            }
        }
        Err((LlmError::MaxRetriesExceeded { attempts, last }, i, o)) => {
            tracing::warn!(attempts, %last, "anomaly ranges unparseable; returning none");
            usage.input_tokens = i;
            usage.output_tokens = o;
            usage.attempts = attempts;
            Ok((Vec::new(), usage))
        }
        Err((e, _, _)) => Err(e),
    }
}

fn has_checkin(day: &DayRecord, start: Timestamp, end: Timestamp) -> bool {
    day.checkins
        .iter()
        .any(|c| (c.start < end && c.end > start) || c.start == start)
}

fn usage(purpose: String, r: &InferenceResult) -> CallUsage {
    CallUsage {
        purpose,
        input_tokens: r.input_tokens,
        output_tokens: r.output_tokens,
        attempts: r.attempts,
    }
}

/// The whole day: detectors, baselines and outliers from `history`, hourly
/// summaries (hours with neither data nor check-ins are skipped), the
/// Day-in-a-Glance, and occurrence explanations. An occurrence whose
/// explanation fails validation stays pending; other errors abort.
pub fn analyze_day(
    day: &DayRecord,
    history: &[DayRecord],
    client: &dyn LlmClient,
    cfg: &AppConfig,
) -> Result<DayAnalysis, LlmError> {
    let mut occurrences = detect_all(day, &cfg.occurrences);

    let mut trendlines = Vec::new();
    let mut outliers = Vec::new();
    for kind in [StreamKind::HeartRate, StreamKind::Respiration] {
        if let Ok(t) = compute_baseline_trendline(history, kind) {
            outliers.extend(flag_outliers(day, &t, &cfg.occurrences));
            trendlines.push(t);
        }
    }

    let mut usage_log = Vec::new();
    let mut hourly: Vec<InferenceResult> = Vec::new();
    for hour in 0..24 {
        let (s, e) = day.frame.hour_bounds(day.date, hour);
        if assemble_hour(day, hour, &cfg.encoder).is_empty() && !has_checkin(day, s, e) {
            continue;
        }
        let r = summarize_hour(day, hour, hourly.last(), client, &cfg.llm, &cfg.encoder)?;
        usage_log.push(usage(format!("hourly:{hour:02}"), &r));
        hourly.push(r);
    }

    let glance = if hourly.is_empty() {
        None
    } else {
        let g = summarize_day(day, &hourly, client, &cfg.llm)?;
        usage_log.push(usage("daily".into(), &g));
        Some(g)
    };

    for (i, occ) in occurrences.iter_mut().enumerate() {
        match explain_occurrence(occ, day, client, &cfg.llm, &cfg.encoder) {
            Ok(r) => usage_log.push(usage(format!("occurrence:{i}"), &r)),
            Err(LlmError::MaxRetriesExceeded { attempts, last }) => {
                tracing::warn!(occurrence = %occ.title, attempts, %last, "explanation left pending");
            }
            Err(e) => return Err(e),
        }
    }

    Ok(DayAnalysis {
        occurrences,
        outliers,
        trendlines,
        hourly,
        glance,
        usage: usage_log,
    })
}
