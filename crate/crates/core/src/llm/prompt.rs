use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::encoder::{encode_checkin, estimate_tokens, scrub_text, Narrative};
use crate::model::{DayRecord, TimeWindow, Timestamp};
use crate::occurrence::Occurrence;

use super::{InferenceFields, InferenceResult, LlmConfig, OutputSchema};

/// Historical-summary text for the first hour of a day.
pub const NO_PRIOR_SUMMARY: &str = "No prior summary.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptSection {
    Goal,
    InterpretationGuidance,
    Data,
    UserProfile,
    UserCheckin,
    HistoricalSummary,
    OutputFormat,
}

impl PromptSection {
    pub const ALL: [PromptSection; 7] = [
        PromptSection::Goal,
        PromptSection::InterpretationGuidance,
        PromptSection::Data,
        PromptSection::UserProfile,
        PromptSection::UserCheckin,
        PromptSection::HistoricalSummary,
        PromptSection::OutputFormat,
    ];

    pub fn heading(self) -> &'static str {
        match self {
            PromptSection::Goal => "Goal",
            PromptSection::InterpretationGuidance => "Data Interpretation Guidance",
            PromptSection::Data => "Data",
            PromptSection::UserProfile => "User Profile",
            PromptSection::UserCheckin => "User Check-in",
            PromptSection::HistoricalSummary => "Historical Summary",
            PromptSection::OutputFormat => "Output Format",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub schema: OutputSchema,
    pub parts: Vec<(PromptSection, String)>,
    pub token_estimate: usize,
}

impl PromptBundle {
    fn new(schema: OutputSchema, day: &DayRecord, mut parts: Vec<(PromptSection, String)>) -> Self {
        // Every section, including configured text, crosses the scrub boundary.
        for (_, body) in &mut parts {
            *body = scrub_text(body, day).0;
        }
        let mut b = Self {
            schema,
            parts,
            token_estimate: 0,
        };
        b.token_estimate = estimate_tokens(&b.render());
        b
    }

    pub fn section(&self, s: PromptSection) -> Option<&str> {
        self.parts.iter().find(|(k, _)| *k == s).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.parts
            .iter()
            .map(|(k, v)| format!("## {}\n{}", k.heading(), v))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

fn output_format(schema: OutputSchema) -> String {
    format!(
        "Respond with one JSON object matching this layout and nothing else.\nOutput schema: {}\n{}",
        schema.as_str(),
        schema.example()
    )
}

fn profile_text(day: &DayRecord) -> String {
    let p = &day.profile;
    let mut lines = Vec::new();
    if !p.demographics.is_empty() {
        let d: Vec<String> = p.demographics.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        lines.push(format!("Demographics: {}", d.join(", ")));
    }
    if !p.known_places.is_empty() {
        let labels: Vec<&str> = p.known_places.iter().map(|k| k.label.as_str()).collect();
        lines.push(format!("Known places: {}", labels.join(", ")));
    }
    if !p.declared_routines.is_empty() {
        let r: Vec<String> = p
            .declared_routines
            .iter()
            .map(|r| format!("{} {}-{}", r.label, r.start.format("%H:%M"), r.end.format("%H:%M")))
            .collect();
        lines.push(format!("Declared routines: {}", r.join(", ")));
    }
    if lines.is_empty() {
        "No profile information.".into()
    } else {
        lines.join("\n")
    }
}

fn overlapping_checkins(day: &DayRecord, start: Timestamp, end: Timestamp) -> Vec<String> {
    day.checkins
        .iter()
        .filter(|c| (c.start < end && c.end > start) || c.start == start)
        .map(|c| encode_checkin(c, &day.frame).render())
        .collect()
}

fn data_sources(narrative: &Narrative, has_checkin: bool) -> Vec<&'static str> {
    let mut s: BTreeSet<&'static str> = narrative.segments.iter().map(|x| x.source.name()).collect();
    if has_checkin {
        s.insert("user_checkin");
    }
    s.into_iter().collect()
}

fn data_body(day: &DayRecord, start: Timestamp, end: Timestamp, narrative: &Narrative, has_checkin: bool) -> String {
    let sources = data_sources(narrative, has_checkin);
    let mut out = format!(
        "Time window: {} to {}\nData sources: {}\n",
        day.frame.clock(&start),
        day.frame.clock(&end),
        if sources.is_empty() { "none".to_string() } else { sources.join(", ") }
    );
    if narrative.is_empty() {
        out.push_str("No sensor data recorded in this window.");
    } else {
        out.push_str(&narrative.render());
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn windowed_prompt(
    schema: OutputSchema,
    day: &DayRecord,
    start: Timestamp,
    end: Timestamp,
    preamble: Option<String>,
    narrative: &Narrative,
    history: &str,
    cfg: &LlmConfig,
) -> PromptBundle {
    let checkins = overlapping_checkins(day, start, end);
    let mut data = data_body(day, start, end, narrative, !checkins.is_empty());
    if let Some(p) = preamble {
        data = format!("{p}\n{data}");
    }
    let checkin_text = if checkins.is_empty() {
        "No check-in during this window.".to_string()
    } else {
        checkins.join("\n")
    };
    PromptBundle::new(
        schema,
        day,
        vec![
            (PromptSection::Goal, cfg.goal.clone()),
            (PromptSection::InterpretationGuidance, cfg.guidance.clone()),
            (PromptSection::Data, data),
            (PromptSection::UserProfile, profile_text(day)),
            (PromptSection::UserCheckin, checkin_text),
            (PromptSection::HistoricalSummary, history.to_string()),
            (PromptSection::OutputFormat, output_format(schema)),
        ],
    )
}

/// Hourly prompt over an already assembled (and possibly chunked) narrative.
pub(crate) fn hourly_prompt(
    day: &DayRecord,
    window: TimeWindow,
    narrative: &Narrative,
    history: &str,
    cfg: &LlmConfig,
) -> PromptBundle {
    windowed_prompt(OutputSchema::Hourly, day, window.start, window.end, None, narrative, history, cfg)
}

/// All seven sections for pipeline hour `hour`. The historical summary is
/// the previous hour's summary, or [`NO_PRIOR_SUMMARY`].
pub fn build_hourly_prompt(
    day: &DayRecord,
    hour: u32,
    prev: Option<&InferenceResult>,
    cfg: &LlmConfig,
    enc: &crate::encoder::EncoderConfig,
) -> PromptBundle {
    let (start, end) = day.frame.hour_bounds(day.date, hour);
    let narrative = crate::encoder::assemble_hour(day, hour, enc);
    let history = prev.map(|p| p.fields.summary_text()).unwrap_or(NO_PRIOR_SUMMARY);
    hourly_prompt(day, TimeWindow::new(start, end), &narrative, history, cfg)
}

/// Aggregation prompt over the hourly results. Hours without a summary
/// are listed so the model knows they are missing rather than quiet.
pub fn build_daily_prompt(day: &DayRecord, hourly: &[InferenceResult], cfg: &LlmConfig) -> PromptBundle {
    let mut lines = Vec::new();
    for r in hourly {
        let (summary, inference) = match &r.fields {
            InferenceFields::Hourly { summary, inference, .. } => (summary.as_str(), inference.as_str()),
            other => (other.summary_text(), ""),
        };
        lines.push(format!(
            "{}-{} summary: {} Inference: {}",
            day.frame.clock(&r.window.start),
            day.frame.clock(&r.window.end),
            summary,
            inference
        ));
    }
    let missing: Vec<String> = (0..24u32)
        .map(|h| day.frame.hour_bounds(day.date, h).0)
        .filter(|s| !hourly.iter().any(|r| r.window.start == *s))
        .map(|s| day.frame.clock(&s))
        .collect();
    let mut data = format!(
        "Aggregate the {} hourly summaries under Historical Summary into a Day-in-a-Glance. Mark important activities in **bold**.",
        hourly.len()
    );
    if !missing.is_empty() {
        data.push_str(&format!("\nNo summary for the hours starting at: {}", missing.join(", ")));
    }
    let (ds, de) = day.bounds();
    let checkins = overlapping_checkins(day, ds, de);
    PromptBundle::new(
        OutputSchema::Daily,
        day,
        vec![
            (PromptSection::Goal, cfg.goal.clone()),
            (PromptSection::InterpretationGuidance, cfg.guidance.clone()),
            (PromptSection::Data, data),
            (PromptSection::UserProfile, profile_text(day)),
            (
                PromptSection::UserCheckin,
                if checkins.is_empty() {
                    "No check-in during this window.".into()
                } else {
                    checkins.join("\n")
                },
            ),
            (PromptSection::HistoricalSummary, lines.join("\n")),
            (PromptSection::OutputFormat, output_format(OutputSchema::Daily)),
        ],
    )
}

/// Explanation prompt: the occurrence and its evidence, then every
/// modality over the padded window.
pub fn build_occurrence_prompt(
    day: &DayRecord,
    occ: &Occurrence,
    data_window: TimeWindow,
    narrative: &Narrative,
    cfg: &LlmConfig,
) -> PromptBundle {
    let mut pre = format!(
        "Occurrence: {} \"{}\" from {} to {}",
        occ.kind.as_str(),
        occ.title,
        day.frame.clock(&occ.window.start),
        day.frame.clock(&occ.window.end)
    );
    for e in &occ.evidence {
        pre.push_str(&format!(
            "\nEvidence: {} {} to {} ({})",
            e.kind.as_str(),
            day.frame.clock(&e.window.start),
            day.frame.clock(&e.window.end),
            e.note
        ));
    }
    windowed_prompt(
        OutputSchema::Occurrence,
        day,
        data_window.start,
        data_window.end,
        Some(pre),
        narrative,
        NO_PRIOR_SUMMARY,
        cfg,
    )
}

/// Raw-narrative anomaly question over one physiological stream.
pub fn build_anomaly_prompt(day: &DayRecord, narrative: &Narrative, cfg: &LlmConfig) -> PromptBundle {
    let (ds, de) = day.bounds();
    windowed_prompt(
        OutputSchema::Anomaly,
        day,
        ds,
        de,
        Some("List the time ranges in which the values below look anomalous.".into()),
        narrative,
        NO_PRIOR_SUMMARY,
        cfg,
    )
}
