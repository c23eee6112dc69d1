use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::encoder::estimate_tokens;
use crate::model::StreamKind;

use super::InferenceFields;

/// Outputs shorter than this are treated as failed generations.
pub const MIN_OUTPUT_TOKENS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSchema {
    Hourly,
    Daily,
    Occurrence,
    Anomaly,
}

impl OutputSchema {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputSchema::Hourly => "hourly",
            OutputSchema::Daily => "daily",
            OutputSchema::Occurrence => "occurrence",
            OutputSchema::Anomaly => "anomaly",
        }
    }

    /// The field layout shown to the model.
    pub fn example(self) -> &'static str {
        match self {
            OutputSchema::Hourly => {
                r#"{"summary": "<what happened this hour>", "inference": "<likely behavior or state>", "questions": ["<question for the expert>"]}"#
            }
            OutputSchema::Daily => {
                r#"{"summary": "<one paragraph; wrap important activities in **bold**>", "bullets": ["<key point with **bold** activity>"]}"#
            }
            OutputSchema::Occurrence => {
                r#"{"title": "<short title>", "explanation": "<detailed inference>", "sources_used": ["<stream kind, user_checkin or user_profile>"]}"#
            }
            OutputSchema::Anomaly => r#"{"anomalies": [{"start": "HH:MM", "end": "HH:MM", "label": "<what is unusual>"}]}"#,
        }
    }
}

impl FromStr for OutputSchema {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "hourly" => Ok(OutputSchema::Hourly),
            "daily" => Ok(OutputSchema::Daily),
            "occurrence" => Ok(OutputSchema::Occurrence),
            "anomaly" => Ok(OutputSchema::Anomaly),
            other => Err(format!("unknown output schema {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyRange {
    pub start: String,
    pub end: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedOutput {
    Fields(InferenceFields),
    Anomalies(Vec<AnomalyRange>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationFailure {
    #[error("output has {0} tokens, fewer than the minimum")]
    TooShort(usize),
    #[error("output is not the expected structure: {0}")]
    Malformed(String),
    #[error("required field {0} is empty")]
    EmptyField(&'static str),
    #[error("unknown data source {0:?}")]
    UnknownSource(String),
    #[error("bad clock time {0:?}")]
    BadTime(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HourlyOut {
    summary: String,
    inference: String,
    questions: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DailyOut {
    summary: String,
    bullets: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OccurrenceOut {
    title: String,
    explanation: String,
    sources_used: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnomalyOut {
    anomalies: Vec<AnomalyRange>,
}

fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T, ValidationFailure> {
    serde_json::from_str(strip_fence(text)).map_err(|e| ValidationFailure::Malformed(e.to_string()))
}

fn non_empty(name: &'static str, s: &str) -> Result<String, ValidationFailure> {
    if s.trim().is_empty() {
        Err(ValidationFailure::EmptyField(name))
    } else {
        Ok(s.to_string())
    }
}

/// Names a model may cite as evidence.
pub fn is_known_source(name: &str) -> bool {
    name == "user_checkin" || name == "user_profile" || name.parse::<StreamKind>().is_ok()
}

fn is_clock(s: &str) -> bool {
    chrono::NaiveTime::parse_from_str(s, "%H:%M").is_ok() && s.len() == 5
}

/// Strict structured parse, non-empty required fields, and the minimum
/// output length. Any failure sends the caller around its retry loop.
pub fn validate_output(text: &str, schema: OutputSchema) -> Result<ParsedOutput, ValidationFailure> {
    let tokens = estimate_tokens(text);
    if tokens < MIN_OUTPUT_TOKENS {
        return Err(ValidationFailure::TooShort(tokens));
    }
    match schema {
        OutputSchema::Hourly => {
            let o: HourlyOut = parse(text)?;
            Ok(ParsedOutput::Fields(InferenceFields::Hourly {
                summary: non_empty("summary", &o.summary)?,
                inference: non_empty("inference", &o.inference)?,
                questions: o.questions,
            }))
        }
        OutputSchema::Daily => {
            let o: DailyOut = parse(text)?;
            Ok(ParsedOutput::Fields(InferenceFields::Daily {
                summary: non_empty("summary", &o.summary)?,
                bullets: o.bullets,
            }))
        }
        OutputSchema::Occurrence => {
            let o: OccurrenceOut = parse(text)?;
            if o.sources_used.is_empty() {
                return Err(ValidationFailure::EmptyField("sources_used"));
            }
            if let Some(bad) = o.sources_used.iter().find(|s| !is_known_source(s)) {
                return Err(ValidationFailure::UnknownSource(bad.clone()));
            }
            Ok(ParsedOutput::Fields(InferenceFields::Occurrence {
                title: non_empty("title", &o.title)?,
                explanation: non_empty("explanation", &o.explanation)?,
                sources_used: o.sources_used,
            }))
        }
        OutputSchema::Anomaly => {
            let o: AnomalyOut = parse(text)?;
            for r in &o.anomalies {
                for t in [&r.start, &r.end] {
                    if !is_clock(t) {
                        return Err(ValidationFailure::BadTime(t.clone()));
                    }
                }
            }
            Ok(ParsedOutput::Anomalies(o.anomalies))
        }
    }
}
