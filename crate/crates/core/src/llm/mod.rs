//! Prompt assembly, pluggable completion clients, output validation with
//! retry, and the per-day summarization pipeline.

mod client;
mod mock;
mod pipeline;
mod prompt;
mod validate;

use serde::{Deserialize, Serialize};

use crate::encoder::ChunkError;
use crate::model::TimeWindow;

pub use client::{Completion, LlmClient};
pub use mock::{MockLlm, MockMode};
pub use pipeline::{
    analyze_day, explain_occurrence, occurrence_data_window, raw_anomaly_probe, summarize_day, summarize_hour,
};
pub use prompt::{
    build_anomaly_prompt, build_daily_prompt, build_hourly_prompt, build_occurrence_prompt, PromptBundle,
    PromptSection, NO_PRIOR_SUMMARY,
};
pub use validate::{is_known_source, validate_output, AnomalyRange, OutputSchema, ParsedOutput, ValidationFailure, MIN_OUTPUT_TOKENS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    /// Dollars per 1000 input tokens.
    pub input_per_1k: f64,
    /// Dollars per 1000 output tokens.
    pub output_per_1k: f64,
}

impl Default for Prices {
    // Small-model list prices at the time of the deployment.
    fn default() -> Self {
        Self {
            input_per_1k: 0.000_15,
            output_per_1k: 0.000_6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub max_context_tokens: usize,
    /// Maximum attempts per call, first attempt included.
    pub max_retries: u32,
    /// Base delay between attempts, doubled each retry. Zero disables sleeping.
    pub retry_backoff_ms: u64,
    /// Tokens held back from the context budget for the response.
    pub output_reserve_tokens: usize,
    /// Minutes of context around an occurrence.
    pub pad_minutes: u32,
    pub prices: Prices,
    pub goal: String,
    pub guidance: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: "gpt-4o-mini".into(),
            max_context_tokens: 128_000,
            max_retries: 3,
            retry_backoff_ms: 0,
            output_reserve_tokens: 2_000,
            pad_minutes: 30,
            prices: Prices::default(),
            goal: DEFAULT_GOAL.into(),
            guidance: DEFAULT_GUIDANCE.into(),
        }
    }
}

// Placeholder wording; deployments replace both through configuration.
const DEFAULT_GOAL: &str = "You help a behavioral health expert make sense of one person's passively sensed data. \
Describe what the person was likely doing, grounded only in the data provided.";

const DEFAULT_GUIDANCE: &str = "Heart rate and respiration are sampled by a wearable; resting ranges differ between people. \
Step counts are per sampling interval. A locked phone with no steps and stationary activity often indicates rest or sleep. \
Missing data means the sensor was off or out of range, not that nothing happened. \
Location labels are the person's own names for places. Check-in conversations are the person's own words and take priority over inference.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceKind {
    Hourly,
    Daily,
    OccurrenceExplanation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "schema", rename_all = "snake_case")]
pub enum InferenceFields {
    Hourly {
        summary: String,
        inference: String,
        /// Kept for prompt fidelity; never served.
        questions: Vec<String>,
    },
    Daily {
        summary: String,
        bullets: Vec<String>,
    },
    Occurrence {
        title: String,
        explanation: String,
        sources_used: Vec<String>,
    },
}

impl InferenceFields {
    /// The text carried forward as historical context.
    pub fn summary_text(&self) -> &str {
        match self {
            InferenceFields::Hourly { summary, .. } | InferenceFields::Daily { summary, .. } => summary,
            InferenceFields::Occurrence { explanation, .. } => explanation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub kind: InferenceKind,
    pub fields: InferenceFields,
    pub window: TimeWindow,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub attempts: u32,
}

/// Token accounting for one logical call (all attempts and chunks).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallUsage {
    pub purpose: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("language model unavailable: {0}")]
    Unavailable(String),
    #[error("no valid output after {attempts} attempts: {last}")]
    MaxRetriesExceeded { attempts: u32, last: String },
    #[error("no hourly summaries to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error("anomaly probes cover heart rate and respiration only")]
    UnsupportedKind,
}
