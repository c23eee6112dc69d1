//! Deterministic stand-in for a hosted model.
//!
//! Output depends only on the seed, the prompt and (for flaky and scripted
//! modes) the call count, so whole-day pipeline runs are reproducible.

use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::encoder::estimate_tokens;

use super::{Completion, LlmClient, LlmError, OutputSchema};

#[derive(Debug, Clone, PartialEq)]
pub enum MockMode {
    /// Schema-conforming output embedding a digest of seed and prompt.
    EchoStructured,
    /// Responses returned in order, cycling when exhausted.
    Scripted(Vec<String>),
    /// The first `k` calls return a too-short reply, then echo.
    Flaky(usize),
    /// Prompt-grounded text with per-word dropout `p`, and randomly placed
    /// anomaly ranges. Different seeds model independent runs.
    Stochastic { dropout: f64 },
    /// Every call fails as if the endpoint were down.
    Down,
}

#[derive(Debug)]
pub struct MockLlm {
    seed: u64,
    mode: MockMode,
    calls: AtomicUsize,
    max_context: usize,
}

impl MockLlm {
    pub fn new(seed: u64, mode: MockMode) -> Self {
        Self {
            seed,
            mode,
            calls: AtomicUsize::new(0),
            max_context: 128_000,
        }
    }

    pub fn echo(seed: u64) -> Self {
        Self::new(seed, MockMode::EchoStructured)
    }

    pub fn scripted<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::new(0, MockMode::Scripted(responses.into_iter().map(Into::into).collect()))
    }

    pub fn flaky(seed: u64, k: usize) -> Self {
        Self::new(seed, MockMode::Flaky(k))
    }

    pub fn stochastic(seed: u64, dropout: f64) -> Self {
        Self::new(seed, MockMode::Stochastic { dropout })
    }

    pub fn with_max_context(mut self, tokens: usize) -> Self {
        self.max_context = tokens;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn digest(&self, prompt: &str) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(prompt.as_bytes());
        h.finalize().into()
    }

    fn respond(&self, prompt: &str, call: usize) -> Result<String, LlmError> {
        match &self.mode {
            MockMode::Down => Err(LlmError::Unavailable("mock endpoint down".into())),
            MockMode::Scripted(r) if r.is_empty() => Err(LlmError::Unavailable("empty script".into())),
            MockMode::Scripted(r) => Ok(r[call % r.len()].clone()),
            MockMode::Flaky(k) if call < *k => Ok("ok".into()),
            MockMode::Flaky(_) | MockMode::EchoStructured => Ok(self.echo_reply(prompt)),
            MockMode::Stochastic { dropout } => Ok(self.stochastic_reply(prompt, *dropout)),
        }
    }

    fn echo_reply(&self, prompt: &str) -> String {
        let tag = hex::encode(&self.digest(prompt)[..8]);
        let facts = PromptFacts::read(prompt);
        let window = facts.window_text();
        let sources = facts.sources_text();
        let v = match facts.schema {
            OutputSchema::Hourly => json!({
                "summary": format!("Hourly summary {tag} for {window} based on {sources}."),
                "inference": format!("Behavior between {window} inferred from {sources}."),
                "questions": [format!("What was the person doing between {window}?")],
            }),
            OutputSchema::Daily => json!({
                "summary": format!("Day summary {tag}: the person had a **typical day** across {} reported hours.", facts.hourly_lines),
                "bullets": [format!("**Summary {tag}** aggregated from the hourly reports.")],
            }),
            OutputSchema::Occurrence => json!({
                "title": facts.occurrence_title.clone().unwrap_or_else(|| "Occurrence".into()),
                "explanation": format!("Explanation {tag} for {window} based on {sources}."),
                "sources_used": facts.source_list(),
            }),
            OutputSchema::Anomaly => {
                let ranges: Vec<_> = match (facts.first_clock_in_data, facts.last_clock_in_data) {
                    (Some(a), Some(b)) => vec![json!({"start": a, "end": b, "label": "unusual values"})],
                    _ => vec![],
                };
                json!({ "anomalies": ranges })
            }
        };
        v.to_string()
    }

    fn stochastic_reply(&self, prompt: &str, dropout: f64) -> String {
        let mut rng = ChaCha8Rng::from_seed(self.digest(prompt));
        let facts = PromptFacts::read(prompt);
        let mut drop = |text: &str| -> String {
            let words: Vec<&str> = text.split_whitespace().collect();
            let kept: Vec<&str> = words.iter().copied().filter(|_| !rng.gen_bool(dropout.clamp(0.0, 1.0))).collect();
            if kept.is_empty() {
                words.first().copied().unwrap_or("nothing").to_string()
            } else {
                kept.join(" ")
            }
        };
        let grounding = facts.grounding();
        let v = match facts.schema {
            OutputSchema::Hourly => json!({
                "summary": drop(&grounding),
                "inference": drop(&format!("Behavior inferred from {}.", facts.sources_text())),
                "questions": [],
            }),
            OutputSchema::Daily => json!({
                "summary": drop(&grounding),
                "bullets": [drop("**Daily overview** of the reported hours.")],
            }),
            OutputSchema::Occurrence => json!({
                "title": facts.occurrence_title.clone().unwrap_or_else(|| "Occurrence".into()),
                "explanation": drop(&grounding),
                "sources_used": facts.source_list(),
            }),
            OutputSchema::Anomaly => {
                let (lo, hi) = facts.window_minutes();
                let n = rng.gen_range(1..=3);
                let mut ranges = Vec::new();
                for _ in 0..n {
                    let len = rng.gen_range(10..=60).min((hi - lo).max(1));
                    let start = rng.gen_range(lo..=(hi - len).max(lo));
                    ranges.push(json!({
                        "start": clock(start),
                        "end": clock(start + len),
                        "label": "unusual values",
                    }));
                }
                json!({ "anomalies": ranges })
            }
        };
        v.to_string()
    }
}

fn clock(minutes: i64) -> String {
    let m = minutes.clamp(0, 24 * 60 - 1);
    format!("{:02}:{:02}", m / 60, m % 60)
}

/// What the mock needs from a rendered prompt.
struct PromptFacts {
    schema: OutputSchema,
    window: Option<(String, String)>,
    sources: Vec<String>,
    occurrence_title: Option<String>,
    hourly_lines: usize,
    first_clock_in_data: Option<String>,
    last_clock_in_data: Option<String>,
    data_lines: Vec<String>,
    history: Vec<String>,
}

impl PromptFacts {
    fn read(prompt: &str) -> Self {
        let mut section = "";
        let mut facts = PromptFacts {
            schema: OutputSchema::Hourly,
            window: None,
            sources: Vec::new(),
            occurrence_title: None,
            hourly_lines: 0,
            first_clock_in_data: None,
            last_clock_in_data: None,
            data_lines: Vec::new(),
            history: Vec::new(),
        };
        for line in prompt.lines() {
            if let Some(h) = line.strip_prefix("## ") {
                section = match h {
                    "Data" => "data",
                    "Historical Summary" => "history",
                    _ => "",
                };
                continue;
            }
            if let Some(s) = line.strip_prefix("Output schema: ") {
                if let Ok(s) = s.parse() {
                    facts.schema = s;
                }
            } else if let Some(w) = line.strip_prefix("Time window: ") {
                if let Some((a, b)) = w.split_once(" to ") {
                    facts.window = Some((a.to_string(), b.to_string()));
                }
            } else if let Some(s) = line.strip_prefix("Data sources: ") {
                facts.sources = s
                    .split(", ")
                    .filter(|x| *x != "none" && !x.is_empty())
                    .map(str::to_string)
                    .collect();
            } else if let Some(o) = line.strip_prefix("Occurrence: ") {
                facts.occurrence_title = o.split('"').nth(1).map(str::to_string);
            } else if section == "data" {
                facts.data_lines.push(line.to_string());
                for word in line.split(|c: char| !(c.is_ascii_digit() || c == ':')) {
                    if word.len() == 5 && NaiveTime::parse_from_str(word, "%H:%M").is_ok() {
                        facts.first_clock_in_data.get_or_insert_with(|| word.to_string());
                        facts.last_clock_in_data = Some(word.to_string());
                    }
                }
            } else if section == "history" && !line.trim().is_empty() {
                facts.history.push(line.to_string());
                if line.contains(" summary: ") {
                    facts.hourly_lines += 1;
                }
            }
        }
        facts
    }

    fn window_text(&self) -> String {
        match &self.window {
            Some((a, b)) => format!("{a} and {b}"),
            None => "the day".into(),
        }
    }

    fn window_minutes(&self) -> (i64, i64) {
        let parse = |s: &str| {
            NaiveTime::parse_from_str(s, "%H:%M")
                .map(|t| i64::from(chrono::Timelike::num_seconds_from_midnight(&t)) / 60)
                .ok()
        };
        match &self.window {
            Some((a, b)) => {
                let lo = parse(a).unwrap_or(0);
                let hi = parse(b).unwrap_or(24 * 60 - 1);
                if hi > lo {
                    (lo, hi)
                } else {
                    (0, 24 * 60 - 1)
                }
            }
            None => (0, 24 * 60 - 1),
        }
    }

    fn source_list(&self) -> Vec<String> {
        if self.sources.is_empty() {
            vec!["user_profile".into()]
        } else {
            self.sources.clone()
        }
    }

    fn sources_text(&self) -> String {
        if self.sources.is_empty() {
            "no sensor data".into()
        } else {
            self.sources.join(", ")
        }
    }

    /// Prompt-derived text that is identical across seeds.
    fn grounding(&self) -> String {
        let body = if self.schema == OutputSchema::Daily {
            &self.history
        } else {
            &self.data_lines
        };
        let words: Vec<&str> = body.iter().flat_map(|l| l.split_whitespace()).take(400).collect();
        format!("Between {} the data shows {}", self.window_text(), words.join(" "))
    }
}

impl LlmClient for MockLlm {
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self.respond(prompt, call)?;
        Ok(Completion {
            input_tokens: estimate_tokens(prompt) as u64,
            output_tokens: estimate_tokens(&text) as u64,
            text,
        })
    }

    fn max_context_tokens(&self) -> usize {
        self.max_context
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{validate_output, ParsedOutput};

    const PROMPT: &str = "## Data\nTime window: 10:00 to 11:00\nData sources: heart_rate, steps\nThe person's heart rate from 10:00 to 10:09 (60-second interval) is [70, 71].\n\n## Output Format\nOutput schema: hourly";

    #[test]
    fn echo_is_deterministic_and_valid() {
        let a = MockLlm::echo(7).complete(PROMPT).unwrap();
        let b = MockLlm::echo(7).complete(PROMPT).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.text, MockLlm::echo(8).complete(PROMPT).unwrap().text);
        assert!(validate_output(&a.text, OutputSchema::Hourly).is_ok());
        assert_eq!(a.input_tokens, estimate_tokens(PROMPT) as u64);
    }

    #[test]
    fn flaky_then_valid() {
        let m = MockLlm::flaky(1, 2);
        assert_eq!(m.complete(PROMPT).unwrap().text, "ok");
        assert_eq!(m.complete(PROMPT).unwrap().text, "ok");
        assert!(validate_output(&m.complete(PROMPT).unwrap().text, OutputSchema::Hourly).is_ok());
        assert_eq!(m.calls(), 3);
    }

    #[test]
    fn scripted_cycles() {
        let m = MockLlm::scripted(["a", "b"]);
        let got: Vec<String> = (0..3).map(|_| m.complete("x").unwrap().text).collect();
        assert_eq!(got, vec!["a", "b", "a"]);
    }

    #[test]
    fn stochastic_without_dropout_ignores_seed() {
        let a = MockLlm::stochastic(1, 0.0).complete(PROMPT).unwrap().text;
        let b = MockLlm::stochastic(2, 0.0).complete(PROMPT).unwrap().text;
        assert_eq!(a, b);
        let c = MockLlm::stochastic(2, 0.5).complete(PROMPT).unwrap().text;
        assert!(c.len() < a.len());
    }

    #[test]
    fn stochastic_anomalies_in_window() {
        let p = PROMPT.replace("hourly", "anomaly");
        for seed in 0..20 {
            let t = MockLlm::stochastic(seed, 0.0).complete(&p).unwrap().text;
            let ParsedOutput::Anomalies(r) = validate_output(&t, OutputSchema::Anomaly).unwrap() else {
                panic!()
            };
            assert!((1..=3).contains(&r.len()));
            assert!(r.iter().all(|x| x.start.as_str() >= "10:00" && x.end.as_str() <= "11:00"));
        }
    }
}
