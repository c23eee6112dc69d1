use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::llm::Prices;

use super::{EvalError, EvalReport};

/// Token totals for one day of pipeline calls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayTokens {
    pub input_tokens: f64,
    pub output_tokens: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LogLine {
    #[serde(default)]
    date: Option<String>,
    #[serde(default)]
    purpose: Option<String>,
    input_tokens: f64,
    output_tokens: f64,
}

/// Line-delimited `{"date"?, "purpose"?, "input_tokens", "output_tokens"}`.
/// Lines sharing a date are summed into that day; undated lines are each
/// their own day.
pub fn parse_token_log(text: &str) -> Result<Vec<DayTokens>, EvalError> {
    let mut dated: BTreeMap<String, DayTokens> = BTreeMap::new();
    let mut undated = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: LogLine = serde_json::from_str(line).map_err(|e| EvalError::Invalid(format!("line {}: {e}", i + 1)))?;
        let _ = l.purpose;
        if l.input_tokens < 0.0 || l.output_tokens < 0.0 {
            return Err(EvalError::Invalid(format!("line {}: negative token count", i + 1)));
        }
        let t = DayTokens {
            input_tokens: l.input_tokens,
            output_tokens: l.output_tokens,
        };
        match l.date {
            Some(d) => {
                let e = dated.entry(d).or_insert(DayTokens {
                    input_tokens: 0.0,
                    output_tokens: 0.0,
                });
                e.input_tokens += t.input_tokens;
                e.output_tokens += t.output_tokens;
            }
            None => undated.push(t),
        }
    }
    Ok(dated.into_values().chain(undated).collect())
}

/// Daily and annual cost from per-day token totals and per-1k prices.
pub fn cost_report(log: &[DayTokens], prices: &Prices) -> Result<EvalReport, EvalError> {
    if prices.input_per_1k < 0.0 || prices.output_per_1k < 0.0 {
        return Err(EvalError::Invalid("prices must be non-negative".into()));
    }
    let days = log.len() as f64;
    let total_in: f64 = log.iter().map(|d| d.input_tokens).sum();
    let total_out: f64 = log.iter().map(|d| d.output_tokens).sum();
    let total = total_in / 1000.0 * prices.input_per_1k + total_out / 1000.0 * prices.output_per_1k;
    let per_day = if log.is_empty() { 0.0 } else { total / days };
    let avg = |x: f64| if log.is_empty() { 0.0 } else { x / days };
    Ok(EvalReport::new("cost")
        .with("days", days)
        .with("input_tokens_total", total_in)
        .with("output_tokens_total", total_out)
        .with("input_tokens_per_day", avg(total_in))
        .with("output_tokens_per_day", avg(total_out))
        .with("cost_total", total)
        .with("cost_per_day", per_day)
        .with("cost_per_year", per_day * 365.0))
}
