use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{mean, sample_sd, EvalError, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactSource {
    Llm,
    Expert,
}

impl FactSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FactSource::Llm => "llm",
            FactSource::Expert => "expert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactLabel {
    Correct,
    Wrong,
    Unclear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fact {
    pub text: String,
    pub label: FactLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactLedger {
    pub date: Option<NaiveDate>,
    pub source: FactSource,
    pub token_count: u64,
    pub facts: Vec<Fact>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    source: FactSource,
    token_count: u64,
    #[serde(default)]
    date: Option<NaiveDate>,
}

/// Line-delimited ledgers: a `{"source","token_count"[,"date"]}` header
/// followed by `{"text","label"}` lines. Each header starts a new ledger.
pub fn parse_ledgers(text: &str) -> Result<Vec<FactLedger>, EvalError> {
    let mut out: Vec<FactLedger> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| EvalError::Invalid(format!("line {}: {e}", i + 1)))?;
        if v.get("source").is_some() {
            let h: Header =
                serde_json::from_value(v).map_err(|e| EvalError::Invalid(format!("line {}: {e}", i + 1)))?;
            out.push(FactLedger {
                date: h.date,
                source: h.source,
                token_count: h.token_count,
                facts: Vec::new(),
            });
        } else {
            let f: Fact = serde_json::from_value(v).map_err(|e| EvalError::Invalid(format!("line {}: {e}", i + 1)))?;
            out.last_mut()
                .ok_or_else(|| EvalError::Invalid(format!("line {}: fact before any header", i + 1)))?
                .facts
                .push(f);
        }
    }
    Ok(out)
}

/// Per source: the share of correct, wrong and unclear facts over all of
/// its ledgers, and fact density (facts per summary token, as a percent)
/// averaged over ledgers.
pub fn fact_metrics(ledgers: &[FactLedger]) -> Result<EvalReport, EvalError> {
    if ledgers.is_empty() {
        return Err(EvalError::TooFew { needed: 1, got: 0 });
    }
    for (i, l) in ledgers.iter().enumerate() {
        if l.facts.is_empty() {
            return Err(EvalError::EmptyLedger(i));
        }
        if l.token_count == 0 {
            return Err(EvalError::Invalid(format!("ledger {i} has token_count 0")));
        }
    }
    let mut report = EvalReport::new("facts");
    for source in [FactSource::Llm, FactSource::Expert] {
        let mine: Vec<&FactLedger> = ledgers.iter().filter(|l| l.source == source).collect();
        if mine.is_empty() {
            continue;
        }
        let count = |label| mine.iter().flat_map(|l| &l.facts).filter(|f| f.label == label).count() as f64;
        let (c, w, u) = (count(FactLabel::Correct), count(FactLabel::Wrong), count(FactLabel::Unclear));
        let total = c + w + u;
        let densities: Vec<f64> = mine
            .iter()
            .map(|l| l.facts.len() as f64 / l.token_count as f64 * 100.0)
            .collect();
        let s = source.as_str();
        report.set(format!("{s}.facts"), total);
        report.set(format!("{s}.correct"), c);
        report.set(format!("{s}.wrong"), w);
        report.set(format!("{s}.unclear"), u);
        report.set(format!("{s}.correct_pct"), c / total * 100.0);
        report.set(format!("{s}.wrong_pct"), w / total * 100.0);
        report.set(format!("{s}.unclear_pct"), u / total * 100.0);
        report.set(format!("{s}.density_mean_pct"), mean(&densities));
        report.set(format!("{s}.density_sd_pct"), sample_sd(&densities));
        report.set(format!("{s}.ledgers"), mine.len() as f64);
    }
    Ok(report)
}
