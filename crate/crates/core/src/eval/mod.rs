//! Offline evaluation: summary consistency via TF-IDF cosine similarity,
//! stability of model-named anomaly ranges, fact accuracy and density, and
//! API cost accounting.

mod consistency;
mod cost;
mod facts;
mod report;
mod stability;
mod tfidf;

pub use consistency::{consistency_report, SummarySet};
pub use cost::{cost_report, parse_token_log, DayTokens};
pub use facts::{fact_metrics, parse_ledgers, Fact, FactLabel, FactLedger, FactSource};
pub use report::EvalReport;
pub use stability::{clock_minutes, stability_report, write_plot_data, RangeRun, TimeRange};
pub use tfidf::{tfidf_cosine_matrix, tokenize};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("document {0} has no terms")]
    DegenerateCorpus(usize),
    #[error("need at least {needed} inputs, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("ledger {0} has no facts")]
    EmptyLedger(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}
