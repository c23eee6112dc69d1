use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{mean, sample_sd, tfidf_cosine_matrix, EvalError, EvalReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarySet {
    pub date: NaiveDate,
    pub texts: Vec<String>,
}

/// Mean and SD of similarity over all `N(N-1)/2` distinct pairs.
pub fn consistency_report(set: &SummarySet) -> Result<EvalReport, EvalError> {
    let m = tfidf_cosine_matrix(&set.texts)?;
    let mut sims = Vec::new();
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            sims.push(m[i][j]);
        }
    }
    Ok(EvalReport::new(format!("consistency {}", set.date))
        .with("pairs", sims.len() as f64)
        .with("mean", mean(&sims))
        .with("sd", sample_sd(&sims))
        .with("n", set.texts.len() as f64))
}
