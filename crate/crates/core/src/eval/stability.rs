use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::llm::AnomalyRange;

use super::{mean, sample_sd, EvalError, EvalReport};

/// A named range in minutes after local midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: f64,
    pub end: f64,
    pub label: String,
}

pub type RangeRun = Vec<TimeRange>;

/// `HH:MM` to minutes after midnight.
pub fn clock_minutes(s: &str) -> Option<f64> {
    let (h, m) = s.split_once(':')?;
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    (h < 24 && m < 60).then(|| f64::from(h * 60 + m))
}

impl TryFrom<&AnomalyRange> for TimeRange {
    type Error = EvalError;
    fn try_from(r: &AnomalyRange) -> Result<Self, EvalError> {
        let bad = || EvalError::Invalid(format!("range {}-{}", r.start, r.end));
        Ok(TimeRange {
            start: clock_minutes(&r.start).ok_or_else(bad)?,
            end: clock_minutes(&r.end).ok_or_else(bad)?,
            label: r.label.clone(),
        })
    }
}

/// Spread of repeated runs over the same input. Ranges are matched by rank
/// after sorting each run by start; the start and end SDs are the mean of
/// the per-rank sample SDs over ranks present in at least two runs. All
/// values are in minutes except the counts.
pub fn stability_report(runs: &[RangeRun]) -> Result<EvalReport, EvalError> {
    if runs.len() < 2 {
        return Err(EvalError::TooFew {
            needed: 2,
            got: runs.len(),
        });
    }
    let sorted: Vec<Vec<&TimeRange>> = runs
        .iter()
        .map(|r| {
            let mut v: Vec<&TimeRange> = r.iter().collect();
            v.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
            v
        })
        .collect();
    let counts: Vec<f64> = runs.iter().map(|r| r.len() as f64).collect();
    let max_rank = runs.iter().map(Vec::len).max().unwrap_or(0);
    let (mut start_sds, mut end_sds) = (Vec::new(), Vec::new());
    for rank in 0..max_rank {
        let at: Vec<&TimeRange> = sorted.iter().filter_map(|r| r.get(rank).copied()).collect();
        if at.len() >= 2 {
            start_sds.push(sample_sd(&at.iter().map(|r| r.start).collect::<Vec<_>>()));
            end_sds.push(sample_sd(&at.iter().map(|r| r.end).collect::<Vec<_>>()));
        }
    }
    Ok(EvalReport::new("stability")
        .with("runs", runs.len() as f64)
        .with("count_mean", mean(&counts))
        .with("count_sd", sample_sd(&counts))
        .with("start_sd_min", mean(&start_sds))
        .with("end_sd_min", mean(&end_sds))
        .with("ranks_compared", start_sds.len() as f64))
}

/// One CSV row per range (`day,run,start,end,label`), ready to draw as
/// horizontal lines.
pub fn write_plot_data(path: &Path, days: &[(String, Vec<RangeRun>)]) -> Result<(), EvalError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "day,run,start,end,label")?;
    for (day, runs) in days {
        for (i, run) in runs.iter().enumerate() {
            for r in run {
                writeln!(f, "{day},{i},{},{},\"{}\"", r.start, r.end, r.label.replace('"', "'"))?;
            }
        }
    }
    f.flush()?;
    Ok(())
}
