use serde::{Deserialize, Serialize};

use crate::model::{DayRecord, StreamKind, Timestamp};

use super::OccurrenceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourStat {
    pub hour: u32,
    pub mean: f64,
    /// Population standard deviation of the hour's samples.
    pub sd: f64,
    pub n: usize,
}

/// Per local hour-of-day baseline of a physiological stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trendline {
    pub kind: StreamKind,
    pub hours: Vec<HourStat>,
    pub window_days: usize,
}

impl Trendline {
    pub fn at_hour(&self, hour: u32) -> &HourStat {
        &self.hours[hour as usize % 24]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrendError {
    #[error("no {0} samples in the history")]
    NoData(StreamKind),
    #[error("trendlines are only computed for heart rate and respiration, not {0}")]
    UnsupportedKind(StreamKind),
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and spread per hour-of-day over all history samples. Hours without
/// data fall back to the global statistics with `n = 0`.
pub fn compute_baseline_trendline(history: &[DayRecord], kind: StreamKind) -> Result<Trendline, TrendError> {
    if !matches!(kind, StreamKind::HeartRate | StreamKind::Respiration) {
        return Err(TrendError::UnsupportedKind(kind));
    }
    let mut by_hour: Vec<Vec<f64>> = vec![Vec::new(); 24];
    let mut all = Vec::new();
    for day in history {
        if let Some(s) = day.samples(kind) {
            for x in &s.samples {
                by_hour[day.frame.local_hour(&x.t) as usize].push(x.v);
                all.push(x.v);
            }
        }
    }
    if all.is_empty() {
        return Err(TrendError::NoData(kind));
    }
    let (gmean, gsd) = mean_sd(&all);
    let hours = by_hour
        .iter()
        .enumerate()
        .map(|(h, vals)| {
            let (mean, sd) = if vals.is_empty() { (gmean, gsd) } else { mean_sd(vals) };
            HourStat {
                hour: h as u32,
                mean,
                sd,
                n: vals.len(),
            }
        })
        .collect();
    Ok(Trendline {
        kind,
        hours,
        window_days: history.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierFlag {
    pub kind: StreamKind,
    pub at: Timestamp,
    /// Signed deviation in per-hour standard deviations.
    pub z: f64,
    /// Number of flagged samples coalesced into this flag.
    pub count: usize,
}

/// Samples deviating more than `outlier_k` hourly SDs from the baseline.
/// Flags closer than `outlier_coalesce_minutes` to the previous flag merge;
/// the merged flag reports the strongest deviation. Hours with zero spread
/// are not flagged.
pub fn flag_outliers(day: &DayRecord, trend: &Trendline, cfg: &OccurrenceConfig) -> Vec<OutlierFlag> {
    let Some(s) = day.samples(trend.kind) else {
        return Vec::new();
    };
    let window = i64::from(cfg.outlier_coalesce_minutes) * 60;
    let mut out: Vec<OutlierFlag> = Vec::new();
    let mut last_t: Option<Timestamp> = None;
    for x in &s.samples {
        let stat = trend.at_hour(day.frame.local_hour(&x.t));
        if stat.sd <= 0.0 {
            continue;
        }
        let dev = x.v - stat.mean;
        if dev.abs() <= cfg.outlier_k * stat.sd {
            continue;
        }
        let z = dev / stat.sd;
        match (out.last_mut(), last_t) {
            (Some(prev), Some(lt)) if (x.t - lt).num_seconds() <= window => {
                prev.count += 1;
                if z.abs() > prev.z.abs() {
                    prev.z = z;
                    prev.at = x.t;
                }
            }
            _ => out.push(OutlierFlag {
                kind: trend.kind,
                at: x.t,
                z,
                count: 1,
            }),
        }
        last_t = Some(x.t);
    }
    out
}
