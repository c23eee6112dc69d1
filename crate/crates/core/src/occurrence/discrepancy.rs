//! Cross-modal consistency rules.
//!
//! A rule pairs an *anchor* (intervals of one label, e.g. stationary activity)
//! with a *probe* measured from a sampled stream (raw step counts, battery
//! drain per hour). A probe window that lies inside an anchor interval and
//! passes the comparison is a hit; each anchor interval with hits yields one
//! discrepancy spanning its hits.

use serde::{Deserialize, Serialize};

use crate::model::{DayRecord, StreamKind, TimeWindow};

use super::{Evidence, Occurrence, OccurrenceConfig, OccurrenceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMeasure {
    /// The sample value over `[t, t + nominal_interval]`.
    Value,
    /// Decrease per hour between consecutive samples, over `[t_i, t_{i+1}]`.
    DropPerHour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Gt,
    Ge,
}

impl Comparison {
    pub fn holds(self, x: f64, threshold: f64) -> bool {
        match self {
            Comparison::Gt => x > threshold,
            Comparison::Ge => x >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRule {
    pub name: String,
    pub title: String,
    pub anchor_kind: StreamKind,
    pub anchor_label: String,
    pub probe_kind: StreamKind,
    pub measure: ProbeMeasure,
    pub op: Comparison,
    pub threshold: f64,
}

impl DiscrepancyRule {
    pub fn defaults() -> Vec<Self> {
        vec![
            DiscrepancyRule {
                name: "steps_while_stationary".into(),
                title: "Steps while stationary".into(),
                anchor_kind: StreamKind::Activity,
                anchor_label: "stationary".into(),
                probe_kind: StreamKind::Steps,
                measure: ProbeMeasure::Value,
                op: Comparison::Gt,
                threshold: 50.0,
            },
            DiscrepancyRule {
                name: "battery_drain_while_locked".into(),
                title: "Battery draining while locked".into(),
                anchor_kind: StreamKind::PhoneLock,
                anchor_label: "locked".into(),
                probe_kind: StreamKind::Battery,
                measure: ProbeMeasure::DropPerHour,
                op: Comparison::Gt,
                threshold: 10.0,
            },
        ]
    }
}

/// Probe windows `(start, end, measured value)` in epoch seconds, sorted by start.
pub(crate) fn probe_windows(day: &DayRecord, rule: &DiscrepancyRule) -> Vec<(i64, i64, f64)> {
    let Some(s) = day.samples(rule.probe_kind) else {
        return Vec::new();
    };
    match rule.measure {
        ProbeMeasure::Value => s
            .samples
            .iter()
            .map(|x| {
                let t = x.t.timestamp();
                (t, t + i64::from(s.nominal_interval), x.v)
            })
            .collect(),
        ProbeMeasure::DropPerHour => s
            .samples
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].t.timestamp(), w[1].t.timestamp());
                let hours = (b - a) as f64 / 3600.0;
                (a, b, (w[0].v - w[1].v) / hours)
            })
            .collect(),
    }
}

pub fn detect_discrepancies(day: &DayRecord, cfg: &OccurrenceConfig) -> Vec<Occurrence> {
    let mut out = Vec::new();
    for rule in &cfg.discrepancy_rules {
        let Some(anchors) = day.intervals(rule.anchor_kind) else {
            continue;
        };
        let probes = probe_windows(day, rule);
        for anchor in anchors.intervals.iter().filter(|iv| iv.label == rule.anchor_label) {
            let (a0, a1) = (anchor.start.timestamp(), anchor.end.timestamp());
            let first = probes.partition_point(|p| p.0 < a0);
            let hits: Vec<&(i64, i64, f64)> = probes[first..]
                .iter()
                .take_while(|p| p.0 <= a1)
                .filter(|p| p.1 <= a1 && rule.op.holds(p.2, rule.threshold))
                .collect();
            if hits.is_empty() {
                continue;
            }
            let start = hits.iter().map(|p| p.0).min().expect("non-empty");
            let end = hits.iter().map(|p| p.1).max().expect("non-empty");
            let peak = hits.iter().map(|p| p.2).fold(f64::MIN, f64::max);
            let window = TimeWindow::new(day.frame.at(start), day.frame.at(end));
            out.push(Occurrence::new(
                OccurrenceKind::Discrepancy,
                window,
                rule.title.clone(),
                vec![
                    Evidence {
                        kind: rule.anchor_kind,
                        window: TimeWindow::new(anchor.start, anchor.end),
                        note: format!("{} {}", rule.anchor_kind, rule.anchor_label),
                    },
                    Evidence {
                        kind: rule.probe_kind,
                        window,
                        note: format!("{} readings beyond {} (peak {peak})", hits.len(), rule.threshold),
                    },
                ],
            ));
        }
    }
    out.sort_by_key(|o| (o.window.start, o.title.clone()));
    out
}
