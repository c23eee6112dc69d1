//! `lifelens eval`: the offline measurements, each printed as a table and
//! optionally written as JSON.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chrono::{Duration, NaiveDate};
use clap::Subcommand;
use lifelens_core::eval::{
    consistency_report, cost_report, fact_metrics, parse_ledgers, parse_token_log, stability_report, write_plot_data,
    EvalReport, RangeRun, SummarySet, TimeRange,
};
use lifelens_core::llm::{analyze_day, raw_anomaly_probe, MockLlm};
use lifelens_core::model::StreamKind;

use crate::{history, person, Ctx};

#[derive(Subcommand)]
pub enum EvalCmd {
    /// Pairwise TF-IDF similarity of repeated Day-in-a-Glance summaries.
    Consistency {
        #[arg(long)]
        person: String,
        #[arg(long)]
        date: NaiveDate,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        mock_seed: u64,
        /// Word dropout of the stochastic mock; 0 with `--deterministic` is echo.
        #[arg(long, default_value_t = 0.2)]
        dropout: f64,
        /// Same seed every run.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spread of anomaly ranges over repeated probes of one stream.
    Stability {
        #[arg(long)]
        person: String,
        /// Comma-separated dates, or `FIRST..LAST` inclusive.
        #[arg(long)]
        dates: String,
        #[arg(long, default_value = "heart_rate")]
        kind: StreamKind,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        mock_seed: u64,
        /// CSV of every range, for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fact-classification metrics from annotated ledgers.
    Facts {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dollar cost from a token log, at the configured prices.
    Cost {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_dates(s: &str) -> Result<Vec<NaiveDate>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (NaiveDate, NaiveDate) = (a.parse()?, b.parse()?);
        if b < a {
            bail!("empty date range {s}");
        }
        return Ok((0..=(b - a).num_days()).map(|k| a + Duration::days(k)).collect());
    }
    s.split(',').map(|d| Ok(d.trim().parse()?)).collect()
}

fn emit(report: &EvalReport, out: Option<PathBuf>) -> Result<()> {
    print!("{report}");
    if let Some(p) = out {
        report.write_json(&p).with_context(|| format!("writing {}", p.display()))?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn run(ctx: &Ctx, cmd: EvalCmd) -> Result<()> {
    match cmd {
        EvalCmd::Consistency {
            person: who,
            date,
            runs,
            mock_seed,
            dropout,
            deterministic,
            out,
        } => {
            let p = person(&who)?;
            let store = ctx.store()?;
            let record = store.record(&p, date)?.with_context(|| format!("no stored day for {p} on {date}"))?;
            let hist = history(&store, &p, date, 30)?;
            let mut texts = Vec::new();
            for i in 0..runs {
                let seed = if deterministic { mock_seed } else { mock_seed.wrapping_add(i) };
                let client = if deterministic && dropout == 0.0 {
                    MockLlm::echo(seed)
                } else {
                    MockLlm::stochastic(seed, dropout)
                };
                let a = analyze_day(&record, &hist, &client, &ctx.cfg)?;
                let g = a.glance.context("day produced no glance")?;
                texts.push(g.fields.summary_text().to_string());
            }
            emit(&consistency_report(&SummarySet { date, texts })?, out)
        }
        EvalCmd::Stability {
            person: who,
            dates,
            kind,
            runs,
            mock_seed,
            plot,
            out,
        } => {
            let p = person(&who)?;
            let store = ctx.store()?;
            let mut all: Vec<(String, Vec<RangeRun>)> = Vec::new();
            let mut per_day: Vec<EvalReport> = Vec::new();
            for date in parse_dates(&dates)? {
                let record = store.record(&p, date)?.with_context(|| format!("no stored day for {p} on {date}"))?;
                let mut day_runs = Vec::new();
                for i in 0..runs {
                    let client = MockLlm::stochastic(mock_seed.wrapping_add(i), 0.0);
                    let (ranges, _) = raw_anomaly_probe(&record, kind, &client, &ctx.cfg.llm, &ctx.cfg.encoder)?;
                    let run: RangeRun = ranges.iter().map(TimeRange::try_from).collect::<Result<_, _>>()?;
                    day_runs.push(run);
                }
                let r = stability_report(&day_runs)?;
                println!(
                    "{date}: count sd {:.3}, start sd {:.2} min, end sd {:.2} min",
                    r.get("count_sd"),
                    r.get("start_sd_min"),
                    r.get("end_sd_min")
                );
                per_day.push(r);
                all.push((date.to_string(), day_runs));
            }
            if let Some(path) = plot {
                write_plot_data(&path, &all)?;
                println!("wrote {}", path.display());
            }
            // Days are not comparable range by range, so average the per-day figures.
            let mut report = EvalReport::new(format!("stability {kind}, mean over {} days", all.len()));
            for key in per_day[0].values.keys() {
                let m = per_day.iter().map(|r| r.get(key)).sum::<f64>() / per_day.len() as f64;
                report.set(key.clone(), m);
            }
            emit(&report, out)
        }
        EvalCmd::Facts { ledger, out } => {
            let text = std::fs::read_to_string(&ledger).with_context(|| format!("reading {}", ledger.display()))?;
            emit(&fact_metrics(&parse_ledgers(&text)?)?, out)
        }
        EvalCmd::Cost { log, out } => {
            let text = std::fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
            emit(&cost_report(&parse_token_log(&text)?, &ctx.cfg.llm.prices)?, out)
        }
    }
}
