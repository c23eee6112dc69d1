//! `lifelens`: operator command line.

mod eval;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{Duration, NaiveDate};
use clap::{Args, Parser, Subcommand};
use lifelens_api::{ApiState, SystemClock, TokenStore};
use lifelens_core::config::AppConfig;
use lifelens_core::ingest::{load_day, write_raw_day};
use lifelens_core::llm::{analyze_day, MockLlm};
use lifelens_core::model::{DayFrame, DayRecord, PersonId};
use lifelens_core::store::DayStore;
use lifelens_core::synthetic::{synthetic_day_with, SynthOptions};

#[derive(Parser)]
#[command(name = "lifelens", version, about = "Ingest, analyze, evaluate and serve personal sensing data")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Processed day store (overrides `store_root`).
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate one raw day and put it in the store.
    Ingest {
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(long)]
        person: String,
        #[arg(long)]
        date: NaiveDate,
        /// IANA zone; defaults to the configured zone for the person.
        #[arg(long)]
        tz: Option<chrono_tz::Tz>,
    },
    /// Detect occurrences and run the summarization pipeline for a stored day.
    Analyze {
        #[arg(long)]
        person: String,
        #[arg(long)]
        date: NaiveDate,
        /// Seed for the deterministic mock model.
        #[arg(long, default_value_t = 0)]
        mock_seed: u64,
        /// Stored days before `date` used for baselines.
        #[arg(long, default_value_t = 30)]
        history_days: u32,
    },
    /// Serve the read-only API and the loopback admin endpoint.
    Serve,
    /// Access tokens.
    Token {
        #[command(subcommand)]
        cmd: TokenCmd,
    },
    /// Write synthetic raw days.
    Synth(SynthArgs),
    /// Evaluation reports.
    Eval {
        #[command(subcommand)]
        cmd: eval::EvalCmd,
    },
}

#[derive(Subcommand)]
enum TokenCmd {
    /// Issue a token; it is printed once and not stored in clear.
    Issue {
        /// Comma-separated person ids.
        #[arg(long, value_delimiter = ',', required = true)]
        scope: Vec<String>,
        #[arg(long)]
        ttl_minutes: Option<i64>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    person: String,
    /// Last day written.
    #[arg(long)]
    date: NaiveDate,
    #[arg(long, default_value_t = 1)]
    days: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tz: Option<chrono_tz::Tz>,
    /// Plant coordinates, network names and EMA text in check-ins.
    #[arg(long)]
    plant_identifiers: bool,
}

pub(crate) struct Ctx {
    pub cfg: AppConfig,
    pub store_root: PathBuf,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Self> {
        let cfg = match &cli.config {
            Some(p) => AppConfig::load(p)?,
            None => AppConfig::default(),
        };
        let store_root = cli
            .store
            .clone()
            .or_else(|| cfg.store_root.clone())
            .unwrap_or_else(|| PathBuf::from("store"));
        Ok(Self { cfg, store_root })
    }

    pub fn store(&self) -> Result<DayStore> {
        DayStore::open(&self.store_root).with_context(|| format!("opening store {}", self.store_root.display()))
    }

    fn tokens(&self) -> Result<TokenStore> {
        std::fs::create_dir_all(&self.store_root)?;
        Ok(TokenStore::open(self.store_root.join("tokens.json"), Arc::new(SystemClock))?)
    }

    fn frame(&self, person: &PersonId, tz: Option<chrono_tz::Tz>) -> DayFrame {
        let f = self.cfg.frame_for(person);
        match tz {
            Some(z) => DayFrame::new(z, f.start_hour),
            None => f,
        }
    }
}

pub(crate) fn person(s: &str) -> Result<PersonId> {
    PersonId::new(s).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Up to `n` stored days strictly before `date`, oldest first.
pub(crate) fn history(store: &DayStore, p: &PersonId, date: NaiveDate, n: u32) -> Result<Vec<DayRecord>> {
    let first = date - Duration::days(i64::from(n));
    let mut out = Vec::new();
    for d in store.dates(p)? {
        if d >= first && d < date {
            if let Some(r) = store.record(p, d)? {
                out.push(r);
            }
        }
    }
    Ok(out)
}

fn append_usage(root: &Path, p: &PersonId, date: NaiveDate, a: &lifelens_core::store::DayAnalysis) -> Result<PathBuf> {
    use std::io::Write;
    let path = root.join(p.as_str()).join("usage.jsonl");
    std::fs::create_dir_all(path.parent().expect("has parent"))?;
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&path)?;
    for u in &a.usage {
        let line = serde_json::json!({
            "date": date.to_string(),
            "purpose": u.purpose,
            "input_tokens": u.input_tokens,
            "output_tokens": u.output_tokens,
        });
        writeln!(f, "{line}")?;
    }
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::load(&cli)?;
    match cli.cmd {
        Cmd::Ingest { root, person: who, date, tz } => {
            let p = person(&who)?;
            let root = root
                .or_else(|| ctx.cfg.data_root.clone())
                .context("no raw data root: pass --root or set data_root")?;
            let loaded = load_day(&root, &p, date, ctx.frame(&p, tz), ctx.cfg.place_radius())?;
            for (kind, s) in &loaded.summaries {
                println!("{kind}: {} lines, {} rejected", s.lines_read, s.rejected_count());
            }
            let report = ctx.store()?.put_record(loaded.record)?;
            if report.errors.is_empty() && report.warnings.is_empty() {
                println!("validation ok");
            } else {
                print!("{report}");
            }
            println!("stored {p} {date}");
        }
        Cmd::Analyze {
            person: who,
            date,
            mock_seed,
            history_days,
        } => {
            let p = person(&who)?;
            let store = ctx.store()?;
            let Some(record) = store.record(&p, date)? else {
                bail!("no stored day for {p} on {date}; run ingest first");
            };
            let hist = history(&store, &p, date, history_days)?;
            let client = MockLlm::echo(mock_seed);
            let a = analyze_day(&record, &hist, &client, &ctx.cfg)?;
            let (i, o) = a.usage.iter().fold((0, 0), |(i, o), u| (i + u.input_tokens, o + u.output_tokens));
            println!(
                "{p} {date}: {} occurrences, {} outliers, {} hourly summaries, {i} input / {o} output tokens",
                a.occurrences.len(),
                a.outliers.len(),
                a.hourly.len()
            );
            let log = append_usage(&ctx.store_root, &p, date, &a)?;
            store.put_analysis(&p, date, a)?;
            println!("token log: {}", log.display());
        }
        Cmd::Serve => {
            let state = ApiState {
                store: Arc::new(ctx.store()?),
                tokens: Arc::new(ctx.tokens()?),
                default_ttl: Duration::minutes(ctx.cfg.api.default_ttl_minutes as i64),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(lifelens_api::serve(state, &ctx.cfg.api.bind, &ctx.cfg.api.admin_bind))?;
        }
        Cmd::Token {
            cmd: TokenCmd::Issue { scope, ttl_minutes },
        } => {
            let scope: BTreeSet<PersonId> = scope.iter().map(|s| person(s)).collect::<Result<_>>()?;
            let ttl = Duration::minutes(ttl_minutes.unwrap_or(ctx.cfg.api.default_ttl_minutes as i64));
            let t = ctx.tokens()?.issue(scope, ttl)?;
            println!("{}", serde_json::to_string_pretty(&t)?);
        }
        Cmd::Synth(a) => {
            let p = person(&a.person)?;
            let frame = ctx.frame(&p, a.tz);
            let opts = SynthOptions {
                plant_identifiers: a.plant_identifiers,
                ..SynthOptions::default()
            };
            for k in (0..a.days).rev() {
                let d = a.date - Duration::days(i64::from(k));
                let seed = a.seed.wrapping_add(d.to_string().bytes().map(u64::from).sum::<u64>());
                let r = synthetic_day_with(seed, &p, d, &frame, &opts);
                write_raw_day(&r, &a.out)?;
                println!("wrote {}/{}/{d}", a.out.display(), p);
            }
        }
        Cmd::Eval { cmd } => eval::run(&ctx, cmd)?,
    }
    Ok(())
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
