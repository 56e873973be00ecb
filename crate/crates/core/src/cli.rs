//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError};
use crate::exchange::write_tape_csv;
use crate::market::MarketError;
use crate::session::{run_session, SessionError};
use crate::sweep::latency::{LatencyError, LatencyFixture};
use crate::sweep::{output, run_sweep, SweepError};

// stdout closed early (e.g. piped into `head`) is not an error
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const OUT_ENV: &str = "CDA_ARENA_OUT";

#[derive(Debug, Parser)]
#[command(name = "cda-arena", version, about = "Continuous double auction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config file; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (default: $CDA_ARENA_OUT, else ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report the amount of work without running it.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Skip sweep cells already in the journal.
    #[arg(long, global = true)]
    pub resume: bool,
    /// Dotted config override, e.g. roster.buyers=GDX:8,ZIC:8 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one market session.
    Session {
        /// Also write the tape as CSV.
        #[arg(long)]
        tape: bool,
    },
    /// Run every strategy ratio over the configured markets.
    Sweep,
    /// Time quote decisions on mid-session fixtures.
    Latency {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        calls: Option<u64>,
    },
    /// Dump the resolved supply and demand schedules as CSV.
    Schedules,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Market(m) => m.into(),
            SessionError::RosterSize { .. } | SessionError::BadRoster(_) | SessionError::Ticker(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Market(m) => m.into(),
            SweepError::Tickers(_) | SweepError::Empty => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<LatencyError> for CliError {
    fn from(e: LatencyError) -> Self {
        match e {
            LatencyError::Market(m) => m.into(),
            LatencyError::Session(s) => s.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub overrides: Vec<String>,
    /// Fully resolved config, TOML.
    pub config: String,
    pub started_at: u64,
    pub finished_at: Option<u64>,
    pub outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("run_manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("sweep.workers={w}"));
    }
    if let Command::Session { tape: true } = cli.command {
        overrides.push("session.tape=true".into());
    }
    if let Command::Latency { calls: Some(c) } = cli.command {
        overrides.push(format!("latency.calls={c}"));
    }
    Ok(Config::load(cli.config.as_deref(), &overrides)?)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    let out = out_dir(cli);
    let command = match cli.command {
        Command::Session { .. } => "session",
        Command::Sweep => "sweep",
        Command::Latency { .. } => "latency",
        Command::Schedules => "schedules",
    };
    if cli.dry_run {
        return dry_run(&cli.command, &cfg);
    }
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed: cfg.seed,
        overrides: cli.overrides.clone(),
        config: cfg.to_toml(),
        started_at: unix_now(),
        finished_at: None,
        outputs: Vec::new(),
    };
    manifest.write(&out)?;
    let (code, outputs) = match cli.command {
        Command::Session { .. } => cmd_session(&cfg, &out)?,
        Command::Sweep => cmd_sweep(&cfg, &out, cli.resume)?,
        Command::Latency { .. } => cmd_latency(&cfg, &out)?,
        Command::Schedules => cmd_schedules(&cfg, &out)?,
    };
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    manifest.finished_at = Some(unix_now());
    manifest.write(&out)?;
    Ok(code)
}

fn dry_run(command: &Command, cfg: &Config) -> Result<i32, CliError> {
    match command {
        Command::Sweep => {
            let spec = cfg.sweep_spec();
            spec.validate()?;
            let catalog = cfg.catalog();
            for m in &spec.markets {
                catalog.market(m)?;
            }
            say!("{}", spec.plan().describe());
        }
        Command::Session { .. } => {
            cfg.env()?;
            say!("1 session, {} trading days", cfg.market.n_days);
        }
        Command::Latency { .. } => {
            say!(
                "{} fixtures x {} strategies x {} calls",
                cfg.latency.fixtures.len(),
                cfg.latency.tickers.len(),
                cfg.latency.calls
            );
        }
        Command::Schedules => say!("{} markets", cfg.catalog().markets.len()),
    }
    Ok(EXIT_OK)
}

fn cmd_session(cfg: &Config, out: &Path) -> Result<(i32, Vec<PathBuf>), CliError> {
    let sc = cfg.session_config()?;
    let result = run_session(&sc)?;
    let mut outputs = Vec::new();
    let path = out.join("session.jsonl");
    let mut w = create(&path)?;
    writeln!(w, "{}", result.to_json_line()).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    outputs.push(path);
    if sc.keep_tape {
        let path = out.join("tape.csv");
        write_tape_csv(&result.tape, create(&path)?).map_err(csv_err(&path))?;
        outputs.push(path);
    }
    say!("{}", serde_json::to_string_pretty(&result.metrics).expect("metrics serialise"));
    Ok((EXIT_OK, outputs))
}

fn cmd_sweep(cfg: &Config, out: &Path, resume: bool) -> Result<(i32, Vec<PathBuf>), CliError> {
    let spec = cfg.sweep_spec();
    let journal = out.join("sweep_cells.jsonl");
    let outcome = run_sweep(&spec, &cfg.catalog(), Some(&journal), resume)?;
    let t = &outcome.table;
    let mut outputs = vec![journal];
    let summary = out.join("sweep_summary.csv");
    output::write_summary_csv(t, create(&summary)?).map_err(csv_err(&summary))?;
    let metrics = out.join("sweep_metrics.csv");
    output::write_metrics_csv(t, create(&metrics)?).map_err(csv_err(&metrics))?;
    let utests = out.join("utests.csv");
    output::write_utests_csv(t, create(&utests)?).map_err(csv_err(&utests))?;
    outputs.extend([summary, metrics, utests]);
    say!(
        "{} sessions ({} run now, {} failed), {} trading days",
        t.completed + t.failed,
        outcome.ran,
        t.failed,
        t.trading_days
    );
    let code = if t.failed > 0 {
        eprintln!("warning: {} sessions failed; see sweep_cells.jsonl", t.failed);
        EXIT_PARTIAL
    } else {
        EXIT_OK
    };
    Ok((code, outputs))
}

fn cmd_latency(cfg: &Config, out: &Path) -> Result<(i32, Vec<PathBuf>), CliError> {
    let l = &cfg.latency;
    let catalog = cfg.catalog();
    let mut rows = Vec::new();
    for fixture in &l.fixtures {
        let f = LatencyFixture::build(
            &catalog,
            fixture,
            &l.tickers,
            l.per_strategy,
            cfg.market.clock(),
            &cfg.strategies,
            cfg.seed,
        )?;
        for t in &l.tickers {
            let r = f.probe(*t, l.calls)?;
            say!("{fixture} {t}: median {:.3} us", r.median);
            rows.push((fixture.clone(), *t, r));
        }
    }
    let path = out.join("latency.csv");
    output::write_latency_csv(&rows, create(&path)?).map_err(csv_err(&path))?;
    Ok((EXIT_OK, vec![path]))
}

fn cmd_schedules(cfg: &Config, out: &Path) -> Result<(i32, Vec<PathBuf>), CliError> {
    let catalog = cfg.catalog();
    let n = cfg.roster.buyers.total();
    let ns = cfg.roster.sellers.total();
    let path = out.join("schedules.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let ce = csv_err(&path);
    w.write_record(["market", "schedule", "first_day", "side", "rank", "limit", "p0"]).map_err(&ce)?;
    for label in catalog.markets.keys() {
        if catalog.unbound.contains(label) {
            continue;
        }
        let env = catalog.build_env(label, n, ns, cfg.market.clock())?;
        for seg in env.timetable.segments() {
            let sched = &env.schedules[&seg.schedule];
            let p0 = sched.equilibrium().map(|e| e.price.to_string()).unwrap_or_default();
            let mut demand = sched.buyer_limits.clone();
            demand.sort_by(|a, b| b.cmp(a));
            let mut supply = sched.seller_limits.clone();
            supply.sort();
            for (side, limits) in [("demand", demand), ("supply", supply)] {
                for (rank, p) in limits.iter().enumerate() {
                    w.write_record([
                        label.clone(),
                        seg.schedule.clone(),
                        seg.start_day.to_string(),
                        side.to_string(),
                        (rank + 1).to_string(),
                        p.to_string(),
                        p0.clone(),
                    ])
                    .map_err(&ce)?;
                }
            }
        }
    }
    w.flush().map_err(io_err(&path))?;
    drop(ce);
    Ok((EXIT_OK, vec![path]))
}
