//! Exhaustive strategy-ratio sweeps: every composition of the roster, many
//! seeded trials each, run in parallel and aggregated per market.

pub mod latency;
pub mod output;
pub mod ratios;
pub mod utest;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{Catalog, Clock, MarketEnv, MarketError};
use crate::seed;
use crate::session::{run_session_contained, RosterSide, SessionConfig};
use crate::traders::{StrategyParams, Ticker};

pub use ratios::{enumerate_ratios, is_homogeneous, ratio_count};
pub use utest::{u_test, u_test_with, Method, UTest, UTestError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("sweep needs between 1 and 6 distinct strategies, got {0}")]
    Tickers(usize),
    #[error("sweep needs at least one trader per side, one trial and one market")]
    Empty,
    #[error("journal {path}: {source}")]
    Journal { path: String, source: io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub tickers: Vec<Ticker>,
    pub n_per_side: usize,
    pub trials: u32,
    pub markets: Vec<String>,
    pub base_seed: u64,
    pub workers: usize,
    pub clock: Clock,
    pub params: StrategyParams,
}

/// How much work a spec represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub ratios: u64,
    pub sessions: u64,
    pub trading_days: u64,
}

impl SweepPlan {
    pub fn describe(&self) -> String {
        format!(
            "{} ratios, {} sessions, {} trading days",
            thousands(self.ratios),
            thousands(self.sessions),
            thousands(self.trading_days)
        )
    }
}

pub fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let distinct: BTreeSet<_> = self.tickers.iter().collect();
        if self.tickers.is_empty() || self.tickers.len() > 6 || distinct.len() != self.tickers.len() {
            return Err(SweepError::Tickers(self.tickers.len()));
        }
        if self.n_per_side == 0 || self.trials == 0 || self.markets.is_empty() {
            return Err(SweepError::Empty);
        }
        Ok(())
    }

    pub fn plan(&self) -> SweepPlan {
        let ratios = ratio_count(self.tickers.len(), self.n_per_side);
        let sessions = ratios * self.trials as u64 * self.markets.len() as u64;
        SweepPlan { ratios, sessions, trading_days: sessions * self.clock.n_days as u64 }
    }

    fn roster(&self, ratio: &[usize]) -> RosterSide {
        RosterSide(self.tickers.iter().zip(ratio).filter(|(_, n)| **n > 0).map(|(t, n)| (*t, *n)).collect())
    }
}

/// One session of the sweep, as journalled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub market_index: usize,
    pub market: String,
    pub ratio_index: usize,
    pub ratio: Vec<usize>,
    pub trial: u32,
    pub seed: u64,
    pub homogeneous: bool,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub ae_global: Option<f64>,
    pub ae_by_strategy: BTreeMap<Ticker, f64>,
    pub alpha: Option<f64>,
    pub pd: Option<f64>,
    pub trades: u32,
    /// Trades where either side's price was worse than its limit.
    pub negative_surplus_trades: u32,
}

impl CellRow {
    fn key(&self) -> (usize, usize, u32) {
        (self.market_index, self.ratio_index, self.trial)
    }
}

fn run_cell(spec: &SweepSpec, env: &MarketEnv, market_index: usize, ratio_index: usize, ratio: &[usize], trial: u32) -> CellRow {
    let roster = spec.roster(ratio);
    let cell_seed = seed::derive(spec.base_seed, &[market_index as u64, ratio_index as u64, trial as u64]);
    let cfg = SessionConfig {
        env: env.clone(),
        buyers: roster.clone(),
        sellers: roster,
        seed: cell_seed,
        params: spec.params.clone(),
        keep_tape: false,
    };
    let mut row = CellRow {
        market_index,
        market: env.label.clone(),
        ratio_index,
        ratio: ratio.to_vec(),
        trial,
        seed: cell_seed,
        homogeneous: is_homogeneous(ratio),
        ok: false,
        error: None,
        ae_global: None,
        ae_by_strategy: BTreeMap::new(),
        alpha: None,
        pd: None,
        trades: 0,
        negative_surplus_trades: 0,
    };
    match run_session_contained(&cfg) {
        Ok(r) => {
            row.ok = true;
            row.ae_global = r.metrics.ae_global;
            row.ae_by_strategy = r.metrics.ae_by_strategy.clone();
            row.alpha = r.metrics.alpha;
            row.pd = Some(r.metrics.pd);
            row.trades = r.trades.len() as u32;
            row.negative_surplus_trades =
                r.trades.iter().filter(|t| t.price > t.buyer_limit || t.price < t.seller_limit).count() as u32;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn journal_err(path: &Path) -> impl Fn(io::Error) -> SweepError + '_ {
    move |source| SweepError::Journal { path: path.display().to_string(), source }
}

/// Journal rows already on disk. A torn final line from an interrupted run
/// is ignored.
pub fn read_journal(path: &Path) -> Result<Vec<CellRow>, SweepError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(journal_err(path)(e)),
    };
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(journal_err(path))?;
        if let Ok(row) = serde_json::from_str::<CellRow>(&line) {
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickerStats {
    pub ae_mean: f64,
    pub ae_sd: f64,
    pub alpha_mean: Option<f64>,
    pub pd_mean: f64,
    pub n_sessions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UTestRow {
    pub market: String,
    pub ticker_a: Ticker,
    pub ticker_b: Ticker,
    pub n_a: usize,
    pub n_b: usize,
    pub result: Option<UTest>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketSummary {
    pub market: String,
    pub per_ticker: BTreeMap<Ticker, TickerStats>,
}

/// Aggregated sweep results. Built from rows sorted by cell, so it does not
/// depend on completion order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub tickers: Vec<Ticker>,
    pub markets: Vec<MarketSummary>,
    pub utests: Vec<UTestRow>,
    pub scheduled: u64,
    pub completed: u64,
    pub failed: u64,
    pub trading_days: u64,
    /// Per-session strategy efficiencies, keyed by market then ticker.
    #[serde(skip)]
    pub samples: BTreeMap<String, BTreeMap<Ticker, Vec<f64>>>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

impl SweepTable {
    pub fn aggregate(spec: &SweepSpec, rows: &[CellRow]) -> Self {
        let mut markets = Vec::new();
        let mut utests = Vec::new();
        let mut samples = BTreeMap::new();
        for (mi, label) in spec.markets.iter().enumerate() {
            let ok: Vec<&CellRow> = rows.iter().filter(|r| r.market_index == mi && r.ok).collect();
            let mut per_ticker = BTreeMap::new();
            let mut market_samples: BTreeMap<Ticker, Vec<f64>> = BTreeMap::new();
            for (ti, ticker) in spec.tickers.iter().enumerate() {
                let present: Vec<&&CellRow> = ok.iter().filter(|r| r.ratio[ti] > 0).collect();
                let ae: Vec<f64> = present.iter().filter_map(|r| r.ae_by_strategy.get(ticker).copied()).collect();
                if ae.is_empty() {
                    continue;
                }
                let alphas: Vec<f64> = present.iter().filter_map(|r| r.alpha).collect();
                let pds: Vec<f64> = present.iter().filter_map(|r| r.pd).collect();
                per_ticker.insert(
                    *ticker,
                    TickerStats {
                        ae_mean: mean(&ae),
                        ae_sd: sample_sd(&ae),
                        alpha_mean: (!alphas.is_empty()).then(|| mean(&alphas)),
                        pd_mean: if pds.is_empty() { 0.0 } else { mean(&pds) },
                        n_sessions: ae.len(),
                    },
                );
                market_samples.insert(*ticker, ae);
            }
            for a in &spec.tickers {
                for b in &spec.tickers {
                    if a == b {
                        continue;
                    }
                    let empty = Vec::new();
                    let sa = market_samples.get(a).unwrap_or(&empty);
                    let sb = market_samples.get(b).unwrap_or(&empty);
                    let (result, note) = match u_test(sa, sb) {
                        Ok(t) => (Some(t), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    utests.push(UTestRow {
                        market: label.clone(),
                        ticker_a: *a,
                        ticker_b: *b,
                        n_a: sa.len(),
                        n_b: sb.len(),
                        result,
                        note,
                    });
                }
            }
            markets.push(MarketSummary { market: label.clone(), per_ticker });
            samples.insert(label.clone(), market_samples);
        }
        let completed = rows.iter().filter(|r| r.ok).count() as u64;
        let failed = rows.len() as u64 - completed;
        Self {
            tickers: spec.tickers.clone(),
            markets,
            utests,
            scheduled: spec.plan().sessions,
            completed,
            failed,
            trading_days: rows.len() as u64 * spec.clock.n_days as u64,
            samples,
        }
    }

    pub fn stats(&self, market: &str, ticker: Ticker) -> Option<&TickerStats> {
        self.markets.iter().find(|m| m.market == market)?.per_ticker.get(&ticker)
    }

    pub fn utest(&self, market: &str, a: Ticker, b: Ticker) -> Option<&UTestRow> {
        self.utests.iter().find(|u| u.market == market && u.ticker_a == a && u.ticker_b == b)
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<CellRow>,
    pub table: SweepTable,
    /// Cells run by this invocation (the rest came from the journal).
    pub ran: u64,
}

/// Runs every (market, ratio, trial) cell not already in the journal.
///
/// With `journal` set, each finished cell is appended as one JSON line as soon
/// as it completes; on success the journal is rewritten in cell order so its
/// bytes do not depend on scheduling. Without `resume` an existing journal is
/// discarded first.
pub fn run_sweep(
    spec: &SweepSpec,
    catalog: &Catalog,
    journal: Option<&Path>,
    resume: bool,
) -> Result<SweepOutcome, SweepError> {
    spec.validate()?;
    let envs: Vec<MarketEnv> = spec
        .markets
        .iter()
        .map(|m| catalog.build_env(m, spec.n_per_side, spec.n_per_side, spec.clock))
        .collect::<Result<_, _>>()?;
    let ratios = enumerate_ratios(spec.tickers.len(), spec.n_per_side);

    let mut rows = match (journal, resume) {
        (Some(path), true) => read_journal(path)?,
        _ => Vec::new(),
    };
    // rows from a journal written under a different spec are not reused
    rows.retain(|r| {
        r.market_index < envs.len()
            && envs[r.market_index].label == r.market
            && ratios.get(r.ratio_index).is_some_and(|q| *q == r.ratio)
            && r.trial < spec.trials
    });
    let done: BTreeSet<_> = rows.iter().map(CellRow::key).collect();
    let todo: Vec<(usize, usize, u32)> = (0..envs.len())
        .flat_map(|m| (0..ratios.len()).flat_map(move |r| (0..spec.trials).map(move |t| (m, r, t))))
        .filter(|k| !done.contains(k))
        .collect();

    let mut writer = match journal {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(journal_err(path))?;
            }
            let mut f = OpenOptions::new()
                .create(true)
                .write(true)
                .append(resume)
                .truncate(!resume)
                .open(path)
                .map_err(journal_err(path))?;
            if resume {
                // keep later appends on their own lines after a torn write
                let len = f.metadata().map_err(journal_err(path))?.len();
                if len > 0 && !ends_with_newline(path) {
                    f.write_all(b"\n").map_err(journal_err(path))?;
                }
            }
            Some(f)
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<CellRow>();
    let mut fresh = Vec::with_capacity(todo.len());
    let mut write_error = None;
    std::thread::scope(|scope| {
        let collector = scope.spawn(|| {
            for row in rx {
                if let (Some(f), None) = (writer.as_mut(), write_error.as_ref()) {
                    let line = serde_json::to_string(&row).expect("cell row serialises");
                    if let Err(e) = writeln!(f, "{line}") {
                        write_error = Some(e);
                    }
                }
                fresh.push(row);
            }
        });
        pool.install(|| {
            todo.par_iter().for_each_with(tx, |tx, &(m, r, t)| {
                let row = run_cell(spec, &envs[m], m, r, &ratios[r], t);
                let _ = tx.send(row);
            });
        });
        collector.join().expect("collector thread");
    });
    if let (Some(e), Some(path)) = (write_error, journal) {
        return Err(journal_err(path)(e));
    }
    let ran = fresh.len() as u64;
    rows.extend(fresh);
    rows.sort_by_key(CellRow::key);
    rows.dedup_by_key(|r| r.key());

    if let Some(path) = journal {
        let f = File::create(path).map_err(journal_err(path))?;
        let mut w = BufWriter::new(f);
        for row in &rows {
            let line = serde_json::to_string(row).expect("cell row serialises");
            writeln!(w, "{line}").map_err(journal_err(path))?;
        }
        w.flush().map_err(journal_err(path))?;
    }
    let table = SweepTable::aggregate(spec, &rows);
    Ok(SweepOutcome { rows, table, ran })
}

fn ends_with_newline(path: &Path) -> bool {
    fs::read(path).map(|b| b.last() == Some(&b'\n')).unwrap_or(true)
}
