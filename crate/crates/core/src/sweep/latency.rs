//! Wall-clock cost of one quote decision, measured out of band on agents
//! taken from a running session.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{OrderBook, Time, Trade};
use crate::market::{Assignment, Catalog, Clock, MarketError};
use crate::price::Price;
use crate::session::{RosterSide, Session, SessionConfig, SessionError, VIEW_TAIL};
use crate::traders::{Agent, MarketView, Role, StrategyParams, Ticker};

/// The markets of the reference latency table.
pub const DEFAULT_FIXTURES: [&str; 4] = ["M7", "M6", "M1", "MS23"];
pub const DEFAULT_CALLS: usize = 500;

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("latency probe needs at least one call")]
    ZeroCalls,
    #[error("fixture {market} has no {ticker} traders")]
    NoAgents { market: String, ticker: Ticker },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    /// Microseconds.
    pub median: f64,
    pub mean: f64,
    pub p99: f64,
    pub calls: usize,
}

impl LatencyReport {
    /// Summary statistics of per-call durations in nanoseconds.
    pub fn from_nanos(mut ns: Vec<u64>) -> Result<Self, LatencyError> {
        if ns.is_empty() {
            return Err(LatencyError::ZeroCalls);
        }
        ns.sort_unstable();
        let n = ns.len();
        let median = if n % 2 == 1 { ns[n / 2] as f64 } else { (ns[n / 2 - 1] + ns[n / 2]) as f64 / 2.0 };
        let mean = ns.iter().sum::<u64>() as f64 / n as f64;
        let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
        Ok(Self { median: median / 1e3, mean: mean / 1e3, p99: ns[rank - 1] as f64 / 1e3, calls: n })
    }
}

/// A frozen mid-session market: book, tape tail and every agent's state.
#[derive(Clone, Debug)]
pub struct LatencyFixture {
    pub market: String,
    agents: Vec<Agent>,
    book: OrderBook,
    trades: Vec<Trade>,
    time: Time,
    day: u32,
    p0: Price,
}

impl LatencyFixture {
    /// Runs `market` with `per_strategy` buyers and sellers of each ticker
    /// until half way through the session.
    pub fn build(
        catalog: &Catalog,
        market: &str,
        tickers: &[Ticker],
        per_strategy: usize,
        clock: Clock,
        params: &StrategyParams,
        seed: u64,
    ) -> Result<Self, LatencyError> {
        let side = RosterSide(tickers.iter().map(|t| (*t, per_strategy)).collect());
        let n = side.total();
        let env = catalog.build_env(market, n, n, clock)?;
        let cfg = SessionConfig {
            env,
            buyers: side.clone(),
            sellers: side,
            seed,
            params: params.clone(),
            keep_tape: false,
        };
        let mut s = Session::new(&cfg)?;
        let mid = (clock.n_days / 2).max(1);
        for day in 1..mid {
            s.run_day(day)?;
        }
        s.begin_day(mid)?;
        let start = clock.day_start(mid);
        let time = start + clock.polls_per_day() / 2;
        for t in start..time {
            s.poll(t)?;
        }
        let p0 = s.env().equilibrium_in_force(time).map(|e| e.price).unwrap_or(Price::from_units(30.0));
        Ok(Self {
            market: market.to_string(),
            agents: s.agents().to_vec(),
            book: s.book().clone(),
            trades: s.trades().to_vec(),
            time,
            day: mid,
            p0,
        })
    }

    pub fn view(&self) -> MarketView<'_> {
        MarketView::snapshot(&self.book, &self.trades, VIEW_TAIL, self.time, self.day)
    }

    pub fn probe(&self, ticker: Ticker, n_calls: usize) -> Result<LatencyReport, LatencyError> {
        self.probe_tuned(ticker, n_calls, |_| {})
    }

    /// As `probe`, adjusting each agent before it is timed.
    pub fn probe_tuned(
        &self,
        ticker: Ticker,
        n_calls: usize,
        tune: impl Fn(&mut Agent),
    ) -> Result<LatencyReport, LatencyError> {
        if n_calls == 0 {
            return Err(LatencyError::ZeroCalls);
        }
        let pool: Vec<&Agent> = self.agents.iter().filter(|a| a.ticker == ticker).collect();
        if pool.is_empty() {
            return Err(LatencyError::NoAgents { market: self.market.clone(), ticker });
        }
        let view = self.view();
        let mut ns = Vec::with_capacity(n_calls);
        for i in 0..n_calls {
            let mut agent = pool[i % pool.len()].clone();
            if agent.assignment.is_none() {
                // a comfortably intramarginal limit so every strategy has work to do
                let limit = match agent.role {
                    Role::Buyer => Price::clamped(self.p0.ticks() + 1000),
                    Role::Seller => Price::clamped(self.p0.ticks() - 1000),
                };
                agent.assign(Assignment {
                    trader: agent.id,
                    side: agent.role.side(),
                    limit,
                    issue_time: self.time,
                    day: self.day,
                });
            }
            tune(&mut agent);
            let t0 = Instant::now();
            let q = agent.quote(&view);
            let elapsed = t0.elapsed();
            black_box(q);
            ns.push(elapsed.as_nanos() as u64);
        }
        LatencyReport::from_nanos(ns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_statistics() {
        let r = LatencyReport::from_nanos(vec![3000, 1000, 2000, 4000]).unwrap();
        assert_eq!(r.median, 2.5);
        assert_eq!(r.mean, 2.5);
        assert_eq!(r.p99, 4.0);
        assert!(matches!(LatencyReport::from_nanos(vec![]), Err(LatencyError::ZeroCalls)));
    }

    #[test]
    fn zero_calls_rejected() {
        let clock = Clock { n_days: 2, ..Clock::default() };
        let f = LatencyFixture::build(
            &Catalog::builtin(),
            "M1",
            &[Ticker::Zip, Ticker::Gdx],
            2,
            clock,
            &StrategyParams::default(),
            1,
        )
        .unwrap();
        assert!(matches!(f.probe(Ticker::Zip, 0), Err(LatencyError::ZeroCalls)));
        assert!(matches!(f.probe(Ticker::Aa, 5), Err(LatencyError::NoAgents { .. })));
        assert_eq!(f.probe(Ticker::Gdx, 7).unwrap().calls, 7);
    }
}
