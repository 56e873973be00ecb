//! One market session: the day loop, trader polling, order routing and
//! event fan-out.

use std::collections::VecDeque;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{ExchangeError, Order, OrderBook, OrderId, TapeEvent, Time, Trade, TraderId};
use crate::market::{equilibrium, Assignment, MarketEnv, MarketError, Replenishment};
use crate::metrics::{self, DayMetrics, MetricsBundle, TraderOutcome};
use crate::price::Price;
use crate::seed;
use crate::traders::{Agent, MarketEvent, MarketView, Role, Shout, StrategyParams, Ticker, UnknownTicker};

/// Trades visible in a market snapshot.
pub const VIEW_TAIL: usize = 20;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error("roster has {buyers} buyers and {sellers} sellers; both sides need the same non-zero count")]
    RosterSize { buyers: usize, sellers: usize },
    #[error("roster entry {0:?} is not TICKER:COUNT")]
    BadRoster(String),
    #[error(transparent)]
    Ticker(#[from] UnknownTicker),
    #[error("session panicked: {0}")]
    Panicked(String),
}

/// Strategy counts for one side, e.g. `GDX:8,ZIC:8`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RosterSide(pub Vec<(Ticker, usize)>);

impl RosterSide {
    pub fn total(&self) -> usize {
        self.0.iter().map(|(_, n)| n).sum()
    }

    pub fn expand(&self) -> Vec<Ticker> {
        self.0.iter().flat_map(|(t, n)| std::iter::repeat_n(*t, *n)).collect()
    }
}

impl FromStr for RosterSide {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (t, n) = part.split_once(':').ok_or_else(|| SessionError::BadRoster(part.to_string()))?;
            let n: usize = n.trim().parse().map_err(|_| SessionError::BadRoster(part.to_string()))?;
            out.push((t.parse()?, n));
        }
        Ok(RosterSide(out))
    }
}

impl TryFrom<String> for RosterSide {
    type Error = SessionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RosterSide> for String {
    fn from(r: RosterSide) -> String {
        r.to_string()
    }
}

impl fmt::Display for RosterSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(t, n)| format!("{t}:{n}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub env: MarketEnv,
    pub buyers: RosterSide,
    pub sellers: RosterSide,
    pub seed: u64,
    pub params: StrategyParams,
    /// Keep the full tape in the result.
    pub keep_tape: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraderRow {
    pub id: TraderId,
    pub ticker: Ticker,
    pub role: Role,
    /// Ticks.
    pub profit: i64,
    /// Equilibrium-expected profit over all assignments received, ticks.
    pub potential: i64,
    pub trades: u32,
    pub assignments: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayRow {
    pub day: u32,
    /// Equilibrium of the limits actually issued that day.
    pub p0: Option<Price>,
    pub quantity: usize,
    pub max_surplus: i64,
    pub realized: i64,
    pub trades: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub time: Time,
    pub day: u32,
    pub price: Price,
    pub buyer: TraderId,
    pub seller: TraderId,
    pub buyer_limit: Price,
    pub seller_limit: Price,
    /// Equilibrium of the market's schedule in force at `time`.
    pub p0_in_force: Option<Price>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub market: String,
    pub seed: u64,
    pub traders: Vec<TraderRow>,
    pub days: Vec<DayRow>,
    pub trades: Vec<TradeRecord>,
    pub metrics: MetricsBundle,
    #[serde(skip)]
    pub tape: Vec<TapeEvent>,
}

impl SessionResult {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("session result serialises")
    }

    pub fn total_profit(&self) -> i64 {
        self.traders.iter().map(|t| t.profit).sum()
    }
}

/// A session in progress. `run_session` drives it to the end; the pieces are
/// public so fixtures can stop part-way through a day.
pub struct Session {
    env: MarketEnv,
    book: OrderBook,
    agents: Vec<Agent>,
    buyer_ids: Vec<TraderId>,
    seller_ids: Vec<TraderId>,
    rng: ChaCha8Rng,
    trades: Vec<Trade>,
    records: Vec<TradeRecord>,
    days: Vec<DayRow>,
    per_day: Vec<DayMetrics>,
    pending: VecDeque<Assignment>,
    next_order: OrderId,
    day_profit: Vec<i64>,
    day_potential: Vec<i64>,
    day_alpha: Vec<(Price, Price)>,
    keep_tape: bool,
    tape: Vec<TapeEvent>,
}

impl Session {
    pub fn new(cfg: &SessionConfig) -> Result<Self, SessionError> {
        let (nb, ns) = (cfg.buyers.total(), cfg.sellers.total());
        if nb == 0 || nb != ns {
            return Err(SessionError::RosterSize { buyers: nb, sellers: ns });
        }
        if cfg.env.n_buyers() != nb || cfg.env.n_sellers() != ns {
            return Err(MarketError::RosterMismatch { roster: nb, schedule: cfg.env.n_buyers() }.into());
        }
        let mut agents = Vec::with_capacity(nb + ns);
        for (role, side) in [(Role::Buyer, &cfg.buyers), (Role::Seller, &cfg.sellers)] {
            for ticker in side.expand() {
                let id = agents.len() as TraderId;
                let agent_seed = seed::derive(cfg.seed, &[1, id as u64]);
                agents.push(Agent::new(id, role, ticker, &cfg.params, agent_seed));
            }
        }
        let n = agents.len();
        Ok(Self {
            env: cfg.env.clone(),
            book: OrderBook::new(n),
            buyer_ids: (0..nb as TraderId).collect(),
            seller_ids: (nb as TraderId..n as TraderId).collect(),
            agents,
            rng: ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[0])),
            trades: Vec::new(),
            records: Vec::new(),
            days: Vec::new(),
            per_day: Vec::new(),
            pending: VecDeque::new(),
            next_order: 0,
            day_profit: vec![0; n],
            day_potential: vec![0; n],
            day_alpha: Vec::new(),
            keep_tape: cfg.keep_tape,
            tape: Vec::new(),
        })
    }

    pub fn env(&self) -> &MarketEnv {
        &self.env
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    /// What every agent sees at time `t`.
    pub fn snapshot_view(&self, t: Time) -> MarketView<'_> {
        MarketView::snapshot(&self.book, &self.trades, VIEW_TAIL, t, self.env.clock.day_of(t))
    }

    /// Issues the day's assignments and resets per-day state.
    pub fn begin_day(&mut self, day: u32) -> Result<(), SessionError> {
        for a in &mut self.agents {
            a.start_day();
        }
        self.day_profit.iter_mut().for_each(|p| *p = 0);
        self.day_potential.iter_mut().for_each(|p| *p = 0);
        self.day_alpha.clear();
        let issued = self.env.issue_assignments(&self.buyer_ids, &self.seller_ids, day, &mut self.rng)?;
        let buys: Vec<Price> = issued.iter().filter(|a| self.is_buyer(a.trader)).map(|a| a.limit).collect();
        let sells: Vec<Price> = issued.iter().filter(|a| !self.is_buyer(a.trader)).map(|a| a.limit).collect();
        let row = match equilibrium(&buys, &sells) {
            Ok(eq) => DayRow {
                day,
                p0: Some(eq.price),
                quantity: eq.quantity,
                max_surplus: eq.max_surplus,
                realized: 0,
                trades: 0,
            },
            Err(MarketError::NoTradePossible) => {
                DayRow { day, p0: None, quantity: 0, max_surplus: 0, realized: 0, trades: 0 }
            }
            Err(e) => return Err(e.into()),
        };
        self.days.push(row);
        // equilibrium-expected profit is measured against the equilibrium in
        // force when the assignment was issued
        let mut in_force: Option<(Time, Option<Price>)> = None;
        for a in &issued {
            let p0 = match in_force {
                Some((t, p)) if t == a.issue_time => p,
                _ => {
                    let p = self.env.equilibrium_in_force(a.issue_time).ok().map(|e| e.price);
                    in_force = Some((a.issue_time, p));
                    p
                }
            };
            let Some(p0) = p0 else { continue };
            let pot = match self.is_buyer(a.trader) {
                true => (a.limit.ticks() - p0.ticks()).max(0),
                false => (p0.ticks() - a.limit.ticks()).max(0),
            };
            self.agents[a.trader as usize].potential += pot;
            self.day_potential[a.trader as usize] += pot;
        }
        self.pending = issued.into();
        Ok(())
    }

    fn is_buyer(&self, id: TraderId) -> bool {
        (id as usize) < self.buyer_ids.len()
    }

    /// Hands out assignments due by `t`; a replaced assignment's resting
    /// order is withdrawn first.
    fn release(&mut self, t: Time) -> Result<(), SessionError> {
        while self.pending.front().is_some_and(|a| a.issue_time <= t) {
            let a = self.pending.pop_front().expect("front checked");
            if self.book.live_order(a.trader, a.side).is_some() {
                let c = self.book.cancel_order(a.trader, a.side, t)?;
                self.fan_out(&[MarketEvent::Cancel(c)], t);
            }
            self.agents[a.trader as usize].assign(a);
        }
        Ok(())
    }

    fn fan_out(&mut self, events: &[MarketEvent], t: Time) {
        if events.is_empty() {
            return;
        }
        let view = MarketView::snapshot(&self.book, &self.trades, VIEW_TAIL, t, self.env.clock.day_of(t));
        for agent in &mut self.agents {
            for e in events {
                agent.respond(e, &view);
            }
        }
    }

    /// One poll: a uniformly chosen trader may quote, and the consequences
    /// are fanned out to everyone before the next poll.
    pub fn poll(&mut self, t: Time) -> Result<(), SessionError> {
        self.release(t)?;
        let who = self.rng.random_range(0..self.agents.len());
        let view = MarketView::snapshot(&self.book, &self.trades, VIEW_TAIL, t, self.env.clock.day_of(t));
        let Some(price) = self.agents[who].quote(&view) else { return Ok(()) };
        let agent = &self.agents[who];
        let order = Order {
            id: self.next_order,
            trader: agent.id,
            side: agent.role.side(),
            price,
            qty: 1,
            time: t,
        };
        self.next_order += 1;
        let outcome = self.book.submit_order(order)?;

        let mut events = Vec::with_capacity(outcome.trades.len() + 2);
        if let Some(c) = outcome.replaced {
            events.push(MarketEvent::Cancel(c));
        }
        for tr in &outcome.trades {
            self.book_trade(tr, t);
            events.push(MarketEvent::Trade(*tr));
        }
        events.push(MarketEvent::Shout(Shout {
            time: t,
            trader: order.trader,
            order_id: order.id,
            side: order.side,
            price,
            traded: !outcome.trades.is_empty(),
        }));
        self.trades.extend_from_slice(&outcome.trades);
        self.fan_out(&events, t);
        Ok(())
    }

    fn book_trade(&mut self, tr: &Trade, t: Time) {
        let buyer_limit = self.agents[tr.buyer as usize].limit().expect("buyer with a resting order holds an assignment");
        let seller_limit =
            self.agents[tr.seller as usize].limit().expect("seller with a resting order holds an assignment");
        let sb = self.agents[tr.buyer as usize].record_fill(tr.price);
        let ss = self.agents[tr.seller as usize].record_fill(tr.price);
        self.day_profit[tr.buyer as usize] += sb;
        self.day_profit[tr.seller as usize] += ss;
        let p0_in_force = self.env.equilibrium_in_force(t).ok().map(|e| e.price);
        if let Some(p0) = p0_in_force {
            self.day_alpha.push((tr.price, p0));
        }
        let day = self.env.clock.day_of(t);
        if let Some(row) = self.days.last_mut() {
            row.realized += sb + ss;
            row.trades += 1;
        }
        self.records.push(TradeRecord {
            time: t,
            day,
            price: tr.price,
            buyer: tr.buyer,
            seller: tr.seller,
            buyer_limit,
            seller_limit,
            p0_in_force,
        });
    }

    /// Flushes the book and, under periodic replenishment, retires unfilled
    /// assignments.
    pub fn end_day(&mut self, day: u32) {
        let t = self.env.clock.day_start(day) + self.env.clock.polls_per_day() - 1;
        let cancels: Vec<MarketEvent> = self.book.flush(t).into_iter().map(MarketEvent::Cancel).collect();
        self.fan_out(&cancels, t);
        if self.env.replenishment == Replenishment::Periodic {
            for a in &mut self.agents {
                a.expire_assignment();
            }
        }
        let rows: Vec<TraderOutcome> = self
            .agents
            .iter()
            .map(|a| TraderOutcome {
                ticker: a.ticker,
                profit: self.day_profit[a.id as usize],
                potential: self.day_potential[a.id as usize],
            })
            .collect();
        let row = self.days.last().expect("begin_day pushed a row");
        self.per_day.push(DayMetrics {
            day,
            alpha: metrics::smiths_alpha(&self.day_alpha).map(|a| a.percent),
            ae: metrics::allocative_efficiency(row.realized, row.max_surplus),
            pd: metrics::profit_dispersion(&rows),
        });
        if self.keep_tape {
            self.tape.extend(self.book.take_tape());
        } else {
            self.book.take_tape();
        }
    }

    pub fn run_day(&mut self, day: u32) -> Result<(), SessionError> {
        self.begin_day(day)?;
        let start = self.env.clock.day_start(day);
        for t in start..start + self.env.clock.polls_per_day() {
            self.poll(t)?;
        }
        self.end_day(day);
        Ok(())
    }

    pub fn finish(self, seed: u64) -> SessionResult {
        let outcomes: Vec<TraderOutcome> = self
            .agents
            .iter()
            .map(|a| TraderOutcome { ticker: a.ticker, profit: a.profit, potential: a.potential })
            .collect();
        let pairs: Vec<(Price, Price)> =
            self.records.iter().filter_map(|r| r.p0_in_force.map(|p0| (r.price, p0))).collect();
        let alpha = metrics::smiths_alpha(&pairs);
        let realized: i64 = self.days.iter().map(|d| d.realized).sum();
        let max_surplus: i64 = self.days.iter().map(|d| d.max_surplus).sum();
        let bundle = MetricsBundle {
            alpha: alpha.map(|a| a.percent),
            alpha_rms: alpha.map(|a| a.rms),
            ae_global: metrics::allocative_efficiency(realized, max_surplus),
            ae_by_strategy: metrics::ae_by_strategy(&outcomes),
            pd: metrics::profit_dispersion(&outcomes),
            per_day: self.per_day,
        };
        SessionResult {
            market: self.env.label.clone(),
            seed,
            traders: self
                .agents
                .iter()
                .map(|a| TraderRow {
                    id: a.id,
                    ticker: a.ticker,
                    role: a.role,
                    profit: a.profit,
                    potential: a.potential,
                    trades: a.trades,
                    assignments: a.assignments_received,
                })
                .collect(),
            days: self.days,
            trades: self.records,
            metrics: bundle,
            tape: self.tape,
        }
    }
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionResult, SessionError> {
    let mut s = Session::new(cfg)?;
    for day in 1..=cfg.env.clock.n_days {
        s.run_day(day)?;
    }
    Ok(s.finish(cfg.seed))
}

/// As `run_session`, with a strategy panic reported as an error.
pub fn run_session_contained(cfg: &SessionConfig) -> Result<SessionResult, SessionError> {
    match panic::catch_unwind(AssertUnwindSafe(|| run_session(cfg))) {
        Ok(r) => r,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            Err(SessionError::Panicked(msg))
        }
    }
}
