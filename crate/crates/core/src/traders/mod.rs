//! Trading strategies behind one agent type.

pub mod aa;
pub mod asad;
pub mod gdx;
pub mod shvr;
mod view;
pub mod zic;
pub mod zip;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{Side, TraderId};
use crate::market::Assignment;
use crate::price::Price;

pub use aa::{Aa, AaParams, AaVariant};
pub use asad::{Asad, AsadParams};
pub use gdx::{Gdx, GdxParams};
pub use shvr::Shvr;
pub use view::{MarketEvent, MarketView, Shout};
pub use zic::Zic;
pub use zip::{Zip, ZipParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Buyer,
    Seller,
}

impl Role {
    pub fn side(self) -> Side {
        match self {
            Role::Buyer => Side::Bid,
            Role::Seller => Side::Ask,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Buyer => "BUYER",
            Role::Seller => "SELLER",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown strategy ticker {0:?}")]
pub struct UnknownTicker(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Ticker {
    Zic,
    Shvr,
    Zip,
    Asad,
    Gdx,
    Aa,
    Maa,
}

impl Ticker {
    pub const ALL: [Ticker; 7] =
        [Ticker::Zic, Ticker::Shvr, Ticker::Zip, Ticker::Asad, Ticker::Gdx, Ticker::Aa, Ticker::Maa];

    pub fn as_str(self) -> &'static str {
        match self {
            Ticker::Zic => "ZIC",
            Ticker::Shvr => "SHVR",
            Ticker::Zip => "ZIP",
            Ticker::Asad => "ASAD",
            Ticker::Gdx => "GDX",
            Ticker::Aa => "AA",
            Ticker::Maa => "MAA",
        }
    }
}

impl fmt::Display for Ticker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ticker {
    type Err = UnknownTicker;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ticker::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownTicker(s.to_string()))
    }
}

impl TryFrom<String> for Ticker {
    type Error = UnknownTicker;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Ticker> for String {
    fn from(t: Ticker) -> String {
        t.as_str().to_string()
    }
}

/// Per-strategy constants; each section may be overridden from config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub zip: ZipParams,
    pub asad: AsadParams,
    pub gdx: GdxParams,
    pub aa: AaParams,
}

#[derive(Clone, Debug)]
pub enum Strategy {
    Zic(Zic),
    Shvr(Shvr),
    Zip(Zip),
    Asad(Asad),
    Gdx(Gdx),
    Aa(Aa),
}

/// One trader: identity, accounting, current assignment and strategy state.
#[derive(Clone, Debug)]
pub struct Agent {
    pub id: TraderId,
    pub role: Role,
    pub ticker: Ticker,
    pub assignment: Option<Assignment>,
    /// Realised surplus, ticks.
    pub profit: i64,
    pub trades: u32,
    pub assignments_received: u32,
    /// Surplus this trader could have earned at the equilibrium price, ticks.
    pub potential: i64,
    rng: ChaCha8Rng,
    strategy: Strategy,
}

impl Agent {
    pub fn new(id: TraderId, role: Role, ticker: Ticker, params: &StrategyParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strategy = match ticker {
            Ticker::Zic => Strategy::Zic(Zic),
            Ticker::Shvr => Strategy::Shvr(Shvr),
            Ticker::Zip => Strategy::Zip(Zip::new(role, &params.zip, &mut rng)),
            Ticker::Asad => Strategy::Asad(Asad::new(role, &params.zip, &params.asad, &mut rng)),
            Ticker::Gdx => Strategy::Gdx(Gdx::new(&params.gdx)),
            Ticker::Aa => Strategy::Aa(Aa::new(AaVariant::Classic, &params.aa)),
            Ticker::Maa => Strategy::Aa(Aa::new(AaVariant::Maa, &params.aa)),
        };
        Self {
            id,
            role,
            ticker,
            assignment: None,
            profit: 0,
            trades: 0,
            assignments_received: 0,
            potential: 0,
            rng,
            strategy,
        }
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn strategy_mut(&mut self) -> &mut Strategy {
        &mut self.strategy
    }

    pub fn limit(&self) -> Option<Price> {
        self.assignment.map(|a| a.limit)
    }

    /// Replaces any current assignment.
    pub fn assign(&mut self, a: Assignment) {
        debug_assert_eq!(a.side, self.role.side());
        self.assignment = Some(a);
        self.assignments_received += 1;
    }

    pub fn start_day(&mut self) {
        if let Strategy::Gdx(g) = &mut self.strategy {
            g.start_day();
        }
    }

    /// The agent's quote for this poll, or `None` to pass. Agents without an
    /// assignment always pass, and quotes never cross the limit.
    pub fn quote(&mut self, view: &MarketView) -> Option<Price> {
        let limit = self.limit()?;
        let role = self.role;
        let p = match &mut self.strategy {
            Strategy::Zic(s) => Some(s.quote(role, limit, &mut self.rng)),
            Strategy::Shvr(s) => s.quote(role, limit, view),
            Strategy::Zip(s) => Some(s.quote(role, limit)),
            Strategy::Asad(s) => Some(s.quote(role, limit)),
            Strategy::Gdx(s) => s.quote(role, limit, view),
            Strategy::Aa(s) => s.quote(role, limit, view),
        }?;
        let safe = match role {
            Role::Buyer => p <= limit,
            Role::Seller => p >= limit,
        };
        debug_assert!(safe, "{} quoted {p} against limit {limit}", self.ticker);
        safe.then_some(p)
    }

    pub fn respond(&mut self, event: &MarketEvent, view: &MarketView) {
        let limit = self.limit();
        let role = self.role;
        match &mut self.strategy {
            Strategy::Zic(_) | Strategy::Shvr(_) => {}
            Strategy::Zip(s) => s.respond(role, limit, event, &mut self.rng),
            Strategy::Asad(s) => s.respond(role, limit, event, &mut self.rng),
            Strategy::Gdx(s) => s.respond(event),
            Strategy::Aa(s) => s.respond(role, limit, event, view),
        }
    }

    /// Books a fill at `price` against the live assignment and retires it.
    /// Returns the surplus in ticks.
    pub fn record_fill(&mut self, price: Price) -> i64 {
        let Some(a) = self.assignment.take() else { return 0 };
        let surplus = match self.role {
            Role::Buyer => a.limit.ticks() - price.ticks(),
            Role::Seller => price.ticks() - a.limit.ticks(),
        };
        self.profit += surplus;
        self.trades += 1;
        surplus
    }

    pub fn expire_assignment(&mut self) {
        self.assignment = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tickers_round_trip() {
        for t in Ticker::ALL {
            assert_eq!(t.as_str().parse::<Ticker>(), Ok(t));
        }
        assert_eq!("gdx".parse::<Ticker>(), Ok(Ticker::Gdx));
        assert!("KAPLAN".parse::<Ticker>().is_err());
    }

    #[test]
    fn no_assignment_no_quote() {
        for t in Ticker::ALL {
            let mut a = Agent::new(0, Role::Buyer, t, &StrategyParams::default(), 1);
            assert_eq!(a.quote(&MarketView::empty(0, 1)), None);
        }
    }

    #[test]
    fn fill_books_surplus() {
        let mut a = Agent::new(3, Role::Seller, Ticker::Zic, &StrategyParams::default(), 1);
        a.assign(Assignment { trader: 3, side: Side::Ask, limit: Price::from_units(20.0), issue_time: 0, day: 1 });
        assert_eq!(a.record_fill(Price::from_units(25.5)), 550);
        assert_eq!((a.profit, a.trades, a.assignment), (550, 1, None));
    }
}
