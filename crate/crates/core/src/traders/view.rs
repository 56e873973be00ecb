use crate::exchange::{Cancel, OrderBook, OrderId, Side, Time, TopLevel, Trade, TraderId};
use crate::price::Price;

/// Read-only snapshot of what the exchange publishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarketView<'a> {
    pub time: Time,
    pub day: u32,
    pub best_bid: Option<TopLevel>,
    pub best_ask: Option<TopLevel>,
    /// Volume-weighted top-of-book mid-price in ticks; absent when one-sided.
    pub microprice: Option<f64>,
    /// Most recent trades, oldest first.
    pub recent_trades: &'a [Trade],
}

impl<'a> MarketView<'a> {
    pub fn empty(time: Time, day: u32) -> Self {
        Self { time, day, best_bid: None, best_ask: None, microprice: None, recent_trades: &[] }
    }

    pub fn snapshot(book: &OrderBook, trades: &'a [Trade], tail: usize, time: Time, day: u32) -> Self {
        let start = trades.len().saturating_sub(tail);
        Self {
            time,
            day,
            best_bid: book.best_bid(),
            best_ask: book.best_ask(),
            microprice: book.microprice().ok(),
            recent_trades: &trades[start..],
        }
    }

    pub fn best_bid_price(&self) -> Option<Price> {
        self.best_bid.map(|l| l.price)
    }

    pub fn best_ask_price(&self) -> Option<Price> {
        self.best_ask.map(|l| l.price)
    }

    pub fn last_trade(&self) -> Option<&Trade> {
        self.recent_trades.last()
    }
}

/// A quote as announced to the market, tagged with whether it traded on arrival.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shout {
    pub time: Time,
    pub trader: TraderId,
    pub order_id: OrderId,
    pub side: Side,
    pub price: Price,
    pub traded: bool,
}

/// Public events fanned out to every agent after each order is processed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarketEvent {
    Shout(Shout),
    Trade(Trade),
    Cancel(Cancel),
}
