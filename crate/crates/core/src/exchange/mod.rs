//! Limit order book, matching and the public tape.
//!
//! Orders that reach or cross the opposite best price execute immediately
//! at the resting order's price; everything else rests in price-time order.

mod book;
mod tape;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use book::{microprice_of, MatchOutcome, Message, Order, OrderBook, TopLevel};
pub use tape::{write_tape_csv, Cancel, TapeEvent, Trade};

pub type TraderId = u32;
pub type OrderId = u64;
/// Simulation event index within a session. Never wall-clock.
pub type Time = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExchangeError {
    #[error("order quantity must be at least 1")]
    ZeroQuantity,
    #[error("unknown trader id {0}")]
    UnknownTrader(TraderId),
    #[error("trader {trader} has no live {side:?} order")]
    NotFound { trader: TraderId, side: Side },
    #[error("book one-sided")]
    OneSided,
    #[error("order time {time} precedes last event time {last}")]
    TimeReversal { time: Time, last: Time },
}
