use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::tape::{Cancel, TapeEvent, Trade};
use super::{ExchangeError, OrderId, Side, Time, TraderId};
use crate::price::Price;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub trader: TraderId,
    pub side: Side,
    pub price: Price,
    pub qty: u32,
    pub time: Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Resting {
    id: OrderId,
    trader: TraderId,
    qty: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Level {
    total: u32,
    orders: VecDeque<Resting>,
}

/// Messages accepted by the exchange, in arrival order. Replaying them
/// through a fresh book reproduces the book and its tape exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    Submit(Order),
    Cancel { trader: TraderId, side: Side, time: Time },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchOutcome {
    pub trades: Vec<Trade>,
    /// True when some quantity was left resting on the book.
    pub rested: bool,
    /// The trader's previous live order on this side, if the new one replaced it.
    pub replaced: Option<Cancel>,
}

/// Aggregate view of one book side at its best price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopLevel {
    pub price: Price,
    pub qty: u32,
}

/// Price-aggregated limit order book with a tape.
///
/// Each trader holds at most one live order per side; a new order from the
/// same trader on the same side cancels the previous one first.
#[derive(Clone, Debug)]
pub struct OrderBook {
    bids: BTreeMap<Price, Level>,
    asks: BTreeMap<Price, Level>,
    live: Vec<[Option<(Price, OrderId)>; 2]>,
    tape: Vec<TapeEvent>,
    journal: Vec<Message>,
    last_time: Time,
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Bid => 0,
        Side::Ask => 1,
    }
}

impl OrderBook {
    /// An empty book accepting orders from traders `0..n_traders`.
    pub fn new(n_traders: usize) -> Self {
        Self {
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            live: vec![[None, None]; n_traders],
            tape: Vec::new(),
            journal: Vec::new(),
            last_time: 0,
        }
    }

    /// Rebuilds a book by feeding `messages` through a fresh instance.
    pub fn replay(n_traders: usize, messages: &[Message]) -> Result<Self, ExchangeError> {
        let mut book = Self::new(n_traders);
        for msg in messages {
            match *msg {
                Message::Submit(order) => {
                    book.submit_order(order)?;
                }
                Message::Cancel { trader, side, time } => {
                    // a replayed "not found" is part of the record, not a failure
                    let _ = book.cancel_order(trader, side, time);
                }
            }
        }
        Ok(book)
    }

    pub fn tape(&self) -> &[TapeEvent] {
        &self.tape
    }

    pub fn journal(&self) -> &[Message] {
        &self.journal
    }

    pub fn take_tape(&mut self) -> Vec<TapeEvent> {
        std::mem::take(&mut self.tape)
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<Price, Level> {
        match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        }
    }

    fn check_time(&mut self, time: Time) -> Result<(), ExchangeError> {
        if time < self.last_time {
            return Err(ExchangeError::TimeReversal { time, last: self.last_time });
        }
        self.last_time = time;
        Ok(())
    }

    pub fn submit_order(&mut self, order: Order) -> Result<MatchOutcome, ExchangeError> {
        if order.qty == 0 {
            return Err(ExchangeError::ZeroQuantity);
        }
        if order.trader as usize >= self.live.len() {
            return Err(ExchangeError::UnknownTrader(order.trader));
        }
        self.check_time(order.time)?;
        self.journal.push(Message::Submit(order));

        let replaced = self.remove_live(order.trader, order.side, order.time);
        let mut outcome = MatchOutcome { replaced, ..Default::default() };
        let mut remaining = order.qty;

        while remaining > 0 {
            let best = match order.side {
                Side::Bid => self.asks.first_key_value().map(|(p, _)| *p),
                Side::Ask => self.bids.last_key_value().map(|(p, _)| *p),
            };
            let Some(best) = best else { break };
            let crosses = match order.side {
                Side::Bid => order.price >= best,
                Side::Ask => order.price <= best,
            };
            if !crosses {
                break;
            }
            let opposite = order.side.opposite();
            let level = self.side_mut(opposite).get_mut(&best).expect("best level present");
            let resting = level.orders.front_mut().expect("non-empty level");
            let fill = remaining.min(resting.qty);
            resting.qty -= fill;
            level.total -= fill;
            let resting_copy = *resting;
            if resting.qty == 0 {
                level.orders.pop_front();
            }
            if level.total == 0 {
                self.side_mut(opposite).remove(&best);
            }
            if resting_copy.qty == 0 {
                self.live[resting_copy.trader as usize][side_index(opposite)] = None;
            }
            remaining -= fill;

            let (buyer, seller, buy_order, sell_order) = match order.side {
                Side::Bid => (order.trader, resting_copy.trader, order.id, resting_copy.id),
                Side::Ask => (resting_copy.trader, order.trader, resting_copy.id, order.id),
            };
            let trade = Trade {
                time: order.time,
                price: best,
                qty: fill,
                buyer,
                seller,
                aggressor: order.side,
                buy_order,
                sell_order,
            };
            self.tape.push(TapeEvent::Trade(trade));
            outcome.trades.push(trade);
        }

        if remaining > 0 {
            let level = self.side_mut(order.side).entry(order.price).or_default();
            level.total += remaining;
            level.orders.push_back(Resting { id: order.id, trader: order.trader, qty: remaining });
            self.live[order.trader as usize][side_index(order.side)] = Some((order.price, order.id));
            outcome.rested = true;
        }
        Ok(outcome)
    }

    /// Removes the trader's live order on `side`, recording a CANCEL on the tape.
    pub fn cancel_order(
        &mut self,
        trader: TraderId,
        side: Side,
        time: Time,
    ) -> Result<Cancel, ExchangeError> {
        if trader as usize >= self.live.len() {
            return Err(ExchangeError::UnknownTrader(trader));
        }
        self.check_time(time)?;
        self.journal.push(Message::Cancel { trader, side, time });
        self.remove_live(trader, side, time).ok_or(ExchangeError::NotFound { trader, side })
    }

    fn remove_live(&mut self, trader: TraderId, side: Side, time: Time) -> Option<Cancel> {
        let (price, id) = self.live[trader as usize][side_index(side)].take()?;
        let book_side = self.side_mut(side);
        let level = book_side.get_mut(&price).expect("live order has a level");
        let pos = level.orders.iter().position(|o| o.id == id).expect("live order is resting");
        let resting = level.orders.remove(pos).expect("position is valid");
        level.total -= resting.qty;
        if level.total == 0 {
            book_side.remove(&price);
        }
        let cancel = Cancel { time, trader, side, order_id: id, price, qty: resting.qty };
        self.tape.push(TapeEvent::Cancel(cancel));
        Some(cancel)
    }

    /// Cancels every resting order, oldest trader first. Used at day end.
    pub fn flush(&mut self, time: Time) -> Vec<Cancel> {
        let mut out = Vec::new();
        for trader in 0..self.live.len() as TraderId {
            for side in [Side::Bid, Side::Ask] {
                if self.live[trader as usize][side_index(side)].is_some() {
                    if let Ok(c) = self.cancel_order(trader, side, time) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn best_prices(&self) -> (Option<Price>, Option<Price>) {
        (self.bids.last_key_value().map(|(p, _)| *p), self.asks.first_key_value().map(|(p, _)| *p))
    }

    pub fn best_bid(&self) -> Option<TopLevel> {
        self.bids.last_key_value().map(|(p, l)| TopLevel { price: *p, qty: l.total })
    }

    pub fn best_ask(&self) -> Option<TopLevel> {
        self.asks.first_key_value().map(|(p, l)| TopLevel { price: *p, qty: l.total })
    }

    /// Volume-weighted top-of-book mid-price, in ticks.
    ///
    /// The bid price is weighted by the ask quantity and vice versa, so the
    /// estimate leans towards the thinner side.
    pub fn microprice(&self) -> Result<f64, ExchangeError> {
        match (self.best_bid(), self.best_ask()) {
            (Some(bid), Some(ask)) => Ok(microprice_of(bid, ask)),
            _ => Err(ExchangeError::OneSided),
        }
    }

    /// Aggregate quantity resting at `price` on `side`.
    pub fn depth_at(&self, side: Side, price: Price) -> u32 {
        let book_side = match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        };
        book_side.get(&price).map_or(0, |l| l.total)
    }

    /// Anonymised price ladder: (price, aggregate qty), best first.
    pub fn ladder(&self, side: Side) -> Vec<(Price, u32)> {
        match side {
            Side::Bid => self.bids.iter().rev().map(|(p, l)| (*p, l.total)).collect(),
            Side::Ask => self.asks.iter().map(|(p, l)| (*p, l.total)).collect(),
        }
    }

    pub fn live_order(&self, trader: TraderId, side: Side) -> Option<(Price, OrderId)> {
        self.live.get(trader as usize).and_then(|s| s[side_index(side)])
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }
}

pub fn microprice_of(bid: TopLevel, ask: TopLevel) -> f64 {
    let (qb, qa) = (bid.qty as f64, ask.qty as f64);
    (qa * bid.price.ticks() as f64 + qb * ask.price.ticks() as f64) / (qb + qa)
}
