use std::io;

use serde::{Deserialize, Serialize};

use super::{OrderId, Side, Time, TraderId};
use crate::price::Price;

/// An execution between a resting order and the order that crossed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub time: Time,
    /// Always the resting order's price.
    pub price: Price,
    pub qty: u32,
    pub buyer: TraderId,
    pub seller: TraderId,
    /// Side of the order that crossed the spread.
    pub aggressor: Side,
    pub buy_order: OrderId,
    pub sell_order: OrderId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cancel {
    pub time: Time,
    pub trader: TraderId,
    pub side: Side,
    pub order_id: OrderId,
    pub price: Price,
    pub qty: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TapeEvent {
    Trade(Trade),
    Cancel(Cancel),
}

impl TapeEvent {
    pub fn time(&self) -> Time {
        match self {
            TapeEvent::Trade(t) => t.time,
            TapeEvent::Cancel(c) => c.time,
        }
    }
}

/// Writes the tape as `time,kind,price,qty,buyer_id,seller_id`.
///
/// CANCEL rows leave price, buyer and seller empty; qty is the cancelled quantity.
pub fn write_tape_csv<W: io::Write>(events: &[TapeEvent], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "kind", "price", "qty", "buyer_id", "seller_id"])?;
    for ev in events {
        match ev {
            TapeEvent::Trade(t) => w.write_record([
                t.time.to_string(),
                "TRADE".to_string(),
                t.price.to_string(),
                t.qty.to_string(),
                t.buyer.to_string(),
                t.seller.to_string(),
            ])?,
            TapeEvent::Cancel(c) => w.write_record([
                c.time.to_string(),
                "CANCEL".to_string(),
                String::new(),
                c.qty.to_string(),
                String::new(),
                String::new(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}
