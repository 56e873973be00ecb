use super::{MarketView, Role};
use crate::price::Price;

/// Shaver: improves the best same-side price by one tick when that is still
/// loss-avoiding; quotes its own limit into an empty side.
#[derive(Clone, Debug, Default)]
pub struct Shvr;

impl Shvr {
    pub fn quote(&self, role: Role, limit: Price, view: &MarketView) -> Option<Price> {
        match role {
            Role::Buyer => match view.best_bid_price() {
                None => Some(limit),
                Some(best) => best.offset(Price::ONE_TICK).filter(|p| *p <= limit),
            },
            Role::Seller => match view.best_ask_price() {
                None => Some(limit),
                Some(best) => best.offset(-Price::ONE_TICK).filter(|p| *p >= limit),
            },
        }
    }
}
