//! Tick-denominated prices.
//!
//! Every price on the book is an integer number of ticks, one tick being
//! 0.01 currency units. Floating-point values only appear in estimates
//! (microprice, equilibrium estimates) and in reporting.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of ticks per currency unit.
pub const TICKS_PER_UNIT: i64 = 100;

/// A price expressed in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Price(i64);

impl Price {
    /// Lowest quotable price (0.01).
    pub const MIN: Price = Price(1);
    /// Highest quotable price (500.00).
    pub const MAX: Price = Price(500 * TICKS_PER_UNIT);
    pub const ONE_TICK: i64 = 1;

    /// Builds a price from a tick count, rejecting values outside the quote range.
    pub fn from_ticks(ticks: i64) -> Option<Price> {
        (Self::MIN.0..=Self::MAX.0).contains(&ticks).then_some(Price(ticks))
    }

    /// Builds a price from a tick count, clamping into the quote range.
    pub fn clamped(ticks: i64) -> Price {
        Price(ticks.clamp(Self::MIN.0, Self::MAX.0))
    }

    /// Nearest tick to a currency amount, clamped into the quote range.
    pub fn from_units(units: f64) -> Price {
        Self::clamped((units * TICKS_PER_UNIT as f64).round() as i64)
    }

    pub fn ticks(self) -> i64 {
        self.0
    }

    pub fn units(self) -> f64 {
        self.0 as f64 / TICKS_PER_UNIT as f64
    }

    /// Shifted by `delta` ticks; `None` if that leaves the quote range.
    pub fn offset(self, delta: i64) -> Option<Price> {
        Self::from_ticks(self.0 + delta)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / TICKS_PER_UNIT, self.0 % TICKS_PER_UNIT)
    }
}

/// Converts a tick-valued float (e.g. a target price) to currency units.
pub fn ticks_to_units(ticks: f64) -> f64 {
    ticks / TICKS_PER_UNIT as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_enforced() {
        assert!(Price::from_ticks(0).is_none());
        assert!(Price::from_ticks(1).is_some());
        assert!(Price::from_ticks(50_000).is_some());
        assert!(Price::from_ticks(50_001).is_none());
        assert_eq!(Price::clamped(-40), Price::MIN);
    }

    #[test]
    fn units_round_to_nearest_tick() {
        assert_eq!(Price::from_units(30.0).ticks(), 3000);
        assert_eq!(Price::from_units(25.006).ticks(), 2501);
        assert_eq!(Price::from_units(30.0).to_string(), "30.00");
        assert_eq!(Price::from_ticks(2501).unwrap().to_string(), "25.01");
    }
}
