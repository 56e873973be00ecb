use serde::{Deserialize, Serialize};

use super::MarketError;
use crate::price::Price;

/// How one side's limit prices are laid out.
///
/// `Linear` schedules stretch across however many traders the roster puts on
/// that side, so the same market definition works for 16 or 8 traders per side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LimitSpec {
    Explicit(Vec<f64>),
    Linear { from: f64, to: f64 },
    Flat { flat: f64 },
}

impl LimitSpec {
    pub fn resolve(&self, count: usize) -> Result<Vec<Price>, MarketError> {
        match self {
            LimitSpec::Explicit(values) => {
                if values.len() != count {
                    return Err(MarketError::RosterMismatch { roster: count, schedule: values.len() });
                }
                Ok(values.iter().map(|v| Price::from_units(*v)).collect())
            }
            LimitSpec::Linear { from, to } => {
                if count == 1 {
                    return Ok(vec![Price::from_units((from + to) / 2.0)]);
                }
                let step = (to - from) / (count - 1) as f64;
                Ok((0..count).map(|i| Price::from_units(from + step * i as f64)).collect())
            }
            LimitSpec::Flat { flat } => Ok(vec![Price::from_units(*flat); count]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub buyers: LimitSpec,
    pub sellers: LimitSpec,
}

/// Concrete supply and demand limits for one roster size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyDemandSchedule {
    pub label: String,
    pub buyer_limits: Vec<Price>,
    pub seller_limits: Vec<Price>,
}

impl SupplyDemandSchedule {
    pub fn new(
        label: impl Into<String>,
        buyer_limits: Vec<Price>,
        seller_limits: Vec<Price>,
    ) -> Result<Self, MarketError> {
        if buyer_limits.is_empty() || seller_limits.is_empty() {
            return Err(MarketError::EmptySchedule);
        }
        Ok(Self { label: label.into(), buyer_limits, seller_limits })
    }

    pub fn from_spec(
        label: &str,
        spec: &ScheduleSpec,
        n_buyers: usize,
        n_sellers: usize,
    ) -> Result<Self, MarketError> {
        Self::new(label, spec.buyers.resolve(n_buyers)?, spec.sellers.resolve(n_sellers)?)
    }

    /// Every limit moved by `ticks`, clamped into the quote range.
    pub fn shifted(&self, ticks: i64) -> Self {
        let shift = |ps: &[Price]| ps.iter().map(|p| Price::clamped(p.ticks() + ticks)).collect();
        Self {
            label: self.label.clone(),
            buyer_limits: shift(&self.buyer_limits),
            seller_limits: shift(&self.seller_limits),
        }
    }

    pub fn equilibrium(&self) -> Result<Equilibrium, MarketError> {
        equilibrium(&self.buyer_limits, &self.seller_limits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equilibrium {
    /// Midpoint of the competitive price interval, rounded to the nearest tick.
    pub price: Price,
    pub quantity: usize,
    /// Total gains from trade of the intramarginal units, in ticks.
    pub max_surplus: i64,
}

impl Equilibrium {
    pub fn max_surplus_units(&self) -> f64 {
        crate::price::ticks_to_units(self.max_surplus as f64)
    }
}

/// Intersection of the demand and supply step curves.
///
/// Demand is sorted descending, supply ascending; the equilibrium quantity is
/// the number of leading pairs with buyer limit >= seller limit. Any price in
/// `[max(s[q-1], d[q]), min(d[q-1], s[q])]` clears the market; the midpoint of
/// that interval is reported.
pub fn equilibrium(buyers: &[Price], sellers: &[Price]) -> Result<Equilibrium, MarketError> {
    if buyers.is_empty() || sellers.is_empty() {
        return Err(MarketError::EmptySchedule);
    }
    let mut demand: Vec<i64> = buyers.iter().map(|p| p.ticks()).collect();
    let mut supply: Vec<i64> = sellers.iter().map(|p| p.ticks()).collect();
    demand.sort_unstable_by(|a, b| b.cmp(a));
    supply.sort_unstable();

    let quantity = demand.iter().zip(&supply).take_while(|(d, s)| d >= s).count();
    if quantity == 0 {
        return Err(MarketError::NoTradePossible);
    }
    let q = quantity;
    let mut lo = supply[q - 1];
    if let Some(&d) = demand.get(q) {
        lo = lo.max(d);
    }
    let mut hi = demand[q - 1];
    if let Some(&s) = supply.get(q) {
        hi = hi.min(s);
    }
    debug_assert!(lo <= hi);
    let max_surplus = demand.iter().zip(&supply).take(q).map(|(d, s)| d - s).sum();
    // half-up midpoint stays inside [lo, hi] because both ends are whole ticks
    let mid = (lo + hi + 1).div_euclid(2);
    Ok(Equilibrium { price: Price::clamped(mid), quantity, max_surplus })
}
