use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MarketEvent, Role};
use crate::price::{Price, TICKS_PER_UNIT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZipParams {
    pub beta_min: f64,
    pub beta_max: f64,
    pub momentum: f64,
    /// Relative perturbation range when the target sits above the observed price.
    pub r_up: (f64, f64),
    /// Relative perturbation range when the target sits below the observed price.
    pub r_down: (f64, f64),
    /// Largest absolute perturbation, currency units.
    pub a_max: f64,
    /// Initial seller margin range; buyers use the negated range.
    pub margin_init: (f64, f64),
}

impl Default for ZipParams {
    fn default() -> Self {
        Self {
            beta_min: 0.1,
            beta_max: 0.5,
            momentum: 0.3,
            r_up: (1.0, 1.05),
            r_down: (0.95, 1.0),
            a_max: 0.05,
            margin_init: (0.05, 0.35),
        }
    }
}

const BUYER_MARGIN_FLOOR: f64 = -0.999;

/// Zero-intelligence-plus: a profit margin on the limit price, adapted by a
/// Widrow-Hoff rule with momentum towards perturbed observed prices.
#[derive(Clone, Debug)]
pub struct Zip {
    pub margin: f64,
    pub beta: f64,
    pub momentum: f64,
    /// Momentum-smoothed price change from the last update, ticks.
    pub velocity: f64,
    params: ZipParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    /// Move the shout price above the observed price.
    Up,
    Down,
}

impl Zip {
    pub fn new<R: Rng + ?Sized>(role: Role, params: &ZipParams, rng: &mut R) -> Self {
        let beta = rng.random_range(params.beta_min..=params.beta_max);
        let m = rng.random_range(params.margin_init.0..=params.margin_init.1);
        let margin = match role {
            Role::Seller => m,
            Role::Buyer => -m,
        };
        Self { margin, beta, momentum: params.momentum, velocity: 0.0, params: params.clone() }
    }

    /// Unrounded shout price in ticks.
    pub fn shout_price(&self, limit: Price) -> f64 {
        limit.ticks() as f64 * (1.0 + self.margin)
    }

    pub fn quote(&self, role: Role, limit: Price) -> Price {
        let p = self.shout_price(limit).round() as i64;
        match role {
            Role::Buyer => Price::clamped(p.min(limit.ticks())),
            Role::Seller => Price::clamped(p.max(limit.ticks())),
        }
    }

    /// Applies the margin rules to one public event. Traders without a live
    /// assignment have no shout price and do not adapt.
    pub fn respond<R: Rng + ?Sized>(
        &mut self,
        role: Role,
        limit: Option<Price>,
        event: &MarketEvent,
        rng: &mut R,
    ) {
        let Some(limit) = limit else { return };
        let p = self.shout_price(limit);
        let dir = match (role, event) {
            (Role::Seller, MarketEvent::Trade(t)) => {
                let q = t.price.ticks() as f64;
                Some((if p <= q { Direction::Up } else { Direction::Down }, q))
            }
            (Role::Buyer, MarketEvent::Trade(t)) => {
                let q = t.price.ticks() as f64;
                Some((if p >= q { Direction::Down } else { Direction::Up }, q))
            }
            (Role::Seller, MarketEvent::Shout(s)) if !s.traded && s.side == crate::exchange::Side::Ask => {
                let q = s.price.ticks() as f64;
                (p > q).then_some((Direction::Down, q))
            }
            (Role::Buyer, MarketEvent::Shout(s)) if !s.traded && s.side == crate::exchange::Side::Bid => {
                let q = s.price.ticks() as f64;
                (p < q).then_some((Direction::Up, q))
            }
            _ => None,
        };
        if let Some((dir, q)) = dir {
            let target = self.perturbed_target(dir, q, rng);
            self.step_towards(role, limit, target);
        }
    }

    fn perturbed_target<R: Rng + ?Sized>(&self, dir: Direction, q: f64, rng: &mut R) -> f64 {
        let a = rng.random_range(0.0..=self.params.a_max) * TICKS_PER_UNIT as f64;
        match dir {
            Direction::Up => rng.random_range(self.params.r_up.0..=self.params.r_up.1) * q + a,
            Direction::Down => rng.random_range(self.params.r_down.0..=self.params.r_down.1) * q - a,
        }
    }

    /// Widrow-Hoff step with momentum towards `target`, then re-derives the margin.
    pub fn step_towards(&mut self, role: Role, limit: Price, target: f64) {
        let p = self.shout_price(limit);
        let delta = self.beta * (target - p);
        self.velocity = self.momentum * self.velocity + (1.0 - self.momentum) * delta;
        let l = limit.ticks() as f64;
        let margin = (p + self.velocity) / l - 1.0;
        self.margin = match role {
            Role::Seller => margin.max(0.0),
            Role::Buyer => margin.clamp(BUYER_MARGIN_FLOOR, 0.0),
        };
    }
}
